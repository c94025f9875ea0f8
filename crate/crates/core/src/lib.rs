//! Simulation laboratory for social goal proposals in a five-block
//! manipulation world: semantic configurations, the physically reachable
//! configuration graph, the agent's success-rate graph, the proposal
//! protocol, stand-in learners, curriculum baselines and the experiment
//! harness.

pub mod agent;
pub mod baselines;
pub mod error;
pub mod grid;
pub mod harness;
pub mod kv;
pub mod learner;
pub mod oracle;
pub mod planner;
pub mod protocol;
pub mod scalar;
pub mod semantic;

pub use error::{Error, Result};
pub use scalar::Real;
pub use semantic::{EvalClass, SemanticConfig, Space, Transition};

pub type Agent = agent::AgentGraph<f64>;
pub type EdgeStat = agent::EdgeStat<f64>;
pub type SafestTree = planner::SafestTree<f64>;
pub type Digraph = planner::Digraph<f64>;
pub type LearningCurve = learner::LearningCurve<f64>;
pub type CompetenceTable = learner::CompetenceTable<f64>;
pub type NoisyLearner = learner::NoisyLearner<f64>;
pub type Learner = learner::Learner<f64>;
pub type UncertaintyScorer = baselines::UncertaintyScorer<f64>;
pub type VdsSampler = baselines::VdsSampler<f64>;
pub type GoalSampler = harness::GoalSampler<f64>;
pub type WelchResult = harness::WelchResult<f64>;
