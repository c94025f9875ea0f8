//! Protocol invariant checker shared by the property tests and the
//! acceptance run.

use hme_core::agent::{AgentGraph, PlanParams};
use hme_core::learner::{build_learner, LearnerProfile};
use hme_core::protocol::{EpisodeKind, InternalizationBuffer, Scheduler, Session, SocialPartner, Turn, UniformGoals};
use hme_core::{SemanticConfig, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

macro_rules! ensure {
    ($cond:expr) => {
        if !$cond {
            return Err(format!("{} at line {}", stringify!($cond), line!()));
        }
    };
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

macro_rules! ensure_eq {
    ($a:expr, $b:expr) => {
        if $a != $b {
            return Err(format!("{} != {} at line {}", stringify!($a), stringify!($b), line!()));
        }
    };
}

#[derive(Debug, Clone)]
pub struct Case {
    pub objects: usize,
    pub seed: u64,
    pub social_ratio: f64,
    pub internalization: bool,
    pub profile: LearnerProfile,
    pub episodes: u64,
}

pub struct Outcome {
    pub episodes: u64,
    pub final_frontier: usize,
}

/// Runs one protocol instance and checks every invariant after every
/// episode.
pub fn check(case: &Case) -> Result<Outcome, String> {
    let oracle = super::oracle(case.objects);
    let space = Space::shared(case.objects).unwrap();
    let start = SemanticConfig::EMPTY;
    let mut learner = build_learner::<f64>(space, oracle.clone(), &case.profile).unwrap();
    let mut agent = AgentGraph::<f64>::new(space);
    agent.add_node(start);
    let mut sp = SocialPartner::new(oracle.clone());
    sp.sync(&agent);
    let mut buffer = InternalizationBuffer::new();
    let mut scheduler = Scheduler::default();
    let mut goals = UniformGoals;
    let mut rng = ChaCha8Rng::seed_from_u64(case.seed);
    let rehearsal = if case.internalization { 0.5 } else { 0.0 };
    let mut retired = false;

    for episode in 0..case.episodes {
        let before_nodes: Vec<SemanticConfig> = agent.nodes().to_vec();
        let before_frontier = sp.frontier_goals();
        let before_buffer = buffer.clone();
        if before_frontier.is_empty() {
            retired = true;
        }
        let turn = scheduler.schedule(episode, case.social_ratio, &sp, &mut rng);
        let mut session = Session {
            agent: &mut agent,
            sp: &mut sp,
            buffer: &mut buffer,
            learner: &mut learner,
            start,
            plan: PlanParams::default(),
            snapshot: None,
        };
        let log = match turn {
            Turn::Social => {
                ensure!(!retired, "social episode after the frontier emptied");
                session
                    .run_social_episode(&mut rng)
                    .unwrap()
                    .expect("non-empty frontier")
            }
            Turn::Autotelic => session.run_autotelic_episode(&mut goals, rehearsal, &mut rng).unwrap(),
        };

        // monotone discovery, views in step
        ensure!(agent.nodes().starts_with(&before_nodes));
        ensure_eq!(sp.discovered_count(), agent.node_count());
        for &c in agent.nodes() {
            ensure!(oracle.is_reachable(c));
            ensure!(sp.is_discovered(c));
        }

        match log.kind {
            EpisodeKind::Social => {
                let frontier = SemanticConfig::from_bits(log.goals[0]);
                ensure!(before_frontier.contains(&frontier));
                ensure!(log.goals.len() <= 2);
                if log.goals.len() == 2 {
                    // beyond only once the frontier was reached
                    let beyond = SemanticConfig::from_bits(log.goals[1]);
                    let last = log.hops.last().expect("beyond hop");
                    ensure_eq!(last.from, frontier.bits());
                    ensure_eq!(last.to, beyond.bits());
                    ensure!(oracle.has_edge(frontier, beyond));
                    ensure!(!before_nodes.contains(&beyond));
                    ensure_eq!(log.reached, last.achieved == beyond.bits());
                    if log.reached {
                        ensure_eq!(&buffer, &before_buffer);
                    } else {
                        ensure!(buffer.contains(frontier, beyond));
                        ensure!(buffer.len() <= before_buffer.len() + 1);
                    }
                } else {
                    ensure_eq!(&buffer, &before_buffer);
                    // no beyond: either the frontier was missed or it has no
                    // undiscovered neighbor left
                    if log.reached {
                        ensure!(oracle.neighbors(frontier).all(|b| sp.is_discovered(b)));
                    }
                }
            }
            EpisodeKind::AutotelicRehearsal => {
                ensure!(case.internalization);
                ensure!(buffer.len() <= before_buffer.len());
                for p in buffer.pairs() {
                    ensure!(before_buffer.contains(p.0, p.1));
                }
            }
            EpisodeKind::AutotelicUniform => {
                ensure_eq!(&buffer, &before_buffer);
            }
        }
        for &(f, b) in buffer.pairs() {
            ensure!(oracle.has_edge(f, b));
        }
    }
    Ok(Outcome {
        episodes: case.episodes,
        final_frontier: sp.frontier_len(),
    })
}
