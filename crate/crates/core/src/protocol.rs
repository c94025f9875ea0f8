//! Social partner, internalization buffer and the episode state machine.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::agent::{AgentGraph, Path, PlanMode, PlanParams};
use crate::error::{Error, Result};
use crate::learner::LearnerModel;
use crate::oracle::OracleGraph;
use crate::planner::SafestTree;
use crate::scalar::Real;
use crate::semantic::SemanticConfig;

pub const DEFAULT_INTERNALIZATION_PROB: f64 = 0.5;

/// Knows the whole oracle graph and mirrors what the agent has discovered.
#[derive(Clone, Debug)]
pub struct SocialPartner {
    oracle: Arc<OracleGraph>,
    incoming: Vec<Vec<u32>>,
    discovered: Vec<bool>,
    discovered_count: usize,
    undiscovered_out: Vec<u32>,
    frontier: Vec<u32>,
    // position of a node in `frontier`, or u32::MAX
    slot: Vec<u32>,
    synced: usize,
}

impl SocialPartner {
    pub fn new(oracle: Arc<OracleGraph>) -> Self {
        let n = oracle.node_count();
        let mut incoming = vec![Vec::new(); n];
        let mut undiscovered_out = vec![0u32; n];
        for v in 0..n as u32 {
            let adj = oracle.neighbor_indices(v);
            undiscovered_out[v as usize] = adj.len() as u32;
            for &w in adj {
                incoming[w as usize].push(v);
            }
        }
        SocialPartner {
            oracle,
            incoming,
            discovered: vec![false; n],
            discovered_count: 0,
            undiscovered_out,
            frontier: Vec::new(),
            slot: vec![u32::MAX; n],
            synced: 0,
        }
    }

    pub fn oracle(&self) -> &Arc<OracleGraph> {
        &self.oracle
    }

    pub fn is_discovered(&self, c: SemanticConfig) -> bool {
        self.oracle.index_of(c).is_some_and(|i| self.discovered[i as usize])
    }

    pub fn discovered_count(&self) -> usize {
        self.discovered_count
    }

    /// Number of stepping stones.
    pub fn frontier_len(&self) -> usize {
        self.frontier.len()
    }

    /// Discovered configurations with at least one undiscovered neighbor,
    /// sorted.
    pub fn frontier_goals(&self) -> Vec<SemanticConfig> {
        let mut out: Vec<SemanticConfig> = self.frontier.iter().map(|&v| self.oracle.node(v)).collect();
        out.sort_unstable();
        out
    }

    fn frontier_insert(&mut self, v: u32) {
        if self.slot[v as usize] == u32::MAX {
            self.slot[v as usize] = self.frontier.len() as u32;
            self.frontier.push(v);
        }
    }

    fn frontier_remove(&mut self, v: u32) {
        let at = self.slot[v as usize];
        if at == u32::MAX {
            return;
        }
        self.frontier.swap_remove(at as usize);
        if let Some(&moved) = self.frontier.get(at as usize) {
            self.slot[moved as usize] = at;
        }
        self.slot[v as usize] = u32::MAX;
    }

    /// Mark `c` discovered. Returns `false` if it already was, or is not an
    /// oracle node.
    pub fn discover(&mut self, c: SemanticConfig) -> bool {
        let Some(v) = self.oracle.index_of(c) else {
            return false;
        };
        if self.discovered[v as usize] {
            return false;
        }
        self.discovered[v as usize] = true;
        self.discovered_count += 1;
        for i in 0..self.incoming[v as usize].len() {
            let u = self.incoming[v as usize][i];
            self.undiscovered_out[u as usize] -= 1;
            if self.undiscovered_out[u as usize] == 0 {
                self.frontier_remove(u);
            }
        }
        if self.undiscovered_out[v as usize] > 0 {
            self.frontier_insert(v);
        }
        true
    }

    /// Pull in every node the agent added since the last sync.
    pub fn sync<F: Real>(&mut self, agent: &AgentGraph<F>) {
        let nodes = agent.nodes();
        for &c in &nodes[self.synced.min(nodes.len())..] {
            self.discover(c);
        }
        self.synced = nodes.len();
    }

    fn undiscovered_neighbors(&self, v: u32) -> Vec<u32> {
        self.oracle
            .neighbor_indices(v)
            .iter()
            .copied()
            .filter(|&w| !self.discovered[w as usize])
            .collect()
    }

    /// A uniform stepping stone, or `None` when the social phase is over.
    pub fn propose_frontier(&self, rng: &mut dyn RngCore) -> Option<SemanticConfig> {
        if self.frontier.is_empty() {
            return None;
        }
        // sort so the draw does not depend on insertion history
        let goals = self.frontier_goals();
        Some(goals[rng.gen_range(0..goals.len())])
    }

    /// A uniform undiscovered neighbor of `frontier`.
    pub fn propose_beyond(&self, frontier: SemanticConfig, rng: &mut dyn RngCore) -> Option<SemanticConfig> {
        let v = self.oracle.index_of(frontier)?;
        let options = self.undiscovered_neighbors(v);
        if options.is_empty() {
            return None;
        }
        Some(self.oracle.node(options[rng.gen_range(0..options.len())]))
    }

    pub fn propose(&self, rng: &mut dyn RngCore) -> Option<(SemanticConfig, SemanticConfig)> {
        let frontier = self.propose_frontier(rng)?;
        let beyond = self.propose_beyond(frontier, rng)?;
        Some((frontier, beyond))
    }
}

/// Failed social proposals kept for rehearsal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InternalizationBuffer {
    pairs: Vec<(SemanticConfig, SemanticConfig)>,
}

impl InternalizationBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(SemanticConfig, SemanticConfig)] {
        &self.pairs
    }

    pub fn contains(&self, frontier: SemanticConfig, beyond: SemanticConfig) -> bool {
        self.pairs.contains(&(frontier, beyond))
    }

    pub fn store(&mut self, frontier: SemanticConfig, beyond: SemanticConfig) -> bool {
        if self.contains(frontier, beyond) {
            return false;
        }
        self.pairs.push((frontier, beyond));
        true
    }

    pub fn remove(&mut self, frontier: SemanticConfig, beyond: SemanticConfig) -> bool {
        match self.pairs.iter().position(|&p| p == (frontier, beyond)) {
            Some(i) => {
                self.pairs.remove(i);
                true
            }
            None => false,
        }
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Option<(SemanticConfig, SemanticConfig)> {
        if self.pairs.is_empty() {
            return None;
        }
        Some(self.pairs[rng.gen_range(0..self.pairs.len())])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeKind {
    Social,
    AutotelicUniform,
    AutotelicRehearsal,
}

/// Who picks the goal of the next episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Turn {
    Social,
    Autotelic,
}

/// Bernoulli choice between social and autotelic episodes. Once the
/// partner has nothing left to propose it retires for good.
#[derive(Clone, Debug, Default)]
pub struct Scheduler {
    retired_at: Option<u64>,
}

impl Scheduler {
    pub fn retired_at(&self) -> Option<u64> {
        self.retired_at
    }

    pub fn schedule(&mut self, episode: u64, social_ratio: f64, sp: &SocialPartner, rng: &mut dyn RngCore) -> Turn {
        if self.retired_at.is_none() && sp.frontier_len() == 0 {
            self.retired_at = Some(episode);
        }
        if self.retired_at.is_some() || social_ratio <= 0.0 {
            return Turn::Autotelic;
        }
        if social_ratio >= 1.0 || rng.gen_bool(social_ratio) {
            Turn::Social
        } else {
            Turn::Autotelic
        }
    }
}

/// Stateless form of [`Scheduler::schedule`].
pub fn schedule(social_ratio: f64, sp: &SocialPartner, rng: &mut dyn RngCore) -> Turn {
    Scheduler::default().schedule(0, social_ratio, sp, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HopLog {
    pub from: u32,
    pub to: u32,
    pub achieved: u32,
    pub success: bool,
}

/// One line of the episode stream. Configurations are written as their
/// bit patterns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeLog {
    pub episode: u64,
    pub kind: EpisodeKind,
    pub goals: Vec<u32>,
    pub hops: Vec<HopLog>,
    pub reached: bool,
    pub buffer_size: usize,
    pub discovered: usize,
    pub stepping_stones: usize,
}

impl EpisodeLog {
    fn new(kind: EpisodeKind) -> Self {
        EpisodeLog {
            episode: 0,
            kind,
            goals: Vec::new(),
            hops: Vec::new(),
            reached: false,
            buffer_size: 0,
            discovered: 0,
            stepping_stones: 0,
        }
    }

    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n").map_err(|e| Error::io("<episode stream>", e))
    }
}

/// Picks autotelic goals among discovered configurations.
pub trait GoalSource<F: Real> {
    fn sample_goal(&mut self, agent: &AgentGraph<F>, rng: &mut dyn RngCore) -> Result<SemanticConfig>;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct UniformGoals;

impl<F: Real> GoalSource<F> for UniformGoals {
    fn sample_goal(&mut self, agent: &AgentGraph<F>, rng: &mut dyn RngCore) -> Result<SemanticConfig> {
        agent.sample_goal_uniform(rng)
    }
}

/// Run one learner attempt and fold what happened into the agent graph.
pub fn attempt_hop<F: Real, L: LearnerModel + ?Sized>(
    agent: &mut AgentGraph<F>,
    learner: &mut L,
    current: SemanticConfig,
    subgoal: SemanticConfig,
    rng: &mut dyn RngCore,
    log: &mut EpisodeLog,
) -> Result<SemanticConfig> {
    let result = learner.attempt(current, subgoal, rng);
    if current != subgoal {
        agent.record_outcome(current, subgoal, result.success)?;
    }
    if result.achieved != current && !result.success {
        agent.observe_transition(current, result.achieved)?;
    }
    for &side in &result.side_discoveries {
        if side != result.achieved {
            agent.observe_transition(result.achieved, side)?;
        }
    }
    log.hops.push(HopLog {
        from: current.bits(),
        to: subgoal.bits(),
        achieved: result.achieved.bits(),
        success: result.success,
    });
    Ok(result.achieved)
}

/// Follow a decomposition, stopping at the first failed hop. Returns the
/// configuration the learner ends in.
pub fn execute_path<F: Real, L: LearnerModel + ?Sized>(
    agent: &mut AgentGraph<F>,
    learner: &mut L,
    path: &Path,
    rng: &mut dyn RngCore,
    log: &mut EpisodeLog,
) -> Result<SemanticConfig> {
    let mut current = path.start;
    for &subgoal in &path.subgoals {
        current = attempt_hop(agent, learner, current, subgoal, rng, log)?;
        if current != subgoal {
            break;
        }
    }
    Ok(current)
}

/// Plan from `start` to `goal` and execute. A goal the agent cannot plan
/// to is attempted directly.
#[allow(clippy::too_many_arguments)]
fn pursue<F: Real, L: LearnerModel + ?Sized>(
    agent: &mut AgentGraph<F>,
    learner: &mut L,
    start: SemanticConfig,
    goal: SemanticConfig,
    plan: &PlanParams,
    snapshot: Option<&SafestTree<F>>,
    rng: &mut dyn RngCore,
    log: &mut EpisodeLog,
) -> Result<SemanticConfig> {
    log.goals.push(goal.bits());
    if start == goal {
        return Ok(start);
    }
    let path = match agent.sample_path_with(start, goal, PlanMode::Train, plan, snapshot, rng) {
        Ok(p) => p,
        Err(Error::NoPath { .. }) => Path {
            start,
            subgoals: vec![goal],
        },
        Err(e) => return Err(e),
    };
    execute_path(agent, learner, &path, rng, log)
}

/// Shared state of one protocol instance.
pub struct Session<'a, F: Real, L: LearnerModel + ?Sized> {
    pub agent: &'a mut AgentGraph<F>,
    pub sp: &'a mut SocialPartner,
    pub buffer: &'a mut InternalizationBuffer,
    pub learner: &'a mut L,
    pub start: SemanticConfig,
    pub plan: PlanParams,
    /// Safest tree from `start` grown at the beginning of the cycle.
    pub snapshot: Option<&'a SafestTree<F>>,
}

impl<F: Real, L: LearnerModel + ?Sized> Session<'_, F, L> {
    fn finish(&mut self, mut log: EpisodeLog) -> EpisodeLog {
        self.sp.sync(self.agent);
        log.buffer_size = self.buffer.len();
        log.discovered = self.agent.node_count();
        log.stepping_stones = self.sp.frontier_len();
        log
    }

    /// Frontier goal, then beyond goal if the frontier was reached. A
    /// failed beyond goal is stored for rehearsal. `None` when there is
    /// nothing to propose.
    pub fn run_social_episode(&mut self, rng: &mut dyn RngCore) -> Result<Option<EpisodeLog>> {
        self.agent.add_node(self.start);
        self.sp.sync(self.agent);
        let Some(frontier) = self.sp.propose_frontier(rng) else {
            return Ok(None);
        };
        let mut log = EpisodeLog::new(EpisodeKind::Social);
        let at = pursue(
            self.agent,
            self.learner,
            self.start,
            frontier,
            &self.plan,
            self.snapshot,
            rng,
            &mut log,
        )?;
        if at == frontier {
            // the frontier attempt may itself have uncovered neighbors
            self.sp.sync(self.agent);
            if let Some(beyond) = self.sp.propose_beyond(frontier, rng) {
                log.goals.push(beyond.bits());
                let end = attempt_hop(self.agent, self.learner, frontier, beyond, rng, &mut log)?;
                log.reached = end == beyond;
                if !log.reached {
                    self.buffer.store(frontier, beyond);
                }
            } else {
                log.reached = true;
            }
        }
        Ok(Some(self.finish(log)))
    }

    /// Rehearse a stored pair with probability `internalization_prob`,
    /// otherwise pursue a goal from `goals`. A rehearsed pair whose beyond
    /// goal is reached leaves the buffer.
    pub fn run_autotelic_episode<G: GoalSource<F> + ?Sized>(
        &mut self,
        goals: &mut G,
        internalization_prob: f64,
        rng: &mut dyn RngCore,
    ) -> Result<EpisodeLog> {
        self.agent.add_node(self.start);
        let rehearse = !self.buffer.is_empty() && internalization_prob > 0.0 && rng.gen_bool(internalization_prob);
        if rehearse {
            let (frontier, beyond) = self.buffer.sample(rng).expect("non-empty buffer");
            let mut log = EpisodeLog::new(EpisodeKind::AutotelicRehearsal);
            let at = pursue(
                self.agent,
                self.learner,
                self.start,
                frontier,
                &self.plan,
                self.snapshot,
                rng,
                &mut log,
            )?;
            if at == frontier {
                log.goals.push(beyond.bits());
                let end = attempt_hop(self.agent, self.learner, frontier, beyond, rng, &mut log)?;
                log.reached = end == beyond;
                if log.reached {
                    self.buffer.remove(frontier, beyond);
                }
            }
            return Ok(self.finish(log));
        }
        let mut log = EpisodeLog::new(EpisodeKind::AutotelicUniform);
        let goal = goals.sample_goal(self.agent, rng)?;
        if goal == self.start {
            log.goals.push(goal.bits());
            let result = self.learner.explore(self.start, rng);
            if result.achieved != self.start {
                self.agent.observe_transition(self.start, result.achieved)?;
            }
            log.reached = true;
        } else {
            let end = pursue(
                self.agent,
                self.learner,
                self.start,
                goal,
                &self.plan,
                self.snapshot,
                rng,
                &mut log,
            )?;
            log.reached = end == goal;
        }
        Ok(self.finish(log))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::{AttemptResult, OracleLearner};
    use crate::semantic::{Predicate, Space};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // r - a - b, plus r - c
    fn small() -> (&'static Space, Arc<OracleGraph>, [SemanticConfig; 4]) {
        let space = Space::shared(3).unwrap();
        let r = SemanticConfig::EMPTY;
        let a = space.set(r, Predicate::Close, 0, 1, true);
        let b = space.set(a, Predicate::Above, 0, 1, true);
        let c = space.set(r, Predicate::Close, 1, 2, true);
        let edges = [(r, a), (a, r), (a, b), (b, a), (r, c), (c, r)];
        let oracle = OracleGraph::from_edges(3, [r, a, b, c], edges).unwrap();
        (space, Arc::new(oracle), [r, a, b, c])
    }

    #[test]
    fn frontier_definition() {
        let (_, oracle, [r, a, b, c]) = small();
        let mut sp = SocialPartner::new(oracle);
        sp.discover(r);
        assert_eq!(sp.frontier_goals(), vec![r]);
        sp.discover(a);
        let mut expect = vec![r, a];
        expect.sort();
        assert_eq!(sp.frontier_goals(), expect);
        sp.discover(c);
        assert_eq!(sp.frontier_goals(), vec![a]);
        sp.discover(b);
        assert!(sp.frontier_goals().is_empty());
        assert!(sp.propose(&mut ChaCha8Rng::seed_from_u64(0)).is_none());
    }

    #[test]
    fn single_candidate_proposal() {
        let (_, oracle, [r, a, b, c]) = small();
        let mut sp = SocialPartner::new(oracle);
        for x in [r, a, c] {
            sp.discover(x);
        }
        assert_eq!(sp.propose(&mut ChaCha8Rng::seed_from_u64(1)), Some((a, b)));
    }

    #[test]
    fn oracle_learner_social_success() {
        let (space, oracle, [r, ..]) = small();
        let mut agent = AgentGraph::<f64>::new(space);
        let mut sp = SocialPartner::new(oracle.clone());
        let mut buffer = InternalizationBuffer::new();
        let mut learner = OracleLearner::new(oracle.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = Session {
            agent: &mut agent,
            sp: &mut sp,
            buffer: &mut buffer,
            learner: &mut learner,
            start: r,
            plan: PlanParams::default(),
            snapshot: None,
        };
        let mut runs = 0;
        while let Some(log) = s.run_social_episode(&mut rng).unwrap() {
            assert!(log.reached);
            runs += 1;
        }
        assert_eq!(runs, 3);
        assert!(buffer.is_empty());
        assert_eq!(agent.node_count(), 4);
    }

    struct Refuses(SemanticConfig, Arc<OracleGraph>);

    impl LearnerModel for Refuses {
        fn attempt(&mut self, current: SemanticConfig, subgoal: SemanticConfig, _: &mut dyn RngCore) -> AttemptResult {
            let ok = subgoal != self.0 && (current == subgoal || self.1.has_edge(current, subgoal));
            AttemptResult {
                achieved: if ok { subgoal } else { current },
                success: ok,
                side_discoveries: Vec::new(),
            }
        }
        fn explore(&mut self, current: SemanticConfig, _: &mut dyn RngCore) -> AttemptResult {
            AttemptResult {
                achieved: current,
                success: false,
                side_discoveries: Vec::new(),
            }
        }
        fn competent(&self, current: SemanticConfig, subgoal: SemanticConfig) -> bool {
            subgoal != self.0 && (current == subgoal || self.1.has_edge(current, subgoal))
        }
    }

    #[test]
    fn failed_beyond_is_buffered_once() {
        let (space, oracle, [r, a, b, c]) = small();
        let mut agent = AgentGraph::<f64>::new(space);
        for x in [r, a, c] {
            agent.add_node(x);
        }
        agent.observe_transition(r, a).unwrap();
        agent.observe_transition(r, c).unwrap();
        let mut sp = SocialPartner::new(oracle.clone());
        let mut buffer = InternalizationBuffer::new();
        let mut learner = Refuses(b, oracle);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = Session {
            agent: &mut agent,
            sp: &mut sp,
            buffer: &mut buffer,
            learner: &mut learner,
            start: r,
            plan: PlanParams::default(),
            snapshot: None,
        };
        let log = s.run_social_episode(&mut rng).unwrap().unwrap();
        assert_eq!(log.goals, vec![a.bits(), b.bits()]);
        assert!(!log.reached);
        assert_eq!(buffer.pairs(), &[(a, b)]);
    }

    #[test]
    fn failed_frontier_proposes_no_beyond() {
        let (space, oracle, [r, a, b, c]) = small();
        let mut agent = AgentGraph::<f64>::new(space);
        agent.observe_transition(r, a).unwrap();
        agent.observe_transition(r, c).unwrap();
        let mut sp = SocialPartner::new(oracle.clone());
        let mut buffer = InternalizationBuffer::new();
        let mut learner = Refuses(a, oracle);
        let mut s = Session {
            agent: &mut agent,
            sp: &mut sp,
            buffer: &mut buffer,
            learner: &mut learner,
            start: r,
            plan: PlanParams::default(),
            snapshot: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let log = s.run_social_episode(&mut rng).unwrap().unwrap();
        assert_eq!(log.goals, vec![a.bits()]);
        assert!(buffer.is_empty());
        let _ = b;
    }

    #[test]
    fn rehearsal_success_empties_buffer() {
        let (space, oracle, [r, a, b, _]) = small();
        let mut agent = AgentGraph::<f64>::new(space);
        agent.observe_transition(r, a).unwrap();
        let mut sp = SocialPartner::new(oracle.clone());
        let mut buffer = InternalizationBuffer::new();
        buffer.store(a, b);
        let mut learner = OracleLearner::new(oracle);
        let mut s = Session {
            agent: &mut agent,
            sp: &mut sp,
            buffer: &mut buffer,
            learner: &mut learner,
            start: r,
            plan: PlanParams::default(),
            snapshot: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let log = s.run_autotelic_episode(&mut UniformGoals, 1.0, &mut rng).unwrap();
        assert_eq!(log.kind, EpisodeKind::AutotelicRehearsal);
        assert!(log.reached);
        assert!(buffer.is_empty());
        assert!(agent.contains(b));
    }

    #[test]
    fn scheduler_extremes_and_retirement() {
        let (_, oracle, nodes) = small();
        let mut sp = SocialPartner::new(oracle);
        sp.discover(nodes[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut sched = Scheduler::default();
        assert!((0..100).all(|t| sched.schedule(t, 0.0, &sp, &mut rng) == Turn::Autotelic));
        assert!((0..100).all(|t| sched.schedule(t, 1.0, &sp, &mut rng) == Turn::Social));
        for &n in &nodes {
            sp.discover(n);
        }
        assert_eq!(sched.schedule(100, 1.0, &sp, &mut rng), Turn::Autotelic);
        assert_eq!(sched.retired_at(), Some(100));
    }

    #[test]
    fn log_line_is_json() {
        let mut log = EpisodeLog::new(EpisodeKind::Social);
        log.goals.push(3);
        let mut out = Vec::new();
        log.write_ndjson(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.ends_with('\n'));
        assert!(text.starts_with("{\"episode\":0,\"kind\":\"social\",\"goals\":[3]"));
    }
}
