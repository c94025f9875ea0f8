//! The agent's semantic graph.
//!
//! Edge statistics are stored once per relabeling orbit of a transition.
//! The labeled adjacency holds every image of a known transition whose two
//! endpoints have been discovered, so planning sees all of them while the
//! success-rate estimate is pooled.

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planner::{self, PlanGraph, SafestTree};
use crate::scalar::Real;
use crate::semantic::{SemanticConfig, Space, Transition};

pub const AGENT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_EDGE_PRIOR: f64 = 0.5;
pub const DEFAULT_EMA_ALPHA: f64 = 0.01;
pub const DEFAULT_K_SHORTEST: usize = 5;
pub const DEFAULT_MAX_SUBGOALS: usize = 10;
pub const DEFAULT_SAFEST_RATIO: f64 = 0.5;
pub const SR_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeStat<F> {
    pub sr: F,
    pub outcome_count: u64,
}

/// Goal decomposition settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanParams {
    pub k_shortest: usize,
    pub safest_ratio: f64,
    pub max_subgoals: usize,
}

impl Default for PlanParams {
    fn default() -> Self {
        PlanParams {
            k_shortest: DEFAULT_K_SHORTEST,
            safest_ratio: DEFAULT_SAFEST_RATIO,
            max_subgoals: DEFAULT_MAX_SUBGOALS,
        }
    }
}

/// Planning mode for [`AgentGraph::sample_path`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    Train,
    Test,
}

/// A decomposition of a goal into sub-goals.
///
/// `subgoals` ends with the goal. After truncation the first sub-goal need
/// not be adjacent to `start`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub start: SemanticConfig,
    pub subgoals: Vec<SemanticConfig>,
}

impl Path {
    pub fn trivial(at: SemanticConfig) -> Self {
        Path {
            start: at,
            subgoals: Vec::new(),
        }
    }

    pub fn from_sequence(seq: &[SemanticConfig]) -> Self {
        Path {
            start: seq[0],
            subgoals: seq[1..].to_vec(),
        }
    }

    pub fn hops(&self) -> usize {
        self.subgoals.len()
    }

    pub fn goal(&self) -> SemanticConfig {
        self.subgoals.last().copied().unwrap_or(self.start)
    }

    /// `start` followed by every sub-goal.
    pub fn sequence(&self) -> Vec<SemanticConfig> {
        std::iter::once(self.start)
            .chain(self.subgoals.iter().copied())
            .collect()
    }

    /// Keep the last `max` sub-goals.
    pub fn truncated(mut self, max: usize) -> Self {
        if self.subgoals.len() > max {
            self.subgoals.drain(..self.subgoals.len() - max);
        }
        self
    }
}

#[derive(Clone, Debug)]
pub struct AgentGraph<F: Real = f64> {
    space: &'static Space,
    alpha: F,
    prior: F,
    nodes: Vec<SemanticConfig>,
    index: FxHashMap<SemanticConfig, u32>,
    // (target, stat id), sorted by target config
    out: Vec<Vec<(u32, u32)>>,
    incoming: Vec<Vec<u32>>,
    /// Planner order keys, parallel to `nodes`.
    order: Vec<u32>,
    stats: Vec<EdgeStat<F>>,
    weights: Vec<F>,
    canonical: Vec<Transition>,
    stat_index: FxHashMap<Transition, u32>,
    by_from: FxHashMap<SemanticConfig, Vec<u32>>,
    by_to_orbit: FxHashMap<SemanticConfig, Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    from: String,
    to: String,
    sr: f64,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct AgentDocument {
    version: u32,
    objects: usize,
    alpha: f64,
    prior: f64,
    nodes: Vec<String>,
    edges: Vec<EdgeRecord>,
}

impl<F: Real> AgentGraph<F> {
    pub fn new(space: &'static Space) -> Self {
        Self::with_params(space, F::lit(DEFAULT_EMA_ALPHA), F::lit(DEFAULT_EDGE_PRIOR))
    }

    pub fn with_params(space: &'static Space, alpha: F, prior: F) -> Self {
        AgentGraph {
            space,
            alpha,
            prior,
            nodes: Vec::new(),
            index: FxHashMap::default(),
            out: Vec::new(),
            incoming: Vec::new(),
            order: Vec::new(),
            stats: Vec::new(),
            weights: Vec::new(),
            canonical: Vec::new(),
            stat_index: FxHashMap::default(),
            by_from: FxHashMap::default(),
            by_to_orbit: FxHashMap::default(),
        }
    }

    pub fn space(&self) -> &'static Space {
        self.space
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn prior(&self) -> F {
        self.prior
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of labeled edges between discovered nodes.
    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    /// Number of pooled (orbit-canonical) edge statistics.
    pub fn canonical_edge_count(&self) -> usize {
        self.stats.len()
    }

    /// Nodes in discovery order.
    pub fn nodes(&self) -> &[SemanticConfig] {
        &self.nodes
    }

    pub fn contains(&self, c: SemanticConfig) -> bool {
        self.index.contains_key(&c)
    }

    pub fn index_of(&self, c: SemanticConfig) -> Option<u32> {
        self.index.get(&c).copied()
    }

    pub fn has_edge(&self, from: SemanticConfig, to: SemanticConfig) -> bool {
        self.edge_stat_id(from, to).is_some()
    }

    pub fn neighbors(&self, c: SemanticConfig) -> impl Iterator<Item = SemanticConfig> + '_ {
        let list: &[(u32, u32)] = match self.index_of(c) {
            Some(i) => &self.out[i as usize],
            None => &[],
        };
        list.iter().map(|&(j, _)| self.nodes[j as usize])
    }

    /// Labeled edges with their pooled statistics.
    pub fn edges(&self) -> impl Iterator<Item = (SemanticConfig, SemanticConfig, EdgeStat<F>)> + '_ {
        self.out.iter().enumerate().flat_map(move |(i, list)| {
            list.iter()
                .map(move |&(j, s)| (self.nodes[i], self.nodes[j as usize], self.stats[s as usize]))
        })
    }

    /// Canonical transitions with their statistics, in creation order.
    pub fn canonical_edges(&self) -> impl Iterator<Item = (Transition, EdgeStat<F>)> + '_ {
        self.canonical.iter().copied().zip(self.stats.iter().copied())
    }

    /// Id of the pooled statistic behind a labeled edge. Ids are dense and
    /// stable; see [`AgentGraph::stat_count`].
    pub fn stat_id(&self, from: SemanticConfig, to: SemanticConfig) -> Option<u32> {
        self.edge_stat_id(from, to)
    }

    pub fn stat_count(&self) -> usize {
        self.stats.len()
    }

    pub fn stat(&self, id: u32) -> EdgeStat<F> {
        self.stats[id as usize]
    }

    fn edge_stat_id(&self, from: SemanticConfig, to: SemanticConfig) -> Option<u32> {
        let a = self.index_of(from)?;
        let list = &self.out[a as usize];
        list.binary_search_by(|&(j, _)| self.nodes[j as usize].cmp(&to))
            .ok()
            .map(|pos| list[pos].1)
    }

    /// Add `c` as discovered; returns its index and whether it is new.
    pub fn add_node(&mut self, c: SemanticConfig) -> (u32, bool) {
        if let Some(&i) = self.index.get(&c) {
            return (i, false);
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(c);
        self.index.insert(c, id);
        self.out.push(Vec::new());
        self.incoming.push(Vec::new());
        self.order.push(c.lex_key());

        let space = self.space;
        let perms = space.permutation_count();
        let rep = space.orbit_representative(c);
        let mut links: Vec<(u32, u32, u32)> = Vec::new();
        if let Some(ids) = self.by_from.get(&rep) {
            for &s in ids {
                let t = self.canonical[s as usize];
                for k in 0..perms {
                    if space.apply_indexed(t.from, k) == c {
                        if let Some(&b) = self.index.get(&space.apply_indexed(t.to, k)) {
                            links.push((id, b, s));
                        }
                    }
                }
            }
        }
        if let Some(ids) = self.by_to_orbit.get(&rep) {
            for &s in ids {
                let t = self.canonical[s as usize];
                for k in 0..perms {
                    if space.apply_indexed(t.to, k) == c {
                        if let Some(&a) = self.index.get(&space.apply_indexed(t.from, k)) {
                            links.push((a, id, s));
                        }
                    }
                }
            }
        }
        for (a, b, s) in links {
            self.link(a, b, s);
        }
        (id, true)
    }

    fn link(&mut self, a: u32, b: u32, stat: u32) {
        let target = self.nodes[b as usize];
        let nodes = &self.nodes;
        let list = &mut self.out[a as usize];
        if let Err(pos) = list.binary_search_by(|&(j, _)| nodes[j as usize].cmp(&target)) {
            list.insert(pos, (b, stat));
            self.incoming[b as usize].push(a);
        }
    }

    fn ensure_stat(&mut self, from: SemanticConfig, to: SemanticConfig) -> u32 {
        let space = self.space;
        let canon = space.canonical_transition(Transition::new(from, to));
        if let Some(&s) = self.stat_index.get(&canon) {
            return s;
        }
        let s = self.stats.len() as u32;
        self.stats.push(EdgeStat {
            sr: self.prior,
            outcome_count: 0,
        });
        self.weights.push(weight(self.prior));
        self.canonical.push(canon);
        self.stat_index.insert(canon, s);
        self.by_from.entry(canon.from).or_default().push(s);
        self.by_to_orbit
            .entry(space.orbit_representative(canon.to))
            .or_default()
            .push(s);
        let mut links = Vec::new();
        for k in 0..space.permutation_count() {
            let a = self.index.get(&space.apply_indexed(canon.from, k));
            let b = self.index.get(&space.apply_indexed(canon.to, k));
            if let (Some(&a), Some(&b)) = (a, b) {
                links.push((a, b));
            }
        }
        for (a, b) in links {
            self.link(a, b, s);
        }
        s
    }

    /// Register an experienced transition without an outcome. Returns
    /// `false` when the attention filter rejects it.
    pub fn observe_transition(&mut self, from: SemanticConfig, to: SemanticConfig) -> Result<bool> {
        if from == to {
            return Err(Error::EmptyTransition);
        }
        self.add_node(from);
        self.add_node(to);
        if !self.space.is_single_object(from, to) {
            return Ok(false);
        }
        self.ensure_stat(from, to);
        Ok(true)
    }

    /// EMA update of the pooled statistic. `None` when the transition moves
    /// more than one object; nothing is stored in that case.
    pub fn record_outcome(
        &mut self,
        from: SemanticConfig,
        to: SemanticConfig,
        success: bool,
    ) -> Result<Option<EdgeStat<F>>> {
        if from == to {
            return Err(Error::EmptyTransition);
        }
        if !self.space.is_single_object(from, to) {
            return Ok(None);
        }
        self.add_node(from);
        self.add_node(to);
        let s = self.ensure_stat(from, to) as usize;
        let outcome = if success { F::one() } else { F::zero() };
        let stat = &mut self.stats[s];
        stat.sr = (F::one() - self.alpha) * stat.sr + self.alpha * outcome;
        stat.outcome_count += 1;
        self.weights[s] = weight(stat.sr);
        Ok(Some(*stat))
    }

    /// Pooled success rate, or the prior for an unknown transition.
    pub fn lookup_sr(&self, from: SemanticConfig, to: SemanticConfig) -> Result<F> {
        if from == to {
            return Err(Error::EmptyTransition);
        }
        Ok(self.lookup_stat(from, to).map_or(self.prior, |s| s.sr))
    }

    pub fn lookup_stat(&self, from: SemanticConfig, to: SemanticConfig) -> Option<EdgeStat<F>> {
        if let Some(s) = self.edge_stat_id(from, to) {
            return Some(self.stats[s as usize]);
        }
        if from == to {
            return None;
        }
        let canon = self.space.canonical_transition(Transition::new(from, to));
        self.stat_index.get(&canon).map(|&s| self.stats[s as usize])
    }

    fn node_pair(&self, src: SemanticConfig, goal: SemanticConfig) -> Result<(u32, u32)> {
        match (self.index_of(src), self.index_of(goal)) {
            (Some(s), Some(g)) => Ok((s, g)),
            _ => Err(self.no_path(src, goal)),
        }
    }

    fn no_path(&self, src: SemanticConfig, goal: SemanticConfig) -> Error {
        Error::NoPath {
            from: self.space.format(src),
            to: self.space.format(goal),
        }
    }

    /// Path maximizing the product of pooled success rates.
    pub fn safest_path(&self, src: SemanticConfig, goal: SemanticConfig) -> Result<Path> {
        let (s, g) = self.node_pair(src, goal)?;
        if s == g {
            return Ok(Path::trivial(src));
        }
        let tree = planner::dijkstra(self, s, Some(g));
        self.tree_path(&tree, goal).ok_or_else(|| self.no_path(src, goal))
    }

    pub fn safest_tree(&self, src: SemanticConfig) -> Result<SafestTree<F>> {
        let s = self.index_of(src).ok_or(Error::EmptyGraph)?;
        Ok(planner::dijkstra(self, s, None))
    }

    /// Path to `goal` in a precomputed tree.
    pub fn tree_path(&self, tree: &SafestTree<F>, goal: SemanticConfig) -> Option<Path> {
        let nodes = tree.path_to(self.index_of(goal)?)?;
        Some(self.path_of(&nodes))
    }

    fn path_of(&self, nodes: &[u32]) -> Path {
        Path {
            start: self.nodes[nodes[0] as usize],
            subgoals: nodes[1..].iter().map(|&v| self.nodes[v as usize]).collect(),
        }
    }

    /// Sum of `-ln(clamp(sr))` along consecutive hops of `seq`.
    pub fn path_cost(&self, seq: &[SemanticConfig]) -> Option<F> {
        let mut total = F::zero();
        for w in seq.windows(2) {
            total = total + weight(self.lookup_stat(w[0], w[1])?.sr);
        }
        Some(total)
    }

    /// Up to `k` loop-free paths of least hop count, ties in lexicographic
    /// order of the config sequence.
    pub fn k_shortest_paths(&self, src: SemanticConfig, goal: SemanticConfig, k: usize) -> Result<Vec<Path>> {
        let (s, g) = self.node_pair(src, goal)?;
        let paths = planner::k_shortest_paths(self, s, g, k);
        if paths.is_empty() && k > 0 {
            return Err(self.no_path(src, goal));
        }
        Ok(paths.iter().map(|p| self.path_of(p)).collect())
    }

    /// Test mode: safest path. Train mode: safest path with probability
    /// `params.safest_ratio`, else a uniform pick among the k shortest.
    /// Truncated to `params.max_subgoals`.
    pub fn sample_path<G: Rng + ?Sized>(
        &self,
        src: SemanticConfig,
        goal: SemanticConfig,
        mode: PlanMode,
        params: &PlanParams,
        rng: &mut G,
    ) -> Result<Path> {
        self.sample_path_with(src, goal, mode, params, None, rng)
    }

    /// [`AgentGraph::sample_path`] reading safest paths from `snapshot`, a
    /// tree grown earlier from `src`, when it reaches `goal`.
    pub fn sample_path_with<G: Rng + ?Sized>(
        &self,
        src: SemanticConfig,
        goal: SemanticConfig,
        mode: PlanMode,
        params: &PlanParams,
        snapshot: Option<&SafestTree<F>>,
        rng: &mut G,
    ) -> Result<Path> {
        let safest = |g: &Self| -> Result<Path> {
            let cached = snapshot
                .filter(|t| g.index_of(src) == Some(t.source()))
                .and_then(|t| g.tree_path(t, goal));
            match cached {
                Some(p) => Ok(p),
                None => g.safest_path(src, goal),
            }
        };
        let path = match mode {
            PlanMode::Test => safest(self)?,
            PlanMode::Train => {
                if rng.gen_bool(params.safest_ratio) {
                    safest(self)?
                } else {
                    let mut options = self.k_shortest_paths(src, goal, params.k_shortest.max(1))?;
                    let pick = rng.gen_range(0..options.len());
                    options.swap_remove(pick)
                }
            }
        };
        Ok(path.truncated(params.max_subgoals))
    }

    pub fn sample_goal_uniform<G: Rng + ?Sized>(&self, rng: &mut G) -> Result<SemanticConfig> {
        if self.nodes.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok(self.nodes[rng.gen_range(0..self.nodes.len())])
    }

    pub fn to_json_string(&self) -> Result<String> {
        let doc = AgentDocument {
            version: AGENT_FORMAT_VERSION,
            objects: self.space.objects(),
            alpha: self.alpha.to_f64().unwrap_or(f64::NAN),
            prior: self.prior.to_f64().unwrap_or(f64::NAN),
            nodes: self.nodes.iter().map(|&c| self.space.format(c)).collect(),
            edges: self
                .canonical_edges()
                .map(|(t, s)| EdgeRecord {
                    from: self.space.format(t.from),
                    to: self.space.format(t.to),
                    sr: s.sr.to_f64().unwrap_or(f64::NAN),
                    count: s.outcome_count,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json_str(input: &str) -> Result<Self> {
        let doc: AgentDocument = serde_json::from_str(input)?;
        if doc.version != AGENT_FORMAT_VERSION {
            return Err(Error::Version {
                found: doc.version,
                expected: AGENT_FORMAT_VERSION,
            });
        }
        let space = Space::shared(doc.objects)?;
        let mut graph = AgentGraph::with_params(space, F::lit(doc.alpha), F::lit(doc.prior));
        for node in &doc.nodes {
            graph.add_node(space.parse(node)?);
        }
        for e in &doc.edges {
            let from = space.parse(&e.from)?;
            let to = space.parse(&e.to)?;
            if from == to || !space.is_single_object(from, to) {
                return Err(Error::Config(format!(
                    "stored edge {} -> {} is not a single-object move",
                    e.from, e.to
                )));
            }
            if !(0.0..=1.0).contains(&e.sr) {
                return Err(Error::Config(format!("success rate {} out of range", e.sr)));
            }
            let s = graph.ensure_stat(from, to) as usize;
            graph.stats[s] = EdgeStat {
                sr: F::lit(e.sr),
                outcome_count: e.count,
            };
            graph.weights[s] = weight(graph.stats[s].sr);
        }
        Ok(graph)
    }
}

fn weight<F: Real>(sr: F) -> F {
    let floor = F::lit(SR_FLOOR);
    -(sr.max(floor).min(F::one())).ln()
}

impl<F: Real> PlanGraph<F> for AgentGraph<F> {
    type Key = u32;

    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn key(&self, v: u32) -> u32 {
        self.order[v as usize]
    }

    fn out_edges(&self, v: u32) -> impl Iterator<Item = (u32, F)> + '_ {
        self.out[v as usize].iter().map(|&(w, s)| (w, self.weights[s as usize]))
    }

    fn in_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.incoming[v as usize].iter().copied()
    }
}
