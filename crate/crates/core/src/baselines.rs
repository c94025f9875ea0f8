//! Goal samplers that replace uniform autotelic goal selection: learning
//! progress over class buckets, and value disagreement over an ensemble of
//! resampled success-rate graphs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, RngCore};
use rustc_hash::FxHashMap;

use crate::agent::AgentGraph;
use crate::error::{Error, Result};
use crate::planner::SafestTree;
use crate::protocol::GoalSource;
use crate::scalar::Real;
use crate::semantic::{EvalClass, SemanticConfig};

pub const LP_DELTA: f64 = 0.01;
/// The eleven classes plus one bucket for everything else.
pub const BUCKET_COUNT: usize = 12;
pub const OVERFLOW_BUCKET: usize = 11;
pub const VDS_CANDIDATES: usize = 1000;
pub const DEFAULT_ENSEMBLE: usize = 5;
pub const DEFAULT_TEMPERATURE: f64 = 1.0;
/// Pseudo-count cap when resampling an edge.
const BOOTSTRAP_CAP: u64 = 100;

pub fn bucket_of(class: Option<EvalClass>) -> usize {
    class.map_or(OVERFLOW_BUCKET, EvalClass::index)
}

#[derive(Clone, Debug)]
pub struct LpBuckets {
    goals: Vec<Vec<SemanticConfig>>,
    recent: [Option<f64>; BUCKET_COUNT],
    previous: [Option<f64>; BUCKET_COUNT],
    lp: [f64; BUCKET_COUNT],
    delta: f64,
    synced: usize,
}

impl Default for LpBuckets {
    fn default() -> Self {
        Self::new(LP_DELTA)
    }
}

impl LpBuckets {
    pub fn new(delta: f64) -> Self {
        LpBuckets {
            goals: vec![Vec::new(); BUCKET_COUNT],
            recent: [None; BUCKET_COUNT],
            previous: [None; BUCKET_COUNT],
            lp: [0.0; BUCKET_COUNT],
            delta,
            synced: 0,
        }
    }

    pub fn insert(&mut self, goal: SemanticConfig, class: Option<EvalClass>) {
        self.goals[bucket_of(class)].push(goal);
    }

    /// Bucket every agent node added since the last call.
    pub fn sync<F: Real>(&mut self, agent: &AgentGraph<F>) {
        let nodes = agent.nodes();
        for &c in &nodes[self.synced.min(nodes.len())..] {
            let class = agent.space().classify(c);
            self.insert(c, class);
        }
        self.synced = nodes.len();
    }

    pub fn bucket(&self, b: usize) -> &[SemanticConfig] {
        &self.goals[b]
    }

    pub fn lp(&self) -> &[f64; BUCKET_COUNT] {
        &self.lp
    }

    pub fn set_lp(&mut self, lp: [f64; BUCKET_COUNT]) {
        self.lp = lp;
    }

    /// Shift the windows and take `|recent - previous|` per class.
    pub fn update_lp(&mut self, class_sr: &[f64; 11]) {
        for (b, &sr) in class_sr.iter().enumerate() {
            self.previous[b] = self.recent[b];
            self.recent[b] = Some(sr);
            self.lp[b] = match self.previous[b] {
                Some(prev) => (sr - prev).abs(),
                None => 0.0,
            };
        }
    }

    /// Bucket probabilities: `lp + delta` over non-empty buckets.
    pub fn bucket_probabilities(&self) -> [f64; BUCKET_COUNT] {
        let mut w = [0.0; BUCKET_COUNT];
        for b in 0..BUCKET_COUNT {
            if !self.goals[b].is_empty() {
                w[b] = self.lp[b] + self.delta;
            }
        }
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        }
        w
    }

    pub fn sample_bucket(&self, rng: &mut dyn RngCore) -> Result<usize> {
        let w = self.bucket_probabilities();
        let dist = WeightedIndex::new(w).map_err(|_| Error::NothingToSample)?;
        Ok(dist.sample(rng))
    }

    pub fn lp_sample(&self, rng: &mut dyn RngCore) -> Result<SemanticConfig> {
        let b = self.sample_bucket(rng)?;
        let goals = &self.goals[b];
        Ok(goals[rng.gen_range(0..goals.len())])
    }
}

impl<F: Real> GoalSource<F> for LpBuckets {
    fn sample_goal(&mut self, agent: &AgentGraph<F>, rng: &mut dyn RngCore) -> Result<SemanticConfig> {
        self.sync(agent);
        self.lp_sample(rng)
    }
}

/// Ensemble of success-rate tables, each a bootstrap resample of the
/// agent's pooled edge statistics. A goal's score is the spread of the
/// members' estimates of reaching it along the agent's safest path from
/// the start configuration.
#[derive(Clone, Debug)]
pub struct UncertaintyScorer<F: Real> {
    members: Vec<Vec<f64>>,
    start: SemanticConfig,
    tree: Option<SafestTree<F>>,
    cache: FxHashMap<SemanticConfig, f64>,
    temperature: f64,
}

impl<F: Real> UncertaintyScorer<F> {
    pub fn new(ensemble: usize, start: SemanticConfig, temperature: f64) -> Result<Self> {
        if ensemble < 2 {
            return Err(Error::Config("ensemble needs at least two members".into()));
        }
        if !(temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(UncertaintyScorer {
            members: vec![Vec::new(); ensemble],
            start,
            tree: None,
            cache: FxHashMap::default(),
            temperature,
        })
    }

    pub fn ensemble_size(&self) -> usize {
        self.members.len()
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Resample every member and recompute the safest tree.
    pub fn refresh(&mut self, agent: &AgentGraph<F>, rng: &mut dyn RngCore) -> Result<()> {
        let stats: Vec<(f64, u64)> = (0..agent.stat_count() as u32)
            .map(|id| {
                let s = agent.stat(id);
                (s.sr.to_f64().unwrap_or(0.0), s.outcome_count)
            })
            .collect();
        let prior = agent.prior().to_f64().unwrap_or(0.5);
        for member in &mut self.members {
            member.clear();
            member.extend(stats.iter().map(|&(sr, n)| {
                let m = n.min(BOOTSTRAP_CAP);
                let hits = (0..m).filter(|_| rng.gen_bool(sr.clamp(0.0, 1.0))).count() as f64;
                (hits + prior) / (m as f64 + 1.0)
            }));
        }
        self.tree = agent.safest_tree(self.start).ok();
        self.cache.clear();
        Ok(())
    }

    /// Standard deviation of the members' path-product estimates. Goals
    /// without a path score zero.
    pub fn score(&mut self, agent: &AgentGraph<F>, goal: SemanticConfig) -> f64 {
        if let Some(&s) = self.cache.get(&goal) {
            return s;
        }
        let s = self.compute(agent, goal);
        self.cache.insert(goal, s);
        s
    }

    fn compute(&self, agent: &AgentGraph<F>, goal: SemanticConfig) -> f64 {
        let Some(tree) = &self.tree else {
            return 0.0;
        };
        let Some(path) = agent.tree_path(tree, goal) else {
            return 0.0;
        };
        let seq = path.sequence();
        let ids: Vec<Option<u32>> = seq.windows(2).map(|w| agent.stat_id(w[0], w[1])).collect();
        let estimates: Vec<f64> = self
            .members
            .iter()
            .map(|m| {
                ids.iter()
                    .map(|id| match id.and_then(|i| m.get(i as usize)) {
                        Some(&v) => v,
                        None => id.map_or(0.0, |i| agent.stat(i).sr.to_f64().unwrap_or(0.0)),
                    })
                    .product()
            })
            .collect();
        std_dev(&estimates)
    }
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Softmax of `scores / temperature`.
pub fn softmax(scores: &[f64], temperature: f64) -> Vec<f64> {
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| ((s - top) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Draw up to [`VDS_CANDIDATES`] distinct discovered goals and pick one by
/// softmax over `score`.
pub fn vds_select<S: FnMut(SemanticConfig) -> f64>(
    discovered: &[SemanticConfig],
    mut score: S,
    temperature: f64,
    rng: &mut dyn RngCore,
) -> Result<SemanticConfig> {
    if discovered.is_empty() {
        return Err(Error::NothingToSample);
    }
    let amount = discovered.len().min(VDS_CANDIDATES);
    let picks = index::sample(rng, discovered.len(), amount);
    let candidates: Vec<SemanticConfig> = picks.iter().map(|i| discovered[i]).collect();
    let scores: Vec<f64> = candidates.iter().map(|&c| score(c)).collect();
    let probs = softmax(&scores, temperature);
    let dist = WeightedIndex::new(&probs).map_err(|_| Error::NothingToSample)?;
    Ok(candidates[dist.sample(rng)])
}

pub fn vds_sample<F: Real>(
    scorer: &mut UncertaintyScorer<F>,
    agent: &AgentGraph<F>,
    rng: &mut dyn RngCore,
) -> Result<SemanticConfig> {
    let temperature = scorer.temperature;
    vds_select(agent.nodes(), |c| scorer.score(agent, c), temperature, rng)
}

/// Value-disagreement sampler refreshed every `refresh_every` goals.
#[derive(Clone, Debug)]
pub struct VdsSampler<F: Real> {
    scorer: UncertaintyScorer<F>,
    refresh_every: u32,
    since_refresh: u32,
}

impl<F: Real> VdsSampler<F> {
    pub fn new(scorer: UncertaintyScorer<F>, refresh_every: u32) -> Self {
        VdsSampler {
            scorer,
            refresh_every: refresh_every.max(1),
            since_refresh: u32::MAX,
        }
    }

    pub fn scorer(&self) -> &UncertaintyScorer<F> {
        &self.scorer
    }
}

impl<F: Real> GoalSource<F> for VdsSampler<F> {
    fn sample_goal(&mut self, agent: &AgentGraph<F>, rng: &mut dyn RngCore) -> Result<SemanticConfig> {
        if self.since_refresh >= self.refresh_every {
            self.scorer.refresh(agent, rng)?;
            self.since_refresh = 0;
        }
        self.since_refresh += 1;
        vds_sample(&mut self.scorer, agent, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(bits: u32) -> SemanticConfig {
        SemanticConfig::from_bits(bits)
    }

    #[test]
    fn lp_windows() {
        let mut b = LpBuckets::default();
        let mut sr = [0.0; 11];
        b.update_lp(&sr);
        assert_eq!(b.lp()[0], 0.0);
        sr[0] = 0.5;
        b.update_lp(&sr);
        assert_eq!(b.lp()[0], 0.5);
        b.update_lp(&sr);
        assert_eq!(b.lp()[0], 0.0);
        let mut b = LpBuckets::default();
        sr[0] = 0.9;
        b.update_lp(&sr);
        sr[0] = 0.4;
        b.update_lp(&sr);
        assert!((b.lp()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn single_bucket_always_chosen() {
        let mut b = LpBuckets::default();
        b.insert(config(1), Some(EvalClass::S3));
        b.insert(config(2), Some(EvalClass::S3));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            assert_eq!(b.sample_bucket(&mut rng).unwrap(), EvalClass::S3.index());
        }
        assert!(LpBuckets::default().lp_sample(&mut rng).is_err());
    }

    #[test]
    fn classless_goals_use_overflow() {
        let mut b = LpBuckets::default();
        b.insert(config(7), None);
        assert_eq!(b.bucket(OVERFLOW_BUCKET), &[config(7)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(b.lp_sample(&mut rng).unwrap(), config(7));
    }

    #[test]
    fn softmax_basics() {
        let p = softmax(&[1.0, 0.0], 1.0);
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-12);
        let p = softmax(&[0.3, 0.3, 0.3], 1.0);
        assert!(p.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-12));
        assert!((softmax(&[5.0, 1.0, -2.0], 1e3).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_goal_vds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(vds_select(&[config(9)], |_| 1.0, 1.0, &mut rng).unwrap(), config(9));
        assert!(vds_select(&[], |_| 1.0, 1.0, &mut rng).is_err());
    }

    #[test]
    fn std_dev_known() {
        assert_eq!(std_dev(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]), 2.0);
        assert_eq!(std_dev(&[1.0]), 0.0);
    }
}
