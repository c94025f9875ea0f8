//! Stand-ins for the sensorimotor learner.
//!
//! A learner attempts one semantic hop at a time. The noisy model follows a
//! saturating learning curve per relabeling orbit of a transition, lands on
//! a random neighbor when it fails half of the time, and now and then
//! stumbles onto a neighboring configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::kv;
use crate::oracle::OracleGraph;
use crate::scalar::Real;
use crate::semantic::{SemanticConfig, Space, Transition};

/// Success threshold used by deterministic evaluation.
pub const EVAL_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttemptResult {
    pub achieved: SemanticConfig,
    pub success: bool,
    pub side_discoveries: Vec<SemanticConfig>,
}

impl AttemptResult {
    fn stay(at: SemanticConfig, success: bool) -> Self {
        AttemptResult {
            achieved: at,
            success,
            side_discoveries: Vec::new(),
        }
    }
}

pub trait LearnerModel {
    /// Try to move from `current` to `subgoal`; practice counts change.
    fn attempt(&mut self, current: SemanticConfig, subgoal: SemanticConfig, rng: &mut dyn RngCore) -> AttemptResult;

    /// Undirected exploratory move, used when an episode has no hop to
    /// pursue.
    fn explore(&mut self, current: SemanticConfig, rng: &mut dyn RngCore) -> AttemptResult;

    /// Noise-free evaluation of a hop. Never changes state.
    fn competent(&self, current: SemanticConfig, subgoal: SemanticConfig) -> bool;

    /// Stochastic evaluation of a hop. Never changes state.
    fn sample_competence(&self, current: SemanticConfig, subgoal: SemanticConfig, rng: &mut dyn RngCore) -> bool {
        let _ = rng;
        self.competent(current, subgoal)
    }

    /// Digest of the learner state, for no-mutation checks.
    fn state_digest(&self) -> u64 {
        0
    }
}

/// Succeeds exactly on oracle edges.
#[derive(Clone, Debug)]
pub struct OracleLearner {
    oracle: Arc<OracleGraph>,
}

impl OracleLearner {
    pub fn new(oracle: Arc<OracleGraph>) -> Self {
        OracleLearner { oracle }
    }

    pub fn oracle_attempt(&self, current: SemanticConfig, subgoal: SemanticConfig) -> AttemptResult {
        let ok = current == subgoal || self.oracle.has_edge(current, subgoal);
        AttemptResult::stay(if ok { subgoal } else { current }, ok)
    }
}

impl LearnerModel for OracleLearner {
    fn attempt(&mut self, current: SemanticConfig, subgoal: SemanticConfig, _rng: &mut dyn RngCore) -> AttemptResult {
        self.oracle_attempt(current, subgoal)
    }

    fn explore(&mut self, current: SemanticConfig, _rng: &mut dyn RngCore) -> AttemptResult {
        AttemptResult::stay(current, false)
    }

    fn competent(&self, current: SemanticConfig, subgoal: SemanticConfig) -> bool {
        current == subgoal || self.oracle.has_edge(current, subgoal)
    }
}

/// `p(n) = p0 + (p_max - p0) (1 - exp(-n / tau))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearningCurve<F> {
    pub p0: F,
    pub p_max: F,
    pub tau: F,
}

impl<F: Real> LearningCurve<F> {
    pub fn new(p0: F, p_max: F, tau: F) -> Result<Self> {
        let unit = |v: F| v >= F::zero() && v <= F::one();
        if !unit(p0) || !unit(p_max) {
            return Err(Error::Config(format!(
                "probabilities must lie in [0, 1]: p0={p0}, p_max={p_max}"
            )));
        }
        if p0 > p_max {
            return Err(Error::Config(format!("p0 ({p0}) exceeds p_max ({p_max})")));
        }
        if !(tau > F::zero()) {
            return Err(Error::Config(format!("tau_learn must be positive, got {tau}")));
        }
        Ok(LearningCurve { p0, p_max, tau })
    }

    pub fn probability(&self, practice: u32) -> F {
        let n = F::from_u32(practice).expect("count fits");
        self.p0 + (self.p_max - self.p0) * (F::one() - (-n / self.tau).exp())
    }
}

/// Longest chain of direct supports.
pub fn max_stack_height(space: &Space, c: SemanticConfig) -> u8 {
    let n = space.objects();
    let mut height = [0u8; 8];
    fn depth(space: &Space, c: SemanticConfig, i: u8, n: usize, memo: &mut [u8; 8]) -> u8 {
        if memo[i as usize] != 0 {
            return memo[i as usize];
        }
        let mut best = 1;
        for j in 0..n as u8 {
            if j != i && space.above(c, i, j) {
                best = best.max(1 + depth(space, c, j, n, memo));
            }
        }
        memo[i as usize] = best;
        best
    }
    (0..n as u8)
        .map(|i| depth(space, c, i, n, &mut height))
        .max()
        .unwrap_or(0)
}

/// Practice counts per relabeling orbit of a transition, with a base curve
/// and an optional harder curve for hops that build a new tallest stack of
/// at least `hard_min_height` blocks.
#[derive(Clone, Debug)]
pub struct CompetenceTable<F> {
    space: &'static Space,
    base: LearningCurve<F>,
    hard: Option<(LearningCurve<F>, u8)>,
    counts: FxHashMap<Transition, u32>,
}

impl<F: Real> CompetenceTable<F> {
    pub fn new(space: &'static Space, base: LearningCurve<F>, hard: Option<(LearningCurve<F>, u8)>) -> Self {
        CompetenceTable {
            space,
            base,
            hard,
            counts: FxHashMap::default(),
        }
    }

    pub fn is_hard(&self, from: SemanticConfig, to: SemanticConfig) -> bool {
        match self.hard {
            Some((_, min_height)) => {
                let after = max_stack_height(self.space, to);
                after >= min_height && after > max_stack_height(self.space, from)
            }
            None => false,
        }
    }

    pub fn curve(&self, from: SemanticConfig, to: SemanticConfig) -> &LearningCurve<F> {
        match &self.hard {
            Some((curve, _)) if self.is_hard(from, to) => curve,
            _ => &self.base,
        }
    }

    fn key(&self, from: SemanticConfig, to: SemanticConfig) -> Transition {
        self.space.canonical_transition(Transition::new(from, to))
    }

    pub fn practice_count(&self, from: SemanticConfig, to: SemanticConfig) -> u32 {
        self.counts.get(&self.key(from, to)).copied().unwrap_or(0)
    }

    pub fn probability(&self, from: SemanticConfig, to: SemanticConfig) -> F {
        self.curve(from, to).probability(self.practice_count(from, to))
    }

    /// Increment the practice count; returns the probability that applied
    /// before the increment.
    pub fn practice(&mut self, from: SemanticConfig, to: SemanticConfig) -> F {
        let key = self.key(from, to);
        let curve = *self.curve(from, to);
        let count = self.counts.entry(key).or_insert(0);
        let p = curve.probability(*count);
        *count += 1;
        p
    }

    /// Chance that exploration noise carries out this hop. Hard hops happen
    /// by accident only as often as the learner could do them on purpose.
    pub fn accidental_probability(&self, from: SemanticConfig, to: SemanticConfig) -> F {
        if self.is_hard(from, to) {
            self.probability(from, to)
        } else {
            F::one()
        }
    }

    /// A hop the learner cannot perform even by accident.
    pub fn locked(&self, from: SemanticConfig, to: SemanticConfig) -> bool {
        self.accidental_probability(from, to) == F::zero()
    }

    pub fn practiced_transitions(&self) -> usize {
        self.counts.len()
    }

    pub fn digest(&self) -> u64 {
        let mut entries: Vec<(u64, u32)> = self
            .counts
            .iter()
            .map(|(t, &n)| ((t.from.bits() as u64) << 32 | t.to.bits() as u64, n))
            .collect();
        entries.sort_unstable();
        entries.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &(k, n)| {
            (h ^ k).wrapping_mul(0x1000_0000_01b3) ^ n as u64
        })
    }
}

/// Learner following a [`CompetenceTable`].
#[derive(Clone, Debug)]
pub struct NoisyLearner<F> {
    oracle: Arc<OracleGraph>,
    table: CompetenceTable<F>,
    eps_explore: f64,
}

impl<F: Real> NoisyLearner<F> {
    pub fn new(oracle: Arc<OracleGraph>, table: CompetenceTable<F>, eps_explore: f64) -> Self {
        NoisyLearner {
            oracle,
            table,
            eps_explore,
        }
    }

    pub fn table(&self) -> &CompetenceTable<F> {
        &self.table
    }

    pub fn eps_explore(&self) -> f64 {
        self.eps_explore
    }

    pub fn set_eps_explore(&mut self, eps: f64) {
        self.eps_explore = eps;
    }

    /// A uniformly drawn oracle neighbor of `at`, or `None` when the draw
    /// is a hop that exploration noise does not carry out.
    fn stumble(&self, at: SemanticConfig, rng: &mut dyn RngCore) -> Option<SemanticConfig> {
        self.stumble_avoiding(at, None, rng)
    }

    /// Like `stumble`, never landing on `avoid`.
    fn stumble_avoiding(
        &self,
        at: SemanticConfig,
        avoid: Option<SemanticConfig>,
        rng: &mut dyn RngCore,
    ) -> Option<SemanticConfig> {
        let i = self.oracle.index_of(at)?;
        let adj = self.oracle.neighbor_indices(i);
        let skip = avoid
            .and_then(|c| self.oracle.index_of(c))
            .and_then(|j| adj.binary_search(&j).ok());
        let choices = adj.len() - skip.is_some() as usize;
        if choices == 0 {
            return None;
        }
        let mut k = rng.gen_range(0..choices);
        if skip.is_some_and(|s| k >= s) {
            k += 1;
        }
        let next = self.oracle.node(adj[k]);
        let q = self.table.accidental_probability(at, next).to_f64().unwrap_or(0.0);
        if q >= 1.0 || (q > 0.0 && rng.gen::<f64>() < q) {
            Some(next)
        } else {
            None
        }
    }

    pub fn noisy_attempt(
        &mut self,
        current: SemanticConfig,
        subgoal: SemanticConfig,
        rng: &mut dyn RngCore,
    ) -> AttemptResult {
        if current == subgoal {
            return AttemptResult::stay(current, true);
        }
        let success = if self.oracle.has_edge(current, subgoal) {
            let p = self.table.practice(current, subgoal);
            rng.gen::<f64>() < p.to_f64().unwrap_or(0.0)
        } else {
            false
        };
        let achieved = if success {
            subgoal
        } else if rng.gen_bool(0.5) {
            // the subgoal itself is not a failure landing
            self.stumble_avoiding(current, Some(subgoal), rng).unwrap_or(current)
        } else {
            current
        };
        let mut side_discoveries = Vec::new();
        if self.eps_explore > 0.0 && rng.gen_bool(self.eps_explore) {
            if let Some(c) = self.stumble(achieved, rng) {
                side_discoveries.push(c);
            }
        }
        AttemptResult {
            achieved,
            success,
            side_discoveries,
        }
    }
}

impl<F: Real> LearnerModel for NoisyLearner<F> {
    fn attempt(&mut self, current: SemanticConfig, subgoal: SemanticConfig, rng: &mut dyn RngCore) -> AttemptResult {
        self.noisy_attempt(current, subgoal, rng)
    }

    fn explore(&mut self, current: SemanticConfig, rng: &mut dyn RngCore) -> AttemptResult {
        let achieved = self.stumble(current, rng).unwrap_or(current);
        AttemptResult::stay(achieved, false)
    }

    fn competent(&self, current: SemanticConfig, subgoal: SemanticConfig) -> bool {
        current == subgoal
            || (self.oracle.has_edge(current, subgoal)
                && self.table.probability(current, subgoal) >= F::lit(EVAL_THRESHOLD))
    }

    fn sample_competence(&self, current: SemanticConfig, subgoal: SemanticConfig, rng: &mut dyn RngCore) -> bool {
        if current == subgoal {
            return true;
        }
        self.oracle.has_edge(current, subgoal)
            && rng.gen::<f64>() < self.table.probability(current, subgoal).to_f64().unwrap_or(0.0)
    }

    fn state_digest(&self) -> u64 {
        self.table.digest()
    }
}

/// Either built-in learner, selected by profile.
#[derive(Clone, Debug)]
pub enum Learner<F> {
    Oracle(OracleLearner),
    Noisy(NoisyLearner<F>),
}

impl<F: Real> LearnerModel for Learner<F> {
    fn attempt(&mut self, current: SemanticConfig, subgoal: SemanticConfig, rng: &mut dyn RngCore) -> AttemptResult {
        match self {
            Learner::Oracle(l) => l.attempt(current, subgoal, rng),
            Learner::Noisy(l) => l.attempt(current, subgoal, rng),
        }
    }

    fn explore(&mut self, current: SemanticConfig, rng: &mut dyn RngCore) -> AttemptResult {
        match self {
            Learner::Oracle(l) => l.explore(current, rng),
            Learner::Noisy(l) => l.explore(current, rng),
        }
    }

    fn competent(&self, current: SemanticConfig, subgoal: SemanticConfig) -> bool {
        match self {
            Learner::Oracle(l) => l.competent(current, subgoal),
            Learner::Noisy(l) => l.competent(current, subgoal),
        }
    }

    fn sample_competence(&self, current: SemanticConfig, subgoal: SemanticConfig, rng: &mut dyn RngCore) -> bool {
        match self {
            Learner::Oracle(l) => l.sample_competence(current, subgoal, rng),
            Learner::Noisy(l) => l.sample_competence(current, subgoal, rng),
        }
    }

    fn state_digest(&self) -> u64 {
        match self {
            Learner::Oracle(l) => l.state_digest(),
            Learner::Noisy(l) => l.state_digest(),
        }
    }
}

/// Parameters of a named learner scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerProfile {
    pub name: String,
    /// Use the exact oracle learner and ignore the curves.
    pub oracle: bool,
    pub p0: f64,
    pub p_max: f64,
    pub tau_learn: f64,
    pub eps_explore: f64,
    pub hard: Option<HardFamily>,
}

/// Curve for hops that raise the tallest stack to `min_height` or more.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HardFamily {
    pub min_height: u8,
    pub p0: f64,
    pub p_max: f64,
    pub tau_learn: f64,
}

impl LearnerProfile {
    pub fn oracle() -> Self {
        LearnerProfile {
            name: "oracle".into(),
            oracle: true,
            p0: 1.0,
            p_max: 1.0,
            tau_learn: 1.0,
            eps_explore: 0.0,
            hard: None,
        }
    }

    pub fn uniform() -> Self {
        LearnerProfile {
            name: "uniform".into(),
            oracle: false,
            p0: 1.0,
            p_max: 1.0,
            tau_learn: 1.0,
            eps_explore: 0.0,
            hard: None,
        }
    }

    /// Towers of four or five blocks are out of reach until explicitly
    /// practiced.
    pub fn no_high_stacks() -> Self {
        LearnerProfile {
            name: "no-high-stacks".into(),
            oracle: false,
            p0: 0.5,
            p_max: 1.0,
            tau_learn: 5.0,
            eps_explore: 1.0,
            hard: Some(HardFamily {
                min_height: 4,
                p0: 0.0,
                p_max: 1.0,
                tau_learn: 20.0,
            }),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "oracle" => Some(Self::oracle()),
            "uniform" => Some(Self::uniform()),
            "no-high-stacks" => Some(Self::no_high_stacks()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        LearningCurve::new(self.p0, self.p_max, self.tau_learn)?;
        if let Some(h) = &self.hard {
            LearningCurve::new(h.p0, h.p_max, h.tau_learn)?;
        }
        if !(0.0..=1.0).contains(&self.eps_explore) {
            return Err(Error::Config(format!("eps_explore out of range: {}", self.eps_explore)));
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{}.{key}: not a number: {value:?}", self.name)))
        };
        let hard = || {
            self.hard.unwrap_or(HardFamily {
                min_height: 4,
                p0: 0.0,
                p_max: 1.0,
                tau_learn: 1.0,
            })
        };
        match key {
            "oracle" => {
                self.oracle = value
                    .parse()
                    .map_err(|_| Error::Config(format!("{}.oracle: expected true/false", self.name)))?
            }
            "p0" => self.p0 = num()?,
            "p_max" => self.p_max = num()?,
            "tau_learn" => self.tau_learn = num()?,
            "eps_explore" => self.eps_explore = num()?,
            "hard" if value == "none" => self.hard = None,
            "hard.min_height" => {
                let mut h = hard();
                h.min_height = value
                    .parse()
                    .map_err(|_| Error::Config(format!("{}.hard.min_height: expected an integer", self.name)))?;
                self.hard = Some(h);
            }
            "hard.p0" | "hard.p_max" | "hard.tau_learn" => {
                let v = num()?;
                let mut h = hard();
                match key {
                    "hard.p0" => h.p0 = v,
                    "hard.p_max" => h.p_max = v,
                    _ => h.tau_learn = v,
                }
                self.hard = Some(h);
            }
            _ => return Err(Error::Config(format!("unknown profile key {}.{key}", self.name))),
        }
        Ok(())
    }
}

/// Competence table for a profile.
pub fn hardness_profile<F: Real>(space: &'static Space, profile: &LearnerProfile) -> Result<CompetenceTable<F>> {
    profile.validate()?;
    let base = LearningCurve::new(F::lit(profile.p0), F::lit(profile.p_max), F::lit(profile.tau_learn))?;
    let hard = match &profile.hard {
        Some(h) => Some((
            LearningCurve::new(F::lit(h.p0), F::lit(h.p_max), F::lit(h.tau_learn))?,
            h.min_height,
        )),
        None => None,
    };
    Ok(CompetenceTable::new(space, base, hard))
}

/// Build the learner a profile describes.
pub fn build_learner<F: Real>(
    space: &'static Space,
    oracle: Arc<OracleGraph>,
    profile: &LearnerProfile,
) -> Result<Learner<F>> {
    if profile.oracle {
        return Ok(Learner::Oracle(OracleLearner::new(oracle)));
    }
    let table = hardness_profile(space, profile)?;
    Ok(Learner::Noisy(NoisyLearner::new(oracle, table, profile.eps_explore)))
}

/// Named profiles: the built-ins plus any loaded from a file.
#[derive(Clone, Debug)]
pub struct ProfileSet {
    profiles: BTreeMap<String, LearnerProfile>,
}

impl Default for ProfileSet {
    fn default() -> Self {
        let profiles = [
            LearnerProfile::oracle(),
            LearnerProfile::uniform(),
            LearnerProfile::no_high_stacks(),
        ]
        .into_iter()
        .map(|p| (p.name.clone(), p))
        .collect();
        ProfileSet { profiles }
    }
}

impl ProfileSet {
    pub fn get(&self, name: &str) -> Result<&LearnerProfile> {
        self.profiles
            .get(name)
            .ok_or_else(|| Error::Config(format!("unknown learner profile {name:?}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    /// Apply `profile.key = value` lines. A profile seen for the first time
    /// starts as a copy of `base` when given (`name.base = other`),
    /// otherwise of `uniform`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, lhs, value) in kv::parse(text)? {
            let (name, key) = lhs
                .split_once('.')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected profile.key")))?;
            let value = value.as_str();
            if key == "base" {
                let mut copy = self.get(value)?.clone();
                copy.name = name.to_string();
                self.profiles.insert(name.to_string(), copy);
                continue;
            }
            let entry = self.profiles.entry(name.to_string()).or_insert_with(|| LearnerProfile {
                name: name.to_string(),
                ..LearnerProfile::uniform()
            });
            entry.set(key, value)?;
        }
        for p in self.profiles.values() {
            p.validate()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut set = Self::default();
        set.apply_str(&text)?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::Predicate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_chain() -> (&'static Space, Arc<OracleGraph>, [SemanticConfig; 3]) {
        let space = Space::shared(3).unwrap();
        let a = SemanticConfig::EMPTY;
        let b = space.set(a, Predicate::Close, 0, 1, true);
        let c = space.set(b, Predicate::Above, 0, 1, true);
        let oracle = OracleGraph::from_edges(3, [a, b, c], [(a, b), (b, a), (b, c), (c, b)]).unwrap();
        (space, Arc::new(oracle), [a, b, c])
    }

    #[test]
    fn oracle_learner_follows_edges() {
        let (_, oracle, [a, b, c]) = three_chain();
        let l = OracleLearner::new(oracle);
        assert!(l.oracle_attempt(a, b).success);
        let r = l.oracle_attempt(a, c);
        assert!(!r.success);
        assert_eq!(r.achieved, a);
        let r = l.oracle_attempt(c, c);
        assert!(r.success && r.side_discoveries.is_empty());
    }

    #[test]
    fn curve_limits_and_errors() {
        let c = LearningCurve::<f64>::new(0.2, 0.9, 10.0).unwrap();
        assert_eq!(c.probability(0), 0.2);
        assert!((c.probability(10_000) - 0.9).abs() < 1e-12);
        let mut last = 0.0;
        for n in 0..100 {
            let p = c.probability(n);
            assert!(p >= last && p <= 0.9);
            last = p;
        }
        assert!(LearningCurve::<f64>::new(0.6, 0.5, 1.0).is_err());
        assert!(LearningCurve::<f64>::new(0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn fresh_edge_rate_matches_p0() {
        let (space, oracle, [a, b, _]) = three_chain();
        let base = LearningCurve::<f64>::new(0.2, 0.2, 1.0).unwrap();
        let mut l = NoisyLearner::new(oracle, CompetenceTable::new(space, base, None), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let wins = (0..trials).filter(|_| l.noisy_attempt(a, b, &mut rng).success).count();
        let sigma = (0.2f64 * 0.8 / trials as f64).sqrt();
        assert!((wins as f64 / trials as f64 - 0.2).abs() < 3.0 * sigma);
        assert_eq!(l.table().practice_count(a, b), trials as u32);
    }

    #[test]
    fn non_adjacent_always_fails_and_no_side_effects_without_eps() {
        let (space, oracle, [a, _, c]) = three_chain();
        let base = LearningCurve::new(1.0, 1.0, 1.0).unwrap();
        let mut l: NoisyLearner<f64> = NoisyLearner::new(oracle.clone(), CompetenceTable::new(space, base, None), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let r = l.noisy_attempt(a, c, &mut rng);
            assert!(!r.success);
            assert!(r.side_discoveries.is_empty());
            assert!(oracle.is_reachable(r.achieved));
        }
    }

    #[test]
    fn uniform_profile_matches_oracle() {
        let (space, oracle, nodes) = three_chain();
        let mut noisy = build_learner::<f64>(space, oracle.clone(), &LearnerProfile::uniform()).unwrap();
        let exact = OracleLearner::new(oracle);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &x in &nodes {
            for &y in &nodes {
                let r = noisy.attempt(x, y, &mut rng);
                let o = exact.oracle_attempt(x, y);
                assert_eq!(r.success, o.success);
                if o.success {
                    assert_eq!(r.achieved, o.achieved);
                }
            }
        }
    }

    #[test]
    fn stack_heights() {
        let space = Space::five();
        let mut c = SemanticConfig::EMPTY;
        assert_eq!(max_stack_height(space, c), 1);
        for (top, bottom) in [(0, 1), (1, 2), (2, 3)] {
            c = space.set(c, Predicate::Close, top, bottom, true);
            c = space.set(c, Predicate::Above, top, bottom, true);
        }
        assert_eq!(max_stack_height(space, c), 4);
    }

    #[test]
    fn profile_file_overrides() {
        let mut set = ProfileSet::default();
        set.apply_str(
            "# scenario\nno-high-stacks.eps_explore = 0.1\nslow.base = no-high-stacks\nslow.hard.tau_learn = 400\n",
        )
        .unwrap();
        assert_eq!(set.get("no-high-stacks").unwrap().eps_explore, 0.1);
        let slow = set.get("slow").unwrap();
        assert_eq!(slow.hard.unwrap().tau_learn, 400.0);
        assert_eq!(slow.p0, 0.5);
        let mut bad = ProfileSet::default();
        assert!(bad.apply_str("x.p0 = 0.9\nx.p_max = 0.5\n").is_err());
        assert!(bad.apply_str("x.nonsense = 1\n").is_err());
    }
}
