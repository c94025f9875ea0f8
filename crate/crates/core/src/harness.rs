//! Experiment configuration, offline evaluation, the training loop,
//! statistics and report files.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::agent::{AgentGraph, PlanParams};
use crate::baselines::{LpBuckets, UncertaintyScorer, VdsSampler};
use crate::error::{Error, Result};
use crate::kv;
use crate::learner::{build_learner, LearnerModel, ProfileSet};
use crate::oracle::OracleGraph;
use crate::protocol::{
    EpisodeKind, GoalSource, InternalizationBuffer, Scheduler, Session, SocialPartner, Turn, UniformGoals,
};
use crate::scalar::Real;
use crate::semantic::{EvalClass, SemanticConfig, Space};

pub const EVAL_GOALS_PER_CLASS: usize = 24;
pub const CLASS_COUNT: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Uniform,
    Lp,
    Vds,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Lp => "lp",
            SamplerKind::Vds => "vds",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerKind::Uniform),
            "lp" => Ok(SamplerKind::Lp),
            "vds" => Ok(SamplerKind::Vds),
            _ => Err(Error::Config(format!("unknown sampler {s:?} (uniform, lp, vds)"))),
        }
    }
}

/// One experimental condition. Keys in config files use the field names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label: String,
    pub objects: usize,
    pub social_ratio: f64,
    pub internalization: bool,
    pub internalization_prob: f64,
    pub sampler: SamplerKind,
    pub profile: String,
    pub seeds: Vec<u64>,
    /// Training episodes per seed.
    pub budget: u64,
    /// Cycles between evaluations.
    pub nb_cycles: u64,
    /// Episodes per cycle, one per worker. The planner snapshot is
    /// refreshed once per cycle.
    pub nb_mpis: u64,
    pub alpha_ema: f64,
    pub edge_prior: f64,
    pub shortest_paths: usize,
    pub shortest_safest_ratio: f64,
    /// Sub-goals followed per episode, `nb_rollouts_per_mpi` in files.
    pub max_subgoals: usize,
    pub stochastic_eval: bool,
    pub lp_delta: f64,
    pub vds_ensemble: usize,
    pub vds_temperature: f64,
    /// Goals drawn between two ensemble refreshes.
    pub vds_refresh: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            label: "hme".into(),
            objects: 5,
            social_ratio: 0.002,
            internalization: true,
            internalization_prob: crate::protocol::DEFAULT_INTERNALIZATION_PROB,
            sampler: SamplerKind::Uniform,
            profile: "no-high-stacks".into(),
            seeds: vec![0, 1, 2, 3, 4],
            budget: 120_000,
            nb_cycles: 50,
            nb_mpis: 24,
            alpha_ema: crate::agent::DEFAULT_EMA_ALPHA,
            edge_prior: crate::agent::DEFAULT_EDGE_PRIOR,
            shortest_paths: crate::agent::DEFAULT_K_SHORTEST,
            shortest_safest_ratio: crate::agent::DEFAULT_SAFEST_RATIO,
            max_subgoals: crate::agent::DEFAULT_MAX_SUBGOALS,
            stochastic_eval: false,
            lp_delta: crate::baselines::LP_DELTA,
            vds_ensemble: crate::baselines::DEFAULT_ENSEMBLE,
            vds_temperature: crate::baselines::DEFAULT_TEMPERATURE,
            vds_refresh: 50,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// `0,1,2` or a range `0..5`.
pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = value.split_once("..") {
        let a: u64 = parse_value("seeds", a.trim())?;
        let b: u64 = parse_value("seeds", b.trim())?;
        return Ok((a..b).collect());
    }
    value.split(',').map(|s| parse_value("seeds", s.trim())).collect()
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "label" => self.label = value.to_string(),
            "objects" => self.objects = parse_value(key, value)?,
            "social_ratio" => self.social_ratio = parse_value(key, value)?,
            "internalization" => self.internalization = parse_bool(key, value)?,
            "internalization_prob" => self.internalization_prob = parse_value(key, value)?,
            "sampler" => self.sampler = value.parse()?,
            "profile" => self.profile = value.to_string(),
            "seeds" => self.seeds = parse_seeds(value)?,
            "budget" => self.budget = parse_value(key, value)?,
            "nb_cycles" => self.nb_cycles = parse_value(key, value)?,
            "nb_mpis" => self.nb_mpis = parse_value(key, value)?,
            "alpha_ema" => self.alpha_ema = parse_value(key, value)?,
            "edge_prior" => self.edge_prior = parse_value(key, value)?,
            "shortest_paths" => self.shortest_paths = parse_value(key, value)?,
            "shortest_safest_ratio" => self.shortest_safest_ratio = parse_value(key, value)?,
            "max_subgoals" | "nb_rollouts_per_mpi" => self.max_subgoals = parse_value(key, value)?,
            "stochastic_eval" => self.stochastic_eval = parse_bool(key, value)?,
            "lp_delta" => self.lp_delta = parse_value(key, value)?,
            "vds_ensemble" => self.vds_ensemble = parse_value(key, value)?,
            "vds_temperature" => self.vds_temperature = parse_value(key, value)?,
            "vds_refresh" => self.vds_refresh = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file on top of the current values.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in kv::parse(text)? {
            self.set(&key, &value)
                .map_err(|e| Error::Config(format!("line {line}: {e}")))?;
        }
        Ok(())
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fraction = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        fraction("social_ratio", self.social_ratio)?;
        fraction("internalization_prob", self.internalization_prob)?;
        fraction("alpha_ema", self.alpha_ema)?;
        fraction("edge_prior", self.edge_prior)?;
        fraction("shortest_safest_ratio", self.shortest_safest_ratio)?;
        if !(2..=crate::semantic::MAX_OBJECTS).contains(&self.objects) {
            return Err(Error::ObjectCount(self.objects));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.nb_cycles == 0 || self.nb_mpis == 0 {
            return Err(Error::Config("nb_cycles and nb_mpis must be positive".into()));
        }
        if self.shortest_paths == 0 || self.max_subgoals == 0 {
            return Err(Error::Config("shortest_paths and max_subgoals must be positive".into()));
        }
        if self.lp_delta < 0.0 || !self.lp_delta.is_finite() {
            return Err(Error::Config(format!(
                "lp_delta must be non-negative, got {}",
                self.lp_delta
            )));
        }
        if self.sampler == SamplerKind::Vds {
            UncertaintyScorer::<f64>::new(self.vds_ensemble, SemanticConfig::EMPTY, self.vds_temperature)?;
        }
        Ok(())
    }

    pub fn eval_every(&self) -> u64 {
        self.nb_cycles * self.nb_mpis
    }

    pub fn plan_params(&self) -> PlanParams {
        PlanParams {
            k_shortest: self.shortest_paths,
            safest_ratio: self.shortest_safest_ratio,
            max_subgoals: self.max_subgoals,
        }
    }
}

/// Goal lists of the eleven evaluation classes.
#[derive(Clone, Debug)]
pub struct EvalClasses {
    goals: Vec<Vec<SemanticConfig>>,
}

impl EvalClasses {
    pub fn new(space: &Space) -> Self {
        EvalClasses {
            goals: EvalClass::ALL.iter().map(|&c| space.enumerate_class(c)).collect(),
        }
    }

    pub fn goals(&self, class: EvalClass) -> &[SemanticConfig] {
        &self.goals[class.index()]
    }

    /// `per_class` goals per class, drawn uniformly with replacement.
    pub fn sample(&self, per_class: usize, rng: &mut dyn RngCore) -> Vec<Vec<SemanticConfig>> {
        self.goals
            .iter()
            .map(|g| {
                if g.is_empty() {
                    return Vec::new();
                }
                (0..per_class).map(|_| g[rng.gen_range(0..g.len())]).collect()
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub class_sr: [f64; CLASS_COUNT],
    /// Mean over the classes that have members for this object count.
    pub global_sr: f64,
}

/// Offline evaluation from `start`. Each goal is decomposed along one
/// safest tree and executed hop by hop with `competent` (or
/// `sample_competence` when `stochastic`). Nothing is recorded.
pub fn evaluate<F: Real, L: LearnerModel + ?Sized>(
    agent: &AgentGraph<F>,
    learner: &L,
    classes: &EvalClasses,
    start: SemanticConfig,
    max_subgoals: usize,
    stochastic: bool,
    rng: &mut dyn RngCore,
) -> EvalResult {
    let goals = classes.sample(EVAL_GOALS_PER_CLASS, rng);
    let tree = agent.safest_tree(start).ok();
    let mut class_sr = [0.0; CLASS_COUNT];
    for (k, list) in goals.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let mut wins = 0usize;
        for &goal in list {
            let Some(tree) = &tree else { continue };
            let Some(path) = agent.tree_path(tree, goal) else {
                continue;
            };
            let path = path.truncated(max_subgoals);
            let mut at = start;
            for &sub in &path.subgoals {
                let ok = if stochastic {
                    learner.sample_competence(at, sub, rng)
                } else {
                    learner.competent(at, sub)
                };
                if !ok {
                    break;
                }
                at = sub;
            }
            if at == goal {
                wins += 1;
            }
        }
        class_sr[k] = wins as f64 / list.len() as f64;
    }
    let present = goals.iter().filter(|g| !g.is_empty()).count().max(1);
    let global_sr = class_sr.iter().sum::<f64>() / present as f64;
    EvalResult { class_sr, global_sr }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub episode: u64,
    pub class_sr: [f64; CLASS_COUNT],
    pub global_sr: f64,
    pub discovered: usize,
    pub stepping_stones: usize,
    pub buffer_size: usize,
    pub social_episodes: u64,
    /// Goals proposed by the social partner, cumulative.
    pub proposed: [u64; CLASS_COUNT],
    /// Discovered configurations per class.
    pub encountered: [u64; CLASS_COUNT],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub episodes: u64,
    /// Episodes completed when the stepping-stone count first hit zero.
    pub stepping_stones_exhausted_at: Option<u64>,
    pub episode_stream: Option<PathBuf>,
}

impl RunLog {
    pub fn last(&self) -> Option<&MetricsRecord> {
        self.records.last()
    }
}

/// Autotelic goal selection chosen by [`SamplerKind`].
pub enum GoalSampler<F: Real> {
    Uniform(UniformGoals),
    Lp(LpBuckets),
    Vds(VdsSampler<F>),
}

impl<F: Real> GoalSampler<F> {
    pub fn new(config: &ExperimentConfig, start: SemanticConfig) -> Result<Self> {
        Ok(match config.sampler {
            SamplerKind::Uniform => GoalSampler::Uniform(UniformGoals),
            SamplerKind::Lp => GoalSampler::Lp(LpBuckets::new(config.lp_delta)),
            SamplerKind::Vds => GoalSampler::Vds(VdsSampler::new(
                UncertaintyScorer::new(config.vds_ensemble, start, config.vds_temperature)?,
                config.vds_refresh,
            )),
        })
    }

    pub fn observe_evaluation(&mut self, result: &EvalResult) {
        if let GoalSampler::Lp(b) = self {
            b.update_lp(&result.class_sr);
        }
    }
}

impl<F: Real> GoalSource<F> for GoalSampler<F> {
    fn sample_goal(&mut self, agent: &AgentGraph<F>, rng: &mut dyn RngCore) -> Result<SemanticConfig> {
        match self {
            GoalSampler::Uniform(s) => s.sample_goal(agent, rng),
            GoalSampler::Lp(s) => s.sample_goal(agent, rng),
            GoalSampler::Vds(s) => s.sample_goal(agent, rng),
        }
    }
}

/// Per-class counters kept in step with the agent's node list.
struct ClassCounter {
    counts: [u64; CLASS_COUNT],
    synced: usize,
}

impl ClassCounter {
    fn sync<F: Real>(&mut self, agent: &AgentGraph<F>) {
        let space = agent.space();
        for &c in &agent.nodes()[self.synced..] {
            if let Some(k) = space.classify(c) {
                self.counts[k.index()] += 1;
            }
        }
        self.synced = agent.node_count();
    }
}

/// Stream seeds: training draws and evaluation draws never interleave.
fn run_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let train = ChaCha8Rng::seed_from_u64(seed);
    let mut eval = ChaCha8Rng::seed_from_u64(seed);
    eval.set_stream(1);
    (train, eval)
}

/// Train one seed. Episodes are streamed as NDJSON to `sink` when given.
pub fn run_seed<F: Real>(
    config: &ExperimentConfig,
    seed: u64,
    oracle: Arc<OracleGraph>,
    profiles: &ProfileSet,
    sink: Option<&mut dyn Write>,
) -> Result<RunLog> {
    train_seed::<F>(config, seed, oracle, profiles, sink).map(|(log, _)| log)
}

/// Like [`run_seed`], also handing back the trained agent graph.
pub fn train_seed<F: Real>(
    config: &ExperimentConfig,
    seed: u64,
    oracle: Arc<OracleGraph>,
    profiles: &ProfileSet,
    mut sink: Option<&mut dyn Write>,
) -> Result<(RunLog, AgentGraph<F>)> {
    config.validate()?;
    let space = Space::shared(config.objects)?;
    if oracle.objects() != config.objects {
        return Err(Error::Config(format!(
            "oracle is built for {} objects, config asks for {}",
            oracle.objects(),
            config.objects
        )));
    }
    let start = SemanticConfig::EMPTY;
    if !oracle.is_reachable(start) {
        return Err(Error::Config(
            "oracle graph does not contain the all-far configuration".into(),
        ));
    }
    let profile = profiles.get(&config.profile)?;
    let mut learner = build_learner::<F>(space, oracle.clone(), profile)?;
    let classes = EvalClasses::new(space);
    let (mut rng, mut eval_rng) = run_rngs(seed);

    let mut agent = AgentGraph::<F>::with_params(space, F::lit(config.alpha_ema), F::lit(config.edge_prior));
    agent.add_node(start);
    let mut sp = SocialPartner::new(oracle);
    sp.sync(&agent);
    let mut buffer = InternalizationBuffer::new();
    let mut sampler = GoalSampler::<F>::new(config, start)?;
    let mut scheduler = Scheduler::default();
    let rehearsal_prob = if config.internalization {
        config.internalization_prob
    } else {
        0.0
    };

    let mut encountered = ClassCounter {
        counts: [0; CLASS_COUNT],
        synced: 0,
    };
    let mut proposed = [0u64; CLASS_COUNT];
    let mut social_episodes = 0u64;
    let mut exhausted_at = None;
    let mut records = Vec::new();
    let every = config.eval_every();

    let mut record = |episode: u64,
                      agent: &AgentGraph<F>,
                      learner: &dyn LearnerModel,
                      sp: &SocialPartner,
                      buffer: &InternalizationBuffer,
                      encountered: &mut ClassCounter,
                      proposed: &[u64; CLASS_COUNT],
                      social_episodes: u64,
                      eval_rng: &mut ChaCha8Rng|
     -> EvalResult {
        let result = evaluate(
            agent,
            learner,
            &classes,
            start,
            config.max_subgoals,
            config.stochastic_eval,
            eval_rng,
        );
        encountered.sync(agent);
        records.push(MetricsRecord {
            episode,
            class_sr: result.class_sr,
            global_sr: result.global_sr,
            discovered: agent.node_count(),
            stepping_stones: sp.frontier_len(),
            buffer_size: buffer.len(),
            social_episodes,
            proposed: *proposed,
            encountered: encountered.counts,
        });
        result
    };

    let first = record(
        0,
        &agent,
        &learner,
        &sp,
        &buffer,
        &mut encountered,
        &proposed,
        0,
        &mut eval_rng,
    );
    sampler.observe_evaluation(&first);

    let mut snapshot = None;
    for episode in 0..config.budget {
        if episode % config.nb_mpis == 0 {
            snapshot = agent.safest_tree(start).ok();
        }
        let turn = scheduler.schedule(episode, config.social_ratio, &sp, &mut rng);
        let mut session = Session {
            agent: &mut agent,
            sp: &mut sp,
            buffer: &mut buffer,
            learner: &mut learner,
            start,
            plan: config.plan_params(),
            snapshot: snapshot.as_ref(),
        };
        let social = match turn {
            Turn::Social => session.run_social_episode(&mut rng)?,
            Turn::Autotelic => None,
        };
        let mut log = match social {
            Some(log) => log,
            None => session.run_autotelic_episode(&mut sampler, rehearsal_prob, &mut rng)?,
        };
        log.episode = episode;
        if log.kind == EpisodeKind::Social {
            social_episodes += 1;
            for &g in &log.goals {
                if let Some(k) = space.classify(SemanticConfig::from_bits(g)) {
                    proposed[k.index()] += 1;
                }
            }
        }
        if exhausted_at.is_none() && log.stepping_stones == 0 {
            exhausted_at = Some(episode + 1);
        }
        if let Some(out) = sink.as_deref_mut() {
            log.write_ndjson(out)?;
        }
        let done = episode + 1;
        if done % every == 0 || done == config.budget {
            let result = record(
                done,
                &agent,
                &learner,
                &sp,
                &buffer,
                &mut encountered,
                &proposed,
                social_episodes,
                &mut eval_rng,
            );
            sampler.observe_evaluation(&result);
        }
    }

    let log = RunLog {
        config: config.clone(),
        seed,
        records,
        episodes: config.budget,
        stepping_stones_exhausted_at: exhausted_at,
        episode_stream: None,
    };
    Ok((log, agent))
}

/// Every seed of `config`, in order.
pub fn run_experiment<F: Real>(
    config: &ExperimentConfig,
    oracle: Arc<OracleGraph>,
    profiles: &ProfileSet,
) -> Result<Vec<RunLog>> {
    config.validate()?;
    profiles.get(&config.profile)?;
    config
        .seeds
        .iter()
        .map(|&seed| run_seed::<F>(config, seed, oracle.clone(), profiles, None))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WelchResult<F> {
    pub t: F,
    pub dof: F,
    pub p: F,
}

fn mean_var<F: Real>(xs: &[F]) -> (F, F) {
    let n = F::from_usize_lossy(xs.len());
    let mean = xs.iter().fold(F::zero(), |a, &x| a + x) / n;
    let ss = xs.iter().fold(F::zero(), |a, &x| a + (x - mean) * (x - mean));
    (mean, ss / (n - F::one()))
}

/// Two-sided Welch t-test with Welch-Satterthwaite degrees of freedom.
pub fn welch_t_test<F: Real>(a: &[F], b: &[F]) -> Result<WelchResult<F>> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateSamples(format!(
            "need at least two samples per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let sa = va / F::from_usize_lossy(a.len());
    let sb = vb / F::from_usize_lossy(b.len());
    let se2 = sa + sb;
    if !(se2 > F::zero()) {
        return Err(Error::DegenerateSamples("both samples have zero variance".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / F::from_usize_lossy(a.len() - 1) + sb * sb / F::from_usize_lossy(b.len() - 1));
    let dist = StudentsT::new(0.0, 1.0, dof.to_f64().unwrap_or(f64::NAN))
        .map_err(|e| Error::DegenerateSamples(e.to_string()))?;
    let p = 2.0 * dist.sf(t.to_f64().unwrap_or(f64::NAN).abs());
    Ok(WelchResult {
        t,
        dof,
        p: F::lit(p.min(1.0)),
    })
}

/// Column names of the tidy metrics CSV.
pub fn metrics_header() -> Vec<String> {
    let mut h: Vec<String> = ["label", "seed", "episode"].iter().map(|s| s.to_string()).collect();
    h.extend(EvalClass::ALL.iter().map(|c| format!("sr_{}", c.name())));
    for s in [
        "global_sr",
        "discovered",
        "stepping_stones",
        "buffer_size",
        "social_episodes",
    ] {
        h.push(s.to_string());
    }
    h.extend(EvalClass::ALL.iter().map(|c| format!("proposed_{}", c.name())));
    h.extend(EvalClass::ALL.iter().map(|c| format!("encountered_{}", c.name())));
    h
}

/// One row per evaluation per run.
pub fn write_metrics_csv<W: Write>(runs: &[RunLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(metrics_header())?;
    for run in runs {
        for r in &run.records {
            let mut row = vec![run.config.label.clone(), run.seed.to_string(), r.episode.to_string()];
            row.extend(r.class_sr.iter().map(|v| v.to_string()));
            row.push(r.global_sr.to_string());
            row.push(r.discovered.to_string());
            row.push(r.stepping_stones.to_string());
            row.push(r.buffer_size.to_string());
            row.push(r.social_episodes.to_string());
            row.extend(r.proposed.iter().map(|v| v.to_string()));
            row.extend(r.encountered.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

/// Mean and sample standard deviation; one value gives `sd = 0`.
pub fn mean_sd(xs: &[f64]) -> MeanSd {
    if xs.is_empty() {
        return MeanSd {
            mean: f64::NAN,
            sd: 0.0,
        };
    }
    if xs.len() == 1 {
        return MeanSd { mean: xs[0], sd: 0.0 };
    }
    let (mean, var) = mean_var(xs);
    MeanSd { mean, sd: var.sqrt() }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub episode: u64,
    pub seeds: usize,
    pub metrics: BTreeMap<String, MeanSd>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub seeds: Vec<u64>,
    pub points: Vec<SummaryPoint>,
}

fn record_fields(r: &MetricsRecord) -> Vec<(String, f64)> {
    let mut f: Vec<(String, f64)> = EvalClass::ALL
        .iter()
        .map(|c| (format!("sr_{}", c.name()), r.class_sr[c.index()]))
        .collect();
    f.push(("global_sr".into(), r.global_sr));
    f.push(("discovered".into(), r.discovered as f64));
    f.push(("stepping_stones".into(), r.stepping_stones as f64));
    f.push(("buffer_size".into(), r.buffer_size as f64));
    f.push(("social_episodes".into(), r.social_episodes as f64));
    for c in EvalClass::ALL {
        f.push((format!("proposed_{}", c.name()), r.proposed[c.index()] as f64));
        f.push((format!("encountered_{}", c.name()), r.encountered[c.index()] as f64));
    }
    f
}

/// Group runs by label and aggregate every metric over seeds at each
/// evaluation episode.
pub fn summarize(runs: &[RunLog]) -> Vec<RunSummary> {
    let mut groups: BTreeMap<&str, Vec<&RunLog>> = BTreeMap::new();
    for r in runs {
        groups.entry(&r.config.label).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(label, group)| {
            let mut at: BTreeMap<u64, Vec<&MetricsRecord>> = BTreeMap::new();
            for run in &group {
                for rec in &run.records {
                    at.entry(rec.episode).or_default().push(rec);
                }
            }
            let points = at
                .into_iter()
                .map(|(episode, recs)| {
                    let mut columns: BTreeMap<String, Vec<f64>> = BTreeMap::new();
                    for rec in &recs {
                        for (k, v) in record_fields(rec) {
                            columns.entry(k).or_default().push(v);
                        }
                    }
                    SummaryPoint {
                        episode,
                        seeds: recs.len(),
                        metrics: columns.into_iter().map(|(k, v)| (k, mean_sd(&v))).collect(),
                    }
                })
                .collect();
            RunSummary {
                label: label.to_string(),
                seeds: group.iter().map(|r| r.seed).collect(),
                points,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub episode: u64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub welch: Option<WelchResult<f64>>,
}

/// Welch test on global SR at every evaluation episode both sets share.
pub fn compare_runs(a: &[RunLog], b: &[RunLog]) -> Vec<CompareRow> {
    let collect = |runs: &[RunLog]| {
        let mut at: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for r in runs {
            for rec in &r.records {
                at.entry(rec.episode).or_default().push(rec.global_sr);
            }
        }
        at
    };
    let (xa, xb) = (collect(a), collect(b));
    xa.iter()
        .filter_map(|(ep, va)| {
            let vb = xb.get(ep)?;
            Some(CompareRow {
                episode: *ep,
                mean_a: mean_sd(va).mean,
                mean_b: mean_sd(vb).mean,
                welch: welch_t_test(va, vb).ok(),
            })
        })
        .collect()
}

pub fn write_compare_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "mean_a", "mean_b", "t", "dof", "p"])?;
    for r in rows {
        let (t, dof, p) = match &r.welch {
            Some(x) => (x.t.to_string(), x.dof.to_string(), x.p.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            r.episode.to_string(),
            r.mean_a.to_string(),
            r.mean_b.to_string(),
            t,
            dof,
            p,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<compare csv>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportPaths {
    pub metrics_csv: PathBuf,
    pub summary_json: PathBuf,
    pub runs_json: PathBuf,
}

fn create(path: &FsPath) -> Result<std::io::BufWriter<std::fs::File>> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write `metrics.csv`, `summary.json` and `runs.json` into `dir`.
pub fn emit_reports(runs: &[RunLog], dir: &FsPath) -> Result<ReportPaths> {
    if runs.is_empty() {
        return Err(Error::Config("no runs to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = ReportPaths {
        metrics_csv: dir.join("metrics.csv"),
        summary_json: dir.join("summary.json"),
        runs_json: dir.join("runs.json"),
    };
    write_metrics_csv(runs, create(&paths.metrics_csv)?)?;
    let mut out = create(&paths.summary_json)?;
    serde_json::to_writer_pretty(&mut out, &summarize(runs))?;
    out.write_all(b"\n").map_err(|e| Error::io(&paths.summary_json, e))?;
    let mut out = create(&paths.runs_json)?;
    serde_json::to_writer(&mut out, runs)?;
    out.write_all(b"\n").map_err(|e| Error::io(&paths.runs_json, e))?;
    out.flush().map_err(|e| Error::io(&paths.runs_json, e))?;
    Ok(paths)
}

pub fn load_runs(path: &FsPath) -> Result<Vec<RunLog>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}
