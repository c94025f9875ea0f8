use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hme_core::grid::{Grid, GridBounds};
use hme_core::harness::{
    compare_runs, emit_reports, evaluate, load_runs, parse_seeds, train_seed, write_compare_csv, EvalClasses,
    ExperimentConfig, RunLog,
};
use hme_core::learner::{build_learner, ProfileSet};
use hme_core::oracle::{enumerate_reachable, OracleGraph};
use hme_core::{Agent, EvalClass, SemanticConfig, Space};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "hme",
    version,
    about = "Social goal proposal laboratory for block-stacking exploration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the physically reachable configurations and their moves.
    BuildOracle(BuildOracle),
    /// Train agents and write metric reports.
    Run(Run),
    /// Evaluate a saved agent graph on the eleven goal classes.
    Evaluate(Evaluate),
    /// Welch t-tests on global success rate between two run sets.
    Compare(Compare),
    /// Print the size of every evaluation class.
    EnumerateClasses(EnumerateClasses),
}

#[derive(Args)]
struct BuildOracle {
    #[arg(long, default_value_t = 5)]
    objects: usize,
    #[arg(long, default_value_t = GridBounds::default().width)]
    width: i32,
    #[arg(long, default_value_t = GridBounds::default().depth)]
    depth: i32,
    #[arg(long, default_value_t = GridBounds::default().levels)]
    levels: i32,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct OracleSource {
    /// Oracle file from `build-oracle`; enumerated in memory when absent.
    #[arg(long)]
    oracle: Option<PathBuf>,
}

impl OracleSource {
    fn load(&self, objects: usize) -> Result<Arc<OracleGraph>> {
        let space = Space::shared(objects)?;
        let graph = match &self.oracle {
            Some(path) => OracleGraph::load(space, path).with_context(|| format!("loading {}", path.display()))?,
            None => {
                eprintln!("no --oracle given, enumerating {objects} objects");
                enumerate_reachable(&Grid::new(space, GridBounds::default()))?.graph
            }
        };
        if graph.objects() != objects {
            bail!("oracle has {} objects, expected {objects}", graph.objects());
        }
        Ok(Arc::new(graph))
    }
}

#[derive(Args)]
struct Run {
    /// Flat `key = value` experiment file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Learner profile overrides, `name.key = value` lines.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[command(flatten)]
    oracle: OracleSource,
    #[arg(long)]
    social_ratio: Option<f64>,
    #[arg(long)]
    no_internalization: bool,
    #[arg(long)]
    sampler: Option<String>,
    #[arg(long)]
    profile: Option<String>,
    /// `0,1,2` or `0..5`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    label: Option<String>,
    /// Report directory.
    #[arg(short, long, default_value = "hme-out")]
    out: PathBuf,
    /// Stream every episode to `episodes-seed<N>.ndjson`.
    #[arg(long)]
    episodes: bool,
    /// Save each trained agent graph to `agent-seed<N>.json`.
    #[arg(long)]
    save_agents: bool,
}

#[derive(Args)]
struct Evaluate {
    /// Agent graph written by `run --save-agents`.
    agent: PathBuf,
    #[command(flatten)]
    oracle: OracleSource,
    /// Learner that executes the planned hops.
    #[arg(long, default_value = "oracle")]
    profile: String,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = hme_core::agent::DEFAULT_MAX_SUBGOALS)]
    max_subgoals: usize,
}

#[derive(Args)]
struct Compare {
    /// `runs.json` or a report directory.
    a: PathBuf,
    b: PathBuf,
    /// Write the table as CSV here instead of stdout.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateClasses {
    #[arg(long, default_value_t = 5)]
    objects: usize,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::BuildOracle(a) => build_oracle(a),
        Command::Run(a) => run(a),
        Command::Evaluate(a) => evaluate_agent(a),
        Command::Compare(a) => compare(a),
        Command::EnumerateClasses(a) => enumerate_classes(a),
    }
}

fn build_oracle(a: BuildOracle) -> Result<()> {
    let space = Space::shared(a.objects)?;
    let bounds = GridBounds {
        width: a.width,
        depth: a.depth,
        levels: a.levels,
    };
    let started = Instant::now();
    let graph = enumerate_reachable(&Grid::new(space, bounds))?.graph;
    let elapsed = started.elapsed().as_secs_f64();
    graph.save(space, &a.output)?;
    let members = EvalClass::ALL
        .iter()
        .flat_map(|&c| space.enumerate_class(c))
        .filter(|&c| graph.is_reachable(c))
        .count();
    let total: usize = EvalClass::ALL.iter().map(|&c| space.enumerate_class(c).len()).sum();
    let m = graph.manifest();
    println!("configurations  {}", graph.node_count());
    println!("edges           {}", graph.edge_count());
    println!("orbits          {}", m.canonical_configs);
    println!("grid states     {}", m.grid_states_explored);
    println!("class members   {members}/{total}");
    println!("seconds         {elapsed:.1}");
    println!("written         {}", a.output.display());
    Ok(())
}

fn run(a: Run) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = a.social_ratio {
        cfg.social_ratio = v;
    }
    if a.no_internalization {
        cfg.internalization = false;
    }
    if let Some(v) = &a.sampler {
        cfg.sampler = v.parse()?;
    }
    if let Some(v) = &a.profile {
        cfg.profile = v.clone();
    }
    if let Some(v) = &a.seeds {
        cfg.seeds = parse_seeds(v)?;
    }
    if let Some(v) = a.budget {
        cfg.budget = v;
    }
    if let Some(v) = &a.label {
        cfg.label = v.clone();
    }
    cfg.validate()?;
    let profiles = match &a.profiles {
        Some(path) => ProfileSet::load(path)?,
        None => ProfileSet::default(),
    };
    profiles.get(&cfg.profile)?;
    let oracle = a.oracle.load(cfg.objects)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let mut runs: Vec<RunLog> = Vec::new();
    for &seed in &cfg.seeds {
        let started = Instant::now();
        let stream = a.out.join(format!("episodes-seed{seed}.ndjson"));
        let mut sink = if a.episodes {
            Some(BufWriter::new(
                File::create(&stream).with_context(|| stream.display().to_string())?,
            ))
        } else {
            None
        };
        let (mut log, agent) = train_seed::<f64>(
            &cfg,
            seed,
            oracle.clone(),
            &profiles,
            sink.as_mut().map(|w| w as &mut dyn Write),
        )?;
        if let Some(mut w) = sink {
            w.flush()?;
            log.episode_stream = Some(stream);
        }
        if a.save_agents {
            let path = a.out.join(format!("agent-seed{seed}.json"));
            std::fs::write(&path, agent.to_json_string()?).with_context(|| path.display().to_string())?;
        }
        let last = log.records.last().expect("final evaluation");
        eprintln!(
            "seed {seed}: global sr {:.3}, discovered {}, stepping stones {}, {:.1}s",
            last.global_sr,
            last.discovered,
            last.stepping_stones,
            started.elapsed().as_secs_f64()
        );
        runs.push(log);
    }
    let paths = emit_reports(&runs, &a.out)?;
    println!("{}", paths.metrics_csv.display());
    println!("{}", paths.summary_json.display());
    println!("{}", paths.runs_json.display());
    Ok(())
}

fn evaluate_agent(a: Evaluate) -> Result<()> {
    let text = std::fs::read_to_string(&a.agent).with_context(|| a.agent.display().to_string())?;
    let agent = Agent::from_json_str(&text)?;
    let space = agent.space();
    let profiles = match &a.profiles {
        Some(path) => ProfileSet::load(path)?,
        None => ProfileSet::default(),
    };
    let oracle = a.oracle.load(space.objects())?;
    let learner = build_learner::<f64>(space, oracle, profiles.get(&a.profile)?)?;
    let classes = EvalClasses::new(space);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let result = evaluate(
        &agent,
        &learner,
        &classes,
        SemanticConfig::EMPTY,
        a.max_subgoals,
        false,
        &mut rng,
    );
    for class in EvalClass::ALL {
        println!("{:<8}{:.3}", class.name(), result.class_sr[class.index()]);
    }
    println!("{:<8}{:.3}", "global", result.global_sr);
    Ok(())
}

fn runs_at(path: &Path) -> Result<Vec<RunLog>> {
    let file = if path.is_dir() {
        path.join("runs.json")
    } else {
        path.to_path_buf()
    };
    load_runs(&file).with_context(|| format!("loading {}", file.display()))
}

fn compare(a: Compare) -> Result<()> {
    let rows = compare_runs(&runs_at(&a.a)?, &runs_at(&a.b)?);
    if rows.is_empty() {
        bail!("the two run sets share no evaluation episode");
    }
    match &a.out {
        Some(path) => write_compare_csv(&rows, BufWriter::new(File::create(path)?))?,
        None => write_compare_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn enumerate_classes(a: EnumerateClasses) -> Result<()> {
    let space = Space::shared(a.objects)?;
    for class in EvalClass::ALL {
        println!("{:<8}{}", class.name(), space.enumerate_class(class).len());
    }
    Ok(())
}
