//! Command-line front end: run benchmark grids, replay and validate traces.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use warehouse_mapf::experiment::{emit_results, run_experiment, ExperimentConfig, ScenarioSource};
use warehouse_mapf::scenario::Layout;
use warehouse_mapf::trace::{render_frame, validate_trace, Trace};
use warehouse_mapf::{Algorithm, GridGraph, RunConfig, SpeedRegime};

#[derive(Parser)]
#[command(name = "bench", about = "Multi-robot planning benchmark under uncertain speeds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms × speed regimes × seeds and write CSV results.
    Run(RunArgs),
    /// Print a trace summary and its frames.
    Replay(ReplayArgs),
    /// Check every frame of a trace against the queue constraints.
    Validate(ValidateArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// key=value file mirroring the flags below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Map file: a `W H` line, then rows of `.` (free) and `@` (blocked).
    #[arg(long, conflicts_with = "gen")]
    map: Option<PathBuf>,
    /// Generate a WxH grid.
    #[arg(long)]
    gen: Option<String>,
    #[arg(long)]
    robots: Option<usize>,
    /// Comma-separated subset of pa,adcc,castar,pbs.
    #[arg(long)]
    algo: Option<String>,
    /// Comma-separated speed regimes such as 1,0.5-1,0-1,0.5,0-0.5.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// open or shelves.
    #[arg(long)]
    layout: Option<String>,
    /// Obstacle fraction for the open layout.
    #[arg(long)]
    density: Option<f64>,
    /// Draw a new instance for every run index.
    #[arg(long)]
    per_run_scenarios: bool,
    /// Write wall_s as 0 so repeated runs produce identical files.
    #[arg(long)]
    no_timing: bool,
    /// Also write each run's full trace.
    #[arg(long)]
    traces: bool,
    /// Planner or runner tunable, e.g. --param phi=3 (repeatable).
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Print every k-th frame instead of only the last.
    #[arg(long)]
    every: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Check against this map instead of the blocked cells in the trace.
    #[arg(long)]
    map: Option<PathBuf>,
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

fn parse_flag<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow::anyhow!("bad value `{v}` for {key}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("bad value `{v}` for {key}"),
    }
}

/// Fills unset flags from the config file; other keys are tunables.
fn merge(args: &mut RunArgs, file: BTreeMap<String, String>) -> Result<Vec<(String, String)>> {
    let mut params = Vec::new();
    for (k, v) in file {
        match k.as_str() {
            "map" => args.map = args.map.take().or(Some(PathBuf::from(&v))),
            "gen" => args.gen = args.gen.take().or(Some(v)),
            "robots" => args.robots = args.robots.or(Some(parse_flag(&k, &v)?)),
            "algo" => args.algo = args.algo.take().or(Some(v)),
            "regime" => args.regime = args.regime.take().or(Some(v)),
            "runs" => args.runs = args.runs.or(Some(parse_flag(&k, &v)?)),
            "seed" => args.seed = args.seed.or(Some(parse_flag(&k, &v)?)),
            "jobs" => args.jobs = args.jobs.or(Some(parse_flag(&k, &v)?)),
            "out" => args.out = args.out.take().or(Some(PathBuf::from(&v))),
            "layout" => args.layout = args.layout.take().or(Some(v)),
            "density" => args.density = args.density.or(Some(parse_flag(&k, &v)?)),
            "per_run_scenarios" => args.per_run_scenarios |= parse_bool(&k, &v)?,
            "no_timing" => args.no_timing |= parse_bool(&k, &v)?,
            "traces" => args.traces |= parse_bool(&k, &v)?,
            _ => params.push((k, v)),
        }
    }
    Ok(params)
}

fn parse_size(s: &str) -> Result<(u32, u32)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("--gen expects WxH, got `{s}`"))?;
    Ok((parse_flag("width", w.trim())?, parse_flag("height", h.trim())?))
}

fn experiment_config(mut args: RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut params = match &args.config {
        Some(p) => {
            let file = read_config(p)?;
            merge(&mut args, file)?
        }
        None => Vec::new(),
    };
    for p in &args.params {
        let (k, v) = p.split_once('=').with_context(|| format!("--param expects KEY=VALUE, got `{p}`"))?;
        params.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut run = RunConfig::default();
    for (k, v) in &params {
        run.set(k, v)?;
    }

    let robots = args.robots.unwrap_or(80);
    let layout = match &args.layout {
        Some(l) => Layout::parse(l)?,
        None => Layout::Open,
    };
    let source = match (&args.map, &args.gen) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let graph: GridGraph = text.parse().with_context(|| format!("parsing {}", path.display()))?;
            ScenarioSource::Map { graph, robots }
        }
        (None, gen) => {
            let (width, height) = parse_size(gen.as_deref().unwrap_or("30x30"))?;
            ScenarioSource::Generated {
                width,
                height,
                robots,
                layout,
                density: args.density.unwrap_or(0.0),
            }
        }
    };
    let algorithms = match &args.algo {
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(Algorithm::parse)
            .collect::<Result<Vec<_>, _>>()?,
        None => Algorithm::ALL.to_vec(),
    };
    let regimes = match &args.regime {
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(SpeedRegime::parse)
            .collect::<Result<Vec<_>, _>>()?,
        None => SpeedRegime::benchmark_set(),
    };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let config = ExperimentConfig {
        source,
        algorithms,
        regimes,
        runs: args.runs.unwrap_or(15),
        master_seed: args.seed.unwrap_or(1),
        jobs: args.jobs.unwrap_or(1),
        per_run_scenarios: args.per_run_scenarios,
        timing: !args.no_timing,
        keep_traces: args.traces,
        dump_dir: Some(out.clone()),
        run,
    };
    Ok((config, out))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.1}"))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let (config, out) = experiment_config(args)?;
    let results = run_experiment(&config)?;
    emit_results(&results, &out)?;
    println!("{:<8} {:<8} {:>9} {:>9} {:>9} {:>9} {:>6}", "algo", "regime", "mean", "median", "q1", "q3", "fail");
    for s in &results.summaries {
        println!(
            "{:<8} {:<8} {:>9} {:>9} {:>9} {:>9} {:>6.2}",
            s.algo,
            s.regime,
            fmt_opt(s.mean),
            fmt_opt(s.median),
            fmt_opt(s.q1),
            fmt_opt(s.q3),
            s.fail_rate
        );
    }
    println!("results written to {}", out.display());
    Ok(())
}

fn load_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.parse().with_context(|| format!("parsing {}", path.display()))
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let trace = load_trace(&args.trace)?;
    let graph = trace.graph()?;
    println!(
        "{}x{} grid, {} robots, seed {}, {} frames",
        trace.meta.width,
        trace.meta.height,
        trace.meta.goals.len(),
        trace.meta.seed,
        trace.frames.len()
    );
    match trace.makespan() {
        Some(t) => println!("make-span: {t}"),
        None => println!("make-span: not reached"),
    }
    match args.every {
        Some(k) => {
            for frame in trace.frames.iter().step_by(k.max(1)) {
                print!("{}", render_frame(&trace, &graph, frame));
            }
        }
        None => {
            if let Some(last) = trace.frames.last() {
                print!("{}", render_frame(&trace, &graph, last));
            }
        }
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<bool> {
    let trace = load_trace(&args.trace)?;
    let graph = match &args.map {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            text.parse().with_context(|| format!("parsing {}", p.display()))?
        }
        None => trace.graph()?,
    };
    if graph.width() != trace.meta.width || graph.height() != trace.meta.height {
        bail!("map size does not match the trace");
    }
    let violations = validate_trace(&trace, &graph);
    for v in &violations {
        println!("{v}");
    }
    println!("{} frames checked, {} violations", trace.frames.len(), violations.len());
    Ok(violations.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Replay(a) => cmd_replay(a).map(|_| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
