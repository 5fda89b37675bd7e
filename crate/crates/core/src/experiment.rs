//! Benchmark orchestration: algorithms × speed regimes × seeded runs,
//! per-cell summaries and CSV output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridGraph;
use crate::runner::{run_simulation, Algorithm, RunConfig, Termination};
use crate::scenario::{generate_with_layout, place_robots, Layout, Scenario};
use crate::sim::SpeedRegime;

/// Where each run's instance comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioSource {
    Generated {
        width: u32,
        height: u32,
        robots: usize,
        layout: Layout,
        density: f64,
    },
    Map { graph: GridGraph, robots: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: ScenarioSource,
    pub algorithms: Vec<Algorithm>,
    pub regimes: Vec<SpeedRegime>,
    pub runs: usize,
    pub master_seed: u64,
    pub jobs: usize,
    /// Draw a fresh instance for every run index instead of one shared one.
    pub per_run_scenarios: bool,
    /// Record wall-clock seconds; off writes zeros so outputs are
    /// byte-reproducible.
    pub timing: bool,
    pub keep_traces: bool,
    /// Where a trace is written if a run violates a constraint.
    pub dump_dir: Option<PathBuf>,
    pub run: RunConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: ScenarioSource::Generated {
                width: 30,
                height: 30,
                robots: 80,
                layout: Layout::Open,
                density: 0.0,
            },
            algorithms: Algorithm::ALL.to_vec(),
            regimes: SpeedRegime::benchmark_set(),
            runs: 15,
            master_seed: 1,
            jobs: 1,
            per_run_scenarios: false,
            timing: true,
            keep_traces: false,
            dump_dir: None,
            run: RunConfig::default(),
        }
    }
}

/// Seed for `(label, index)` under a master seed: the first eight bytes of
/// `SHA-256("master|label|index")`, little-endian.
pub fn derive_seed(master: u64, label: &str, index: usize) -> u64 {
    let digest = Sha256::digest(format!("{master}|{label}|{index}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn build_scenario(source: &ScenarioSource, seed: u64) -> Result<Scenario> {
    match source {
        ScenarioSource::Generated {
            width,
            height,
            robots,
            layout,
            density,
        } => generate_with_layout(*width, *height, *robots, *layout, *density, seed),
        ScenarioSource::Map { graph, robots } => place_robots(graph, *robots, seed),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub algo: Algorithm,
    pub regime: String,
    pub run: usize,
    pub seed: u64,
    pub makespan: Option<u64>,
    pub termination: Termination,
    pub wall_s: f64,
    pub violations: usize,
    pub trace_hash: String,
    pub trace: Option<String>,
    pub soft_failures: u64,
    pub rounds: u64,
}

impl RunResult {
    pub fn timeout(&self) -> bool {
        self.makespan.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub algo: String,
    pub regime: String,
    pub seed: u64,
    pub makespan: Option<u64>,
    pub timeout: bool,
    pub wall_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algo: String,
    pub regime: String,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub fail_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algo: String,
    pub regime: String,
    pub seed: u64,
    pub sha256: String,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Statistics over completed runs; the failure rate counts timeouts.
pub fn summarize(algo: &str, regime: &str, results: &[&RunResult]) -> SummaryRow {
    let mut xs: Vec<f64> = results.iter().filter_map(|r| r.makespan).map(|m| m as f64).collect();
    xs.sort_by(f64::total_cmp);
    let fail_rate = if results.is_empty() {
        0.0
    } else {
        results.iter().filter(|r| r.timeout()).count() as f64 / results.len() as f64
    };
    let stat = |f: &dyn Fn(&[f64]) -> f64| (!xs.is_empty()).then(|| f(&xs));
    SummaryRow {
        algo: algo.to_string(),
        regime: regime.to_string(),
        mean: stat(&|v| v.iter().sum::<f64>() / v.len() as f64),
        median: stat(&|v| quantile(v, 0.5)),
        q1: stat(&|v| quantile(v, 0.25)),
        q3: stat(&|v| quantile(v, 0.75)),
        min: stat(&|v| v[0]),
        max: stat(&|v| v[v.len() - 1]),
        fail_rate,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResults {
    pub runs: Vec<RunResult>,
    pub summaries: Vec<SummaryRow>,
}

struct Job {
    algo: Algorithm,
    regime_index: usize,
    run: usize,
}

fn execute(config: &ExperimentConfig, scenarios: &[Scenario], job: &Job) -> Result<RunResult> {
    let regime = config.regimes[job.regime_index];
    let label = regime.label();
    let seed = derive_seed(config.master_seed, &label, job.run);
    let scenario = &scenarios[if config.per_run_scenarios { job.run } else { 0 }];
    let run_cfg = RunConfig {
        regime,
        keep_trace: config.keep_traces,
        ..config.run.clone()
    };
    let started = Instant::now();
    let report = run_simulation(scenario, job.algo, &run_cfg, seed)?;
    let wall_s = if config.timing { started.elapsed().as_secs_f64() } else { 0.0 };
    if !report.violations.is_empty() {
        if let Some(dir) = &config.dump_dir {
            let full = run_simulation(scenario, job.algo, &RunConfig { keep_trace: true, ..run_cfg }, seed)?;
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let path = dir.join(format!("violation_{}_{}_{}.trace", job.algo, label, job.run));
            fs::write(&path, full.trace.unwrap_or_default()).map_err(|e| Error::io(&path, e))?;
        }
        return Err(Error::Safety(format!(
            "{} regime {label} run {}: {}",
            job.algo,
            job.run,
            report.violations.join("; ")
        )));
    }
    Ok(RunResult {
        algo: job.algo,
        regime: label,
        run: job.run,
        seed,
        makespan: report.makespan,
        termination: report.termination,
        wall_s,
        violations: 0,
        trace_hash: report.trace_hash,
        trace: report.trace,
        soft_failures: report.soft_failures,
        rounds: report.rounds,
    })
}

/// Runs every algorithm × regime × run cell. Output order is algorithm,
/// then regime, then run index, whatever the job count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    if config.algorithms.is_empty() {
        return Err(Error::Config("no algorithms selected".into()));
    }
    if config.regimes.is_empty() {
        return Err(Error::Config("no speed regimes selected".into()));
    }
    if config.runs == 0 {
        return Err(Error::Config("run count must be positive".into()));
    }
    let scenario_count = if config.per_run_scenarios { config.runs } else { 1 };
    let scenarios: Vec<Scenario> = (0..scenario_count)
        .map(|i| build_scenario(&config.source, derive_seed(config.master_seed, "scenario", i)))
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for &algo in &config.algorithms {
        for regime_index in 0..config.regimes.len() {
            for run in 0..config.runs {
                jobs.push(Job {
                    algo,
                    regime_index,
                    run,
                });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let runs: Vec<RunResult> =
        pool.install(|| jobs.par_iter().map(|j| execute(config, &scenarios, j)).collect::<Result<_>>())?;

    let mut summaries = Vec::new();
    for &algo in &config.algorithms {
        for regime in &config.regimes {
            let label = regime.label();
            let cell: Vec<&RunResult> = runs.iter().filter(|r| r.algo == algo && r.regime == label).collect();
            summaries.push(summarize(algo.id(), &label, &cell));
        }
    }
    Ok(ExperimentResults { runs, summaries })
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv(format!("{}: {e}", path.display()))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

/// Writes `runs.csv`, `summary.csv` and `traces.csv` into `dir`, plus one
/// trace file per run when traces were kept.
pub fn emit_results(results: &ExperimentResults, dir: &Path) -> Result<()> {
    if results.runs.is_empty() {
        return Err(Error::Config("no results to write".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let runs: Vec<RunRow> = results
        .runs
        .iter()
        .map(|r| RunRow {
            algo: r.algo.id().to_string(),
            regime: r.regime.clone(),
            seed: r.seed,
            makespan: r.makespan,
            timeout: r.timeout(),
            wall_s: r.wall_s,
        })
        .collect();
    write_csv(&dir.join("runs.csv"), &runs)?;
    write_csv(&dir.join("summary.csv"), &results.summaries)?;
    let traces: Vec<TraceRow> = results
        .runs
        .iter()
        .map(|r| TraceRow {
            algo: r.algo.id().to_string(),
            regime: r.regime.clone(),
            seed: r.seed,
            sha256: r.trace_hash.clone(),
        })
        .collect();
    write_csv(&dir.join("traces.csv"), &traces)?;
    for r in &results.runs {
        if let Some(text) = &r.trace {
            let path = dir.join(format!("trace_{}_{}_{}.csv", r.algo, r.regime, r.run));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}
