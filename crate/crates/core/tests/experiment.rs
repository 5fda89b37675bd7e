//! Experiment orchestration: aggregates, CSV output and reproducibility.

use warehouse_mapf::experiment::{
    emit_results, read_csv, run_experiment, summarize, ExperimentConfig, RunResult, RunRow, ScenarioSource, SummaryRow,
};
use warehouse_mapf::runner::Termination;
use warehouse_mapf::scenario::{generate_scenario, Layout};
use warehouse_mapf::{Algorithm, SpeedRegime};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        source: ScenarioSource::Generated {
            width: 10,
            height: 10,
            robots: 8,
            layout: Layout::Open,
            density: 0.0,
        },
        algorithms: vec![Algorithm::Pa, Algorithm::CaStar],
        regimes: vec![SpeedRegime::fixed(1.0).unwrap(), SpeedRegime::uniform(0.5, 1.0).unwrap()],
        runs: 4,
        jobs: 2,
        timing: false,
        ..ExperimentConfig::default()
    }
}

/// One-pass mean and sorted-order statistics written out independently.
fn reference(makespans: &[u64]) -> (f64, f64, f64) {
    let (mut sum, mut n) = (0.0, 0.0);
    for &m in makespans {
        sum += m as f64;
        n += 1.0;
    }
    let mut v = makespans.to_vec();
    v.sort_unstable();
    let median = if v.len() % 2 == 1 {
        v[v.len() / 2] as f64
    } else {
        (v[v.len() / 2 - 1] + v[v.len() / 2]) as f64 / 2.0
    };
    (sum / n, median, (v[0] as f64))
}

#[test]
fn summaries_agree_with_a_separate_recomputation() {
    let cfg = small_config();
    let results = run_experiment(&cfg).unwrap();
    assert_eq!(results.runs.len(), 2 * 2 * 4);
    assert_eq!(results.summaries.len(), 2 * 2);
    for s in &results.summaries {
        let cell: Vec<u64> = results
            .runs
            .iter()
            .filter(|r| r.algo.id() == s.algo && r.regime == s.regime)
            .map(|r| r.makespan.expect("small instances complete"))
            .collect();
        assert_eq!(cell.len(), 4);
        let (mean, median, min) = reference(&cell);
        assert!((s.mean.unwrap() - mean).abs() <= 1e-12 * mean);
        assert_eq!(s.median.unwrap(), median);
        assert_eq!(s.min.unwrap(), min);
        assert_eq!(s.max.unwrap(), *cell.iter().max().unwrap() as f64);
        assert_eq!(s.fail_rate, 0.0);
    }
}

#[test]
fn csv_files_round_trip_and_repeat_byte_for_byte() {
    let cfg = small_config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = run_experiment(&cfg).unwrap();
    emit_results(&first, a.path()).unwrap();
    let serial = ExperimentConfig { jobs: 1, ..small_config() };
    emit_results(&run_experiment(&serial).unwrap(), b.path()).unwrap();
    for name in ["runs.csv", "summary.csv", "traces.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between job counts");
    }
    let header = std::fs::read_to_string(a.path().join("runs.csv")).unwrap();
    assert!(header.starts_with("algo,regime,seed,makespan,timeout,wall_s\n"));
    let header = std::fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert!(header.starts_with("algo,regime,mean,median,q1,q3,min,max,fail_rate\n"));

    let rows: Vec<RunRow> = read_csv(&a.path().join("runs.csv")).unwrap();
    assert_eq!(rows.len(), first.runs.len());
    for (row, run) in rows.iter().zip(&first.runs) {
        assert_eq!((row.algo.as_str(), &row.regime, row.seed, row.makespan), (run.algo.id(), &run.regime, run.seed, run.makespan));
        assert_eq!(row.wall_s, 0.0);
    }
    let summary: Vec<SummaryRow> = read_csv(&a.path().join("summary.csv")).unwrap();
    assert_eq!(summary, first.summaries);
}

#[test]
fn timeouts_count_towards_failure_but_not_the_mean() {
    let run = |makespan: Option<u64>| RunResult {
        algo: Algorithm::Pbs,
        regime: "1".into(),
        run: 0,
        seed: 0,
        makespan,
        termination: if makespan.is_some() { Termination::Completed } else { Termination::NodeCap },
        wall_s: 0.0,
        violations: 0,
        trace_hash: String::new(),
        trace: None,
        soft_failures: 0,
        rounds: 0,
    };
    let rows = [run(Some(10)), run(None), run(Some(20)), run(Some(30))];
    let refs: Vec<&RunResult> = rows.iter().collect();
    let s = summarize("pbs", "1", &refs);
    assert_eq!(s.mean, Some(20.0));
    assert_eq!(s.fail_rate, 0.25);
    let none: Vec<&RunResult> = Vec::new();
    assert_eq!(summarize("pbs", "1", &none).mean, None);
}

#[test]
fn empty_selections_are_rejected() {
    let cfg = ExperimentConfig {
        regimes: Vec::new(),
        ..small_config()
    };
    assert!(run_experiment(&cfg).is_err());
    let cfg = ExperimentConfig {
        algorithms: Vec::new(),
        ..small_config()
    };
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn generated_scenarios_satisfy_their_invariants() {
    let sc = generate_scenario(30, 30, 80, 0.0, 5).unwrap();
    assert_eq!(sc.robots.len(), 80);
    sc.check().unwrap();
    assert_eq!(generate_scenario(30, 30, 80, 0.0, 5).unwrap(), sc);
    assert!(generate_scenario(30, 30, 0, 0.0, 5).unwrap().robots.is_empty());
    for seed in 0..10 {
        generate_scenario(20, 20, 30, 0.15, seed).unwrap().check().unwrap();
    }
}
