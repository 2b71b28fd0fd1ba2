use std::process::Command;

use spendpace::distributions::{make_slow_moving_interpolation, DistributionSpec, Episode, EpisodicModel};
use spendpace::harness::{
    compare_algorithms, emit_plot, load_campaign, mean_stderr, run_end_to_end, run_repetitions, run_slow_moving,
    write_csv, Algorithm, ExperimentConfig, PlotKind, PlotTable,
};

#[test]
fn slack_budget_is_nearly_optimal() {
    let config = ExperimentConfig {
        budget_frac: 1.2,
        repetitions: 10,
        algorithms: vec![Algorithm::ChangingSpend, Algorithm::Truthful],
        ..ExperimentConfig::default()
    };
    for dataset in ["uniform_v_fix_p", "normal_v_normal_p"] {
        let campaign = load_campaign(&config, dataset).unwrap();
        let recs = run_repetitions(&config, dataset, &campaign).unwrap();
        for alg in ["changing_spend", "truthful"] {
            let ratios: Vec<f64> = recs.iter().filter(|r| r.algorithm == alg).map(|r| r.utility_ratio).collect();
            let (mean, _) = mean_stderr(&ratios);
            assert!(mean >= 0.99, "{dataset} {alg} mean ratio {mean}");
        }
    }
}

#[test]
fn zero_drift_matches_stationary_episodes() {
    let episode = Episode::new(DistributionSpec::uniform(0.0, 2.0).unwrap(), DistributionSpec::uniform(0.2, 1.2).unwrap());
    let horizon = 1000;
    let drifting = make_slow_moving_interpolation(&episode, &episode, horizon).unwrap();
    assert_eq!(drifting.declared_zeta, 0.0);
    let stationary = EpisodicModel::with_horizon(horizon, vec![episode; 10]).unwrap();
    let config = ExperimentConfig { algorithms: vec![Algorithm::ChangingSpend], n: 500, ..ExperimentConfig::default() };
    let budget = 150.0;
    let diffs: Vec<f64> = (0..50u32)
        .map(|rep| {
            let a = run_slow_moving(&config, "drift", &drifting, 10, budget, None, rep);
            let b = run_end_to_end(&config, "stationary", &stationary, budget, None, rep);
            a[0].utility_ratio - b[0].utility_ratio
        })
        .collect();
    let (mean, _) = mean_stderr(&diffs);
    assert!(mean.abs() < 0.02, "mean paired difference {mean}");
}

#[test]
fn one_round_buckets_still_run() {
    let start = Episode::new(DistributionSpec::uniform(0.0, 2.0).unwrap(), DistributionSpec::atom(1.0).unwrap());
    let end = Episode::new(DistributionSpec::uniform(0.0, 1.5).unwrap(), DistributionSpec::atom(1.0).unwrap());
    let model = make_slow_moving_interpolation(&start, &end, 50).unwrap();
    let config = ExperimentConfig { n: 20, ..ExperimentConfig::default() };
    let recs = run_slow_moving(&config, "drift", &model, 50, 10.0, None, 0);
    assert_eq!(recs.len(), config.algorithms.len());
    assert!(recs.iter().all(|r| r.error.is_none() && r.spend <= r.budget));
}

#[test]
fn replays_are_byte_identical() {
    let config = ExperimentConfig {
        repetitions: 3,
        n: 200,
        datasets: vec!["lognorm_v_fix_p".into(), "uniform_v_normal_p".into()],
        algorithms: Algorithm::ALL.to_vec(),
        ..ExperimentConfig::default()
    };
    let csv = |cfg: &ExperimentConfig| {
        let mut buf = Vec::new();
        write_csv(&compare_algorithms(cfg).unwrap(), &mut buf).unwrap();
        buf
    };
    let first = csv(&config);
    assert_eq!(first, csv(&config));
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("dataset,seed,repetition,"));
}

#[test]
fn plots_for_both_figure_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let mut line = PlotTable::new("sweep", "n", "ratio");
    line.log_x = true;
    for n in [10.0, 100.0, 1000.0] {
        line.push("0.5", n, 0.9);
    }
    emit_plot(&line, PlotKind::Line, &dir.path().join("fig1.svg")).unwrap();
    let mut scatter = PlotTable::new("compare", "budget_frac", "ratio");
    scatter.push("truthful", 0.3, 0.4);
    scatter.push("changing_spend", 0.3, 0.95);
    emit_plot(&scatter, PlotKind::Scatter, &dir.path().join("fig2.svg")).unwrap();
    assert!(dir.path().join("fig2.csv").exists());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spendpace"))
}

#[test]
fn cli_estimate_then_pace() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let trace = dir.path().join("trace.csv");
    let out = cli().args(["estimate", "--dataset", "normal_v_fix_p", "-n", "300", "-o"]).arg(&plan).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli()
        .args(["pace", "--dataset", "normal_v_fix_p", "--plan"])
        .arg(&plan)
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["spend"].as_f64().unwrap() <= summary["budget"].as_f64().unwrap());
    let rows = std::fs::read_to_string(&trace).unwrap();
    assert!(rows.starts_with("t,e,v,p,b,z,mu,budget\n"));
    assert_eq!(rows.lines().count(), 1001);
}

#[test]
fn cli_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "repetitions = 1\nn = 100\ndataset = \"uniform_v_fix_p\"\nalgorithms = [\"truthful\"]\n").unwrap();
    let out = cli()
        .arg("--config")
        .arg(&cfg)
        .args(["run", "--algorithms", "changing_spend,truthful", "-o"])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(dir.path().join("run").join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 3);
    assert!(records.contains("changing_spend"));
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "no_such_field = 1\n").unwrap();
    let out = cli().arg("--config").arg(&cfg).arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = cli().args(["estimate", "--dataset", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = cli().args(["pace", "--plan"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
