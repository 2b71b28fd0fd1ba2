//! Multi-run experiments: training-size sweeps, algorithm comparisons, the
//! hand-built scenarios, and bucketed drifting campaigns.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::run::{compute_buy_all_budget, load_campaign, run_paired, Campaign, RunRecord, RunSetting};
use crate::distributions::{make_example1_instance, make_lemma2_instance, make_slow_moving_interpolation};
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

/// Runs `repetitions` paired runs in parallel and concatenates their records
/// in repetition order.
fn repeat<F>(repetitions: usize, run: F) -> Vec<RunRecord>
where
    F: Fn(u32) -> Vec<RunRecord> + Sync,
{
    let chunks: Vec<Vec<RunRecord>> = (0..repetitions as u32).into_par_iter().map(&run).collect();
    chunks.into_iter().flatten().collect()
}

fn budget_for(config: &ExperimentConfig, buy_all: f64, frac: f64) -> (f64, Option<f64>) {
    match config.budget {
        Some(b) => (b, None),
        None => (frac * buy_all, Some(frac)),
    }
}

/// Paired runs of every configured algorithm on one campaign at the config's
/// budget.
pub fn run_repetitions(config: &ExperimentConfig, label: &str, campaign: &Campaign) -> Result<Vec<RunRecord>> {
    let buy_all = compute_buy_all_budget(campaign, config.seed, config.buy_all_seeds);
    let (budget, frac) = budget_for(config, buy_all, config.budget_frac);
    if !(budget > 0.0) {
        return Err(Error::Config(format!("budget for {label} is zero (buy-all spend {buy_all})")));
    }
    let episodes = campaign.natural_episodes();
    Ok(repeat(config.repetitions, |rep| {
        let setting = RunSetting { label, campaign, budget, budget_frac: frac, repetition: rep, plan_episodes: episodes };
        run_paired(config, &setting, false).records
    }))
}

/// For each dataset, `repetitions` paired runs with the budget fraction drawn
/// uniformly from `(0, max_budget_frac]`.
pub fn compare_algorithms(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let mut all = Vec::new();
    for dataset in config.dataset_list() {
        let campaign = load_campaign(config, &dataset)?;
        let buy_all = compute_buy_all_budget(&campaign, config.seed, config.buy_all_seeds);
        let episodes = campaign.natural_episodes();
        all.extend(repeat(config.repetitions, |rep| {
            let mut rng = stream(config.seed, Purpose::BudgetDraw, rep);
            let u: f64 = rng.gen();
            let frac = (1.0 - u) * config.max_budget_frac;
            let setting = RunSetting {
                label: &dataset,
                campaign: &campaign,
                budget: frac * buy_all,
                budget_frac: Some(frac),
                repetition: rep,
                plan_episodes: episodes,
            };
            run_paired(config, &setting, false).records
        }));
    }
    Ok(all)
}

/// One point of a training-size sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub budget_frac: f64,
    pub algorithm: String,
    pub mean_ratio: f64,
    pub stderr: f64,
    pub runs: usize,
}

/// Mean utility ratio over `repetitions` seeds for every `(n, budget_frac)`.
/// Repetition `r` uses the same evaluation realization at every grid point.
pub fn sweep_samples(config: &ExperimentConfig) -> Result<(Vec<SweepRow>, Vec<RunRecord>)> {
    let campaign = load_campaign(config, &config.dataset)?;
    let buy_all = compute_buy_all_budget(&campaign, config.seed, config.buy_all_seeds);
    let episodes = campaign.natural_episodes();
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &n in &config.n_grid {
        let cfg = ExperimentConfig { n, ..config.clone() };
        for &frac in &config.budget_fracs {
            let budget = frac * buy_all;
            let recs = repeat(config.repetitions, |rep| {
                let setting = RunSetting {
                    label: &config.dataset,
                    campaign: &campaign,
                    budget,
                    budget_frac: Some(frac),
                    repetition: rep,
                    plan_episodes: episodes,
                };
                run_paired(&cfg, &setting, false).records
            });
            for algorithm in &config.algorithms {
                let ratios: Vec<f64> =
                    recs.iter().filter(|r| r.algorithm == algorithm.name()).map(|r| r.utility_ratio).collect();
                let (mean, stderr) = mean_stderr(&ratios);
                rows.push(SweepRow {
                    n,
                    budget_frac: frac,
                    algorithm: algorithm.name().to_string(),
                    mean_ratio: mean,
                    stderr,
                    runs: ratios.len(),
                });
            }
            records.extend(recs);
        }
    }
    Ok((rows, records))
}

/// Paired runs on a drifting campaign for every bucket count in
/// `e_bucket_grid`. Repetition `r` sees the same realization for every bucket
/// count.
pub fn slow_moving_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let campaign = match &config.model_file {
        Some(_) => load_campaign(config, &config.dataset)?,
        None => {
            let (start, end) = config.drift_endpoints()?;
            Campaign::SlowMoving(make_slow_moving_interpolation(&start, &end, config.horizon)?)
        }
    };
    if !matches!(campaign, Campaign::SlowMoving(_)) {
        return Err(Error::Config("slow-moving runs need a slow_moving model".into()));
    }
    let buy_all = compute_buy_all_budget(&campaign, config.seed, config.buy_all_seeds);
    let (budget, frac) = budget_for(config, buy_all, config.budget_frac);
    let mut all = Vec::new();
    for &e in &config.e_bucket_grid {
        if campaign.horizon() % e != 0 {
            return Err(Error::IndivisibleHorizon { rounds: campaign.horizon(), episodes: e });
        }
        let label = format!("slow_moving_e{e}");
        all.extend(repeat(config.repetitions, |rep| {
            let setting = RunSetting {
                label: &label,
                campaign: &campaign,
                budget,
                budget_frac: frac,
                repetition: rep,
                plan_episodes: e,
            };
            run_paired(config, &setting, false).records
        }));
    }
    Ok(all)
}

/// Paired runs on both two-episode history instances (`example1_i` and
/// `example1_i_prime`) at their built-in budget.
pub fn example1_demo(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let (first, second) = make_example1_instance(config.horizon)?;
    let mut all = Vec::new();
    for (label, scenario) in [("example1_i", first), ("example1_i_prime", second)] {
        let campaign = Campaign::Episodic(scenario.model);
        all.extend(repeat(config.repetitions, |rep| {
            let setting = RunSetting {
                label,
                campaign: &campaign,
                budget: scenario.budget,
                budget_frac: None,
                repetition: rep,
                plan_episodes: 2,
            };
            run_paired(config, &setting, false).records
        }));
    }
    Ok(all)
}

/// Parameters of the fixed-multiplier counterexample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Params {
    pub tau: usize,
    pub p_high: f64,
    pub v_low: f64,
    pub v_high: f64,
}

impl Default for Lemma2Params {
    fn default() -> Self {
        Self { tau: 5, p_high: 10.0, v_low: 1.0, v_high: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma2Summary {
    pub runs: usize,
    pub threshold: f64,
    /// Fraction of runs where the fixed multiplier's regret reaches `threshold`.
    pub large_regret_fraction: f64,
    pub median_ratio_pipeline: f64,
    pub median_ratio_fixed_multiplier: f64,
}

/// Runs the pipeline and the ex-ante optimal fixed multiplier on the
/// counterexample instance.
pub fn lemma2_demo(config: &ExperimentConfig, params: Lemma2Params) -> Result<(Lemma2Summary, Vec<RunRecord>)> {
    let inst = make_lemma2_instance(params.tau, params.p_high, params.v_low, params.v_high)?;
    let cfg = ExperimentConfig {
        algorithms: vec![Algorithm::ChangingSpend, Algorithm::FixedMultiplier],
        beta: Some(inst.beta_star),
        ..config.clone()
    };
    let campaign = Campaign::Episodic(inst.scenario.model.clone());
    let records = repeat(cfg.repetitions, |rep| {
        let setting = RunSetting {
            label: "lemma2",
            campaign: &campaign,
            budget: inst.scenario.budget,
            budget_frac: None,
            repetition: rep,
            plan_episodes: 2,
        };
        run_paired(&cfg, &setting, false).records
    });
    let threshold = inst.regret_threshold();
    let fm: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == "fixed_multiplier").collect();
    let large = fm.iter().filter(|r| r.hindsight - r.utility >= threshold - 1e-9).count();
    let summary = Lemma2Summary {
        runs: fm.len(),
        threshold,
        large_regret_fraction: large as f64 / fm.len().max(1) as f64,
        median_ratio_pipeline: median(&ratios_of(&records, "changing_spend")),
        median_ratio_fixed_multiplier: median(&ratios_of(&records, "fixed_multiplier")),
    };
    Ok((summary, records))
}

/// Per-(dataset, algorithm) aggregates of a record table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub algorithm: String,
    pub runs: usize,
    pub mean_ratio: f64,
    pub median_ratio: f64,
    pub stderr: f64,
    pub errors: usize,
    pub overdrafts: usize,
}

pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let k = (r.dataset.clone(), r.algorithm.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(dataset, algorithm)| {
            let rows: Vec<&RunRecord> =
                records.iter().filter(|r| r.dataset == dataset && r.algorithm == algorithm).collect();
            let ratios: Vec<f64> = rows.iter().map(|r| r.utility_ratio).collect();
            let (mean, stderr) = mean_stderr(&ratios);
            SummaryRow {
                runs: rows.len(),
                mean_ratio: mean,
                median_ratio: median(&ratios),
                stderr,
                errors: rows.iter().filter(|r| r.error.is_some()).count(),
                overdrafts: rows.iter().filter(|r| r.spend > r.budget * (1.0 + 1e-12)).count(),
                dataset,
                algorithm,
            }
        })
        .collect()
}

pub fn ratios_of(records: &[RunRecord], algorithm: &str) -> Vec<f64> {
    records.iter().filter(|r| r.algorithm == algorithm).map(|r| r.utility_ratio).collect()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Writes any serializable rows as CSV with a header.
pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
