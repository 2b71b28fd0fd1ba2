//! One paired run: train a plan, realize a campaign once, and play every
//! configured algorithm against the same realization.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, DeltaMode, ExperimentConfig, MuInit, NamedDelta, NamedMuInit};
use crate::benchmark::{hindsight_value, run_strategy, Realization, TraceRecord};
use crate::distributions::{make_dataset, EpisodicModel, MetaRanges, ModelDocument, SlowMovingModel};
use crate::error::{Error, Result};
use crate::pacing::{
    default_eta, default_mu_bar, fixed_multiplier_strategy, fixed_rate_pacer, truthful_strategy, EpisodicPacer,
    PacerConfig, Strategy,
};
use crate::rng::{stream, Purpose};
use crate::spendplan::{
    approx_spend_rate, bucket_slow_moving, default_delta, normalize_plan, DeltaContext, SpendPlan,
};

/// Hindsight values at or below this count as zero when forming ratios.
pub const HINDSIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Campaign {
    Episodic(EpisodicModel),
    SlowMoving(SlowMovingModel),
}

impl Campaign {
    pub fn horizon(&self) -> usize {
        match self {
            Campaign::Episodic(m) => m.horizon(),
            Campaign::SlowMoving(m) => m.horizon(),
        }
    }

    pub fn value_upper_bound(&self) -> f64 {
        match self {
            Campaign::Episodic(m) => m.value_upper_bound(),
            Campaign::SlowMoving(m) => m.value_upper_bound(),
        }
    }

    /// Episodes of the plan: the model's own for episodic campaigns.
    pub fn natural_episodes(&self) -> usize {
        match self {
            Campaign::Episodic(m) => m.num_episodes(),
            Campaign::SlowMoving(m) => m.horizon(),
        }
    }

    pub fn realize(&self, seed: u64, repetition: u32) -> Realization {
        let mut rng = stream(seed, Purpose::Evaluation, repetition);
        match self {
            Campaign::Episodic(m) => m.realize(&mut rng),
            Campaign::SlowMoving(m) => m.realize(&mut rng),
        }
    }

    /// `n` training samples for each of `episodes` buckets.
    pub fn training_samples(
        &self,
        n: usize,
        episodes: usize,
        seed: u64,
        repetition: u32,
    ) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let mut rng = stream(seed, Purpose::Training, repetition);
        match self {
            Campaign::Episodic(m) => {
                if episodes != m.num_episodes() {
                    return Err(Error::InvalidConfig(format!(
                        "episodic model has {} episodes, plan asked for {episodes}",
                        m.num_episodes()
                    )));
                }
                Ok(m.training_samples(n, &mut rng))
            }
            Campaign::SlowMoving(m) => bucket_slow_moving(m, episodes, n, &mut rng),
        }
    }
}

/// Builds the campaign named by the config: a model file if given, else a
/// synthetic dataset.
pub fn load_campaign(config: &ExperimentConfig, dataset: &str) -> Result<Campaign> {
    if let Some(path) = &config.model_file {
        return load_model_file(path);
    }
    let ranges = match &config.meta_ranges {
        Some(p) => MetaRanges::load(p)?,
        None => MetaRanges::default(),
    };
    Ok(Campaign::Episodic(make_dataset(dataset.parse()?, config.seed, config.episodes, config.horizon, &ranges)?))
}

pub fn load_model_file(path: &Path) -> Result<Campaign> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read model {}: {e}", path.display())))?;
    Ok(match ModelDocument::from_json(&text)? {
        ModelDocument::Episodic { model, .. } => Campaign::Episodic(model),
        ModelDocument::SlowMoving { model, .. } => Campaign::SlowMoving(model),
    })
}

/// Mean over `seeds` realizations of the spend of unconstrained truthful bidding.
pub fn compute_buy_all_budget(campaign: &Campaign, seed: u64, seeds: usize) -> f64 {
    let total: f64 = (0..seeds)
        .map(|i| {
            let mut rng = stream(seed, Purpose::BuyAllBudget, i as u32);
            let r = match campaign {
                Campaign::Episodic(m) => m.realize(&mut rng),
                Campaign::SlowMoving(m) => m.realize(&mut rng),
            };
            r.values.iter().zip(&r.prices).filter(|(v, p)| v >= p).map(|(_, p)| p).sum::<f64>()
        })
        .sum();
    total / seeds.max(1) as f64
}

/// One algorithm's result within a paired run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub seed: u64,
    pub repetition: u32,
    pub horizon: usize,
    pub episodes: usize,
    pub n: usize,
    pub budget_frac: Option<f64>,
    pub budget: f64,
    pub algorithm: String,
    pub utility: f64,
    pub spend: f64,
    pub wins: usize,
    pub hindsight: f64,
    pub utility_ratio: f64,
    /// Set when the hindsight value is zero and the ratio is 1 by convention.
    pub ratio_flagged: bool,
    pub delta_used: f64,
    pub mu_hat: Option<f64>,
    pub realization_hash: String,
    pub error: Option<String>,
}

/// Everything a paired run needs beyond the config.
#[derive(Debug, Clone, Copy)]
pub struct RunSetting<'a> {
    pub label: &'a str,
    pub campaign: &'a Campaign,
    pub budget: f64,
    pub budget_frac: Option<f64>,
    pub repetition: u32,
    /// Episodes of the spend plan.
    pub plan_episodes: usize,
}

/// Trained plan for one run, with the margin that was applied.
pub fn train_plan(config: &ExperimentConfig, setting: &RunSetting<'_>) -> Result<SpendPlan> {
    let samples =
        setting.campaign.training_samples(config.n, setting.plan_episodes, config.seed, setting.repetition)?;
    let horizon = setting.campaign.horizon();
    let raw = approx_spend_rate(setting.budget, horizon, &samples, &config.estimation_settings())?;
    let delta = resolve_delta(config, &raw, &samples);
    match normalize_plan(&raw, delta) {
        // Nothing in the history is worth buying; pace evenly instead.
        Err(Error::AllZeroPlan) => {
            log::warn!("estimated plan is all zero for {}; using a uniform plan", setting.label);
            let uniform = SpendPlan { rho_hat: vec![0.0; raw.episodes()], ..raw };
            normalize_plan(&uniform, 1.0)
        }
        other => other,
    }
}

fn resolve_delta(config: &ExperimentConfig, plan: &SpendPlan, samples: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    match config.delta {
        DeltaMode::Value(v) => v,
        DeltaMode::Named(NamedDelta::Zero) => 0.0,
        DeltaMode::Named(NamedDelta::Theory) => {
            let episodes = plan.episodes();
            let fixed = plan.provenance.iter().all(|p| *p == crate::estimation::Provenance::Fp);
            let ctx = if fixed {
                let price = samples.iter().map(|(_, p)| p[0]).fold(0.0, f64::max);
                DeltaContext::Fp { episodes, price, n: config.n, confidence: config.delta_confidence }
            } else {
                DeltaContext::Sp { episodes, n: config.n, c: config.delta_c }
            };
            default_delta(&ctx)
        }
    }
}

/// Pacer for a normalized plan using the config's overrides or the defaults.
pub fn build_pacer(config: &ExperimentConfig, plan: &SpendPlan, value_bound: f64) -> Result<EpisodicPacer> {
    let tau = plan.rounds_per_episode();
    let mu_bar = config.mu_bar.unwrap_or_else(|| default_mu_bar(value_bound, &plan.rho_hat));
    let pacer = PacerConfig {
        budget: plan.budget,
        horizon: plan.horizon,
        plan: plan.rho_hat.clone(),
        eta: config.eta.unwrap_or_else(|| config.eta_scale * default_eta(tau)),
        mu_bar,
        mu_init: match config.mu_init {
            MuInit::Named(NamedMuInit::Plan) => plan.mu_hat.min(mu_bar),
            MuInit::Value(m) => m.min(mu_bar),
        },
    };
    EpisodicPacer::new(pacer)
}

fn build_baseline(
    algorithm: Algorithm,
    config: &ExperimentConfig,
    budget: f64,
    horizon: usize,
    value_bound: f64,
    mu_hat: Option<f64>,
) -> Result<Box<dyn Strategy>> {
    Ok(match algorithm {
        Algorithm::FixedSpendBg19 => {
            let rate = budget / horizon as f64;
            let mu_bar = config.mu_bar.unwrap_or_else(|| default_mu_bar(value_bound, &[rate]));
            let eta = config.eta.unwrap_or_else(|| default_eta(horizon));
            Box::new(fixed_rate_pacer(budget, horizon, eta, mu_bar)?)
        }
        Algorithm::Truthful => Box::new(truthful_strategy(budget)),
        Algorithm::FixedMultiplier => {
            let beta = config.beta.unwrap_or_else(|| 1.0 / (1.0 + mu_hat.unwrap_or(0.0)));
            Box::new(fixed_multiplier_strategy(beta, budget)?)
        }
        Algorithm::ChangingSpend => unreachable!("changing spend is built from a plan"),
    })
}

/// Result of a paired run, including optional per-round traces.
#[derive(Debug, Clone)]
pub struct PairedRun {
    pub records: Vec<RunRecord>,
    pub plan: Option<SpendPlan>,
    pub traces: Vec<(Algorithm, Vec<TraceRecord>)>,
}

/// Trains, realizes once, and runs every configured algorithm on the same
/// realization. Failures are recorded per algorithm, never dropped.
pub fn run_paired(config: &ExperimentConfig, setting: &RunSetting<'_>, record_traces: bool) -> PairedRun {
    let campaign = setting.campaign;
    let horizon = campaign.horizon();
    let value_bound = campaign.value_upper_bound();
    let realization = campaign.realize(config.seed, setting.repetition);
    let hash = realization.digest();
    let hindsight = hindsight_value(&realization, setting.budget).value;

    let wants_plan = config.algorithms.contains(&Algorithm::ChangingSpend)
        || (config.algorithms.contains(&Algorithm::FixedMultiplier) && config.beta.is_none());
    let plan = if wants_plan { Some(train_plan(config, setting)) } else { None };
    let plan_ok = plan.as_ref().and_then(|p| p.as_ref().ok());
    let mu_hat = plan_ok.map(|p| p.mu_hat);
    let delta_used = plan_ok.map(|p| p.delta_used).unwrap_or(0.0);

    let mut records = Vec::with_capacity(config.algorithms.len());
    let mut traces = Vec::new();
    for &algorithm in &config.algorithms {
        let tau = match algorithm {
            Algorithm::ChangingSpend => horizon / setting.plan_episodes.max(1),
            _ => horizon,
        };
        let outcome = (|| -> Result<_> {
            let mut strategy: Box<dyn Strategy> = match algorithm {
                Algorithm::ChangingSpend => match &plan {
                    Some(Ok(p)) => Box::new(build_pacer(config, p, value_bound)?),
                    Some(Err(e)) => return Err(Error::Config(format!("plan failed: {e}"))),
                    None => unreachable!("plan is trained whenever changing spend runs"),
                },
                other => build_baseline(other, config, setting.budget, horizon, value_bound, mu_hat)?,
            };
            run_strategy(strategy.as_mut(), &realization, tau, record_traces)
        })();
        let (utility, spend, wins, error) = match outcome {
            Ok(o) => {
                if let Some(t) = o.trace {
                    traces.push((algorithm, t));
                }
                (o.utility, o.spend, o.wins, None)
            }
            Err(e) => {
                log::error!("{} failed on {} repetition {}: {e}", algorithm, setting.label, setting.repetition);
                (0.0, 0.0, 0, Some(e.to_string()))
            }
        };
        let flagged = hindsight <= HINDSIGHT_EPS;
        records.push(RunRecord {
            dataset: setting.label.to_string(),
            seed: config.seed,
            repetition: setting.repetition,
            horizon,
            episodes: if algorithm == Algorithm::ChangingSpend { setting.plan_episodes } else { 1 },
            n: config.n,
            budget_frac: setting.budget_frac,
            budget: setting.budget,
            algorithm: algorithm.name().to_string(),
            utility,
            spend,
            wins,
            hindsight,
            utility_ratio: if flagged { 1.0 } else { utility / hindsight },
            ratio_flagged: flagged,
            delta_used: if algorithm == Algorithm::ChangingSpend { delta_used } else { 0.0 },
            mu_hat,
            realization_hash: hash.clone(),
            error,
        });
    }
    PairedRun { records, plan: plan.and_then(|p| p.ok()), traces }
}

/// Episodic pipeline: plan over the model's own episodes.
pub fn run_end_to_end(
    config: &ExperimentConfig,
    label: &str,
    model: &EpisodicModel,
    budget: f64,
    budget_frac: Option<f64>,
    repetition: u32,
) -> Vec<RunRecord> {
    let campaign = Campaign::Episodic(model.clone());
    let setting = RunSetting {
        label,
        campaign: &campaign,
        budget,
        budget_frac,
        repetition,
        plan_episodes: model.num_episodes(),
    };
    run_paired(config, &setting, false).records
}

/// Drifting campaign: plan over `e_bucket` buckets of consecutive rounds.
pub fn run_slow_moving(
    config: &ExperimentConfig,
    label: &str,
    model: &SlowMovingModel,
    e_bucket: usize,
    budget: f64,
    budget_frac: Option<f64>,
    repetition: u32,
) -> Vec<RunRecord> {
    let campaign = Campaign::SlowMoving(model.clone());
    let setting = RunSetting { label, campaign: &campaign, budget, budget_frac, repetition, plan_episodes: e_bucket };
    run_paired(config, &setting, false).records
}
