//! Spend plans: approximate optimal per-episode spend rates from historical
//! samples, normalization into budget-exact plans, and episode bucketing of
//! slowly drifting campaigns.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::SlowMovingModel;
use crate::error::{Error, Result};
use crate::estimation::{
    approx_spend_fp, approx_spend_sp, AveragedSpend, BandwidthRule, Kernel, Provenance, SpIntegration, SpendCurve,
    SpendFunctionEstimate,
};

pub const PLAN_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MU_TOL: f64 = 1e-8;

/// Per-episode spend rates together with the shading that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpendPlan {
    pub version: u32,
    /// Per-round target spend of each episode.
    pub rho_hat: Vec<f64>,
    pub mu_hat: f64,
    pub budget: f64,
    pub horizon: usize,
    pub normalized: bool,
    pub delta_used: f64,
    pub provenance: Vec<Provenance>,
    /// Set when no shading on the grid met the target and `mu_hat` was clamped.
    pub bracket_failed: bool,
}

impl SpendPlan {
    pub fn episodes(&self) -> usize {
        self.rho_hat.len()
    }

    pub fn rounds_per_episode(&self) -> usize {
        self.horizon / self.rho_hat.len().max(1)
    }

    /// `tau * sum rho`.
    pub fn planned_spend(&self) -> f64 {
        self.rounds_per_episode() as f64 * self.rho_hat.iter().sum::<f64>()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: SpendPlan = serde_json::from_str(text)?;
        if plan.version != PLAN_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported plan version {}", plan.version)));
        }
        Ok(plan)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Which estimator handles each episode's samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FpMode {
    /// Fixed-price estimator when every price sample is identical.
    #[default]
    Auto,
    /// Fixed-price estimator everywhere; price samples must be degenerate.
    Always,
    /// Kernel estimator everywhere.
    Never,
}

impl std::str::FromStr for FpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(FpMode::Auto),
            "always" => Ok(FpMode::Always),
            "never" => Ok(FpMode::Never),
            other => Err(Error::Config(format!("fp mode must be `auto`, `always` or `never`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationSettings {
    pub kernel: Kernel,
    pub bandwidth: BandwidthRule,
    pub fp_mode: FpMode,
    pub integration: SpIntegration,
    pub mu_tol: f64,
}

impl Default for EstimationSettings {
    fn default() -> Self {
        Self {
            kernel: Kernel::Gaussian,
            bandwidth: BandwidthRule::Scaled,
            fp_mode: FpMode::Auto,
            integration: SpIntegration::Binned,
            mu_tol: DEFAULT_MU_TOL,
        }
    }
}

/// Builds one spend-function estimate from an episode's samples.
pub fn estimate_episode(values: &[f64], prices: &[f64], settings: &EstimationSettings) -> Result<SpendFunctionEstimate> {
    if prices.is_empty() || values.is_empty() {
        return Err(Error::EmptySample);
    }
    let degenerate = prices.iter().all(|p| *p == prices[0]);
    match (settings.fp_mode, degenerate) {
        (FpMode::Auto, true) | (FpMode::Always, true) => approx_spend_fp(values, prices[0]),
        (FpMode::Always, false) => {
            Err(Error::InvalidConfig("fixed-price estimation requested but price samples vary".into()))
        }
        _ => {
            let s = settings.bandwidth.bandwidth(prices)?;
            approx_spend_sp(values, prices, settings.kernel, s, &settings.integration)
        }
    }
}

/// Estimates every episode in parallel.
pub fn estimate_episodes(
    samples: &[(Vec<f64>, Vec<f64>)],
    settings: &EstimationSettings,
) -> Result<Vec<SpendFunctionEstimate>> {
    samples.par_iter().map(|(v, p)| estimate_episode(v, p, settings)).collect()
}

/// Smallest `mu` with `curve(mu) <= target`, to absolute tolerance `tol`.
///
/// Returns exactly 0 when the target is met without shading. Bisection keeps
/// the feasible endpoint, so the result always satisfies the target.
pub fn solve_mu_hat<C: SpendCurve + ?Sized>(curve: &C, target: f64, tol: f64) -> Result<f64> {
    if curve.eval(0.0) <= target {
        return Ok(0.0);
    }
    let mu_max = curve.mu_max();
    let at_max = curve.eval(mu_max);
    if at_max > target {
        return Err(Error::BisectionBracketFailure { target, mu_max, value: at_max });
    }
    let (mut lo, mut hi) = (0.0, mu_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if curve.eval(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Unnormalized plan from per-episode estimates: solve the averaged curve for
/// `B / T` and read each episode's rate at the solution.
pub fn plan_from_estimates(
    budget: f64,
    horizon: usize,
    estimates: &[SpendFunctionEstimate],
    mu_tol: f64,
) -> Result<SpendPlan> {
    if !(budget > 0.0) {
        return Err(Error::InvalidConfig(format!("budget must be positive, got {budget}")));
    }
    if estimates.is_empty() || horizon == 0 || horizon % estimates.len() != 0 {
        return Err(Error::IndivisibleHorizon { rounds: horizon, episodes: estimates.len() });
    }
    let average = AveragedSpend::new(estimates)?;
    let target = budget / horizon as f64;
    let (mu_hat, bracket_failed) = match solve_mu_hat(&average, target, mu_tol) {
        Ok(mu) => (mu, false),
        Err(Error::BisectionBracketFailure { mu_max, value, .. }) => {
            log::warn!("averaged spend {value} at mu_max = {mu_max} stays above target {target}; clamping");
            (mu_max, true)
        }
        Err(e) => return Err(e),
    };
    Ok(SpendPlan {
        version: PLAN_FORMAT_VERSION,
        rho_hat: estimates.iter().map(|g| g.eval(mu_hat)).collect(),
        mu_hat,
        budget,
        horizon,
        normalized: false,
        delta_used: 0.0,
        provenance: estimates.iter().map(|g| g.provenance()).collect(),
        bracket_failed,
    })
}

/// Approximate optimal spend rates from per-episode `(values, prices)` samples.
pub fn approx_spend_rate(
    budget: f64,
    horizon: usize,
    episode_samples: &[(Vec<f64>, Vec<f64>)],
    settings: &EstimationSettings,
) -> Result<SpendPlan> {
    if episode_samples.is_empty() || horizon == 0 || horizon % episode_samples.len() != 0 {
        return Err(Error::IndivisibleHorizon { rounds: horizon, episodes: episode_samples.len() });
    }
    let estimates = estimate_episodes(episode_samples, settings)?;
    plan_from_estimates(budget, horizon, &estimates, settings.mu_tol)
}

/// `rho'_e = (rho_e + delta) B / (tau sum (rho + delta))`, so the plan spends
/// exactly `B`. Rounding residue is absorbed by the last entry.
pub fn normalize_plan(plan: &SpendPlan, delta: f64) -> Result<SpendPlan> {
    if plan.normalized {
        return Err(Error::InvalidConfig("plan is already normalized".into()));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("delta must be finite and nonnegative, got {delta}")));
    }
    let tau = plan.rounds_per_episode() as f64;
    let shifted: Vec<f64> = plan.rho_hat.iter().map(|r| r + delta).collect();
    let denom = tau * shifted.iter().sum::<f64>();
    if !(denom > 0.0) {
        return Err(Error::AllZeroPlan);
    }
    let mut rho: Vec<f64> = shifted.iter().map(|r| r * plan.budget / denom).collect();
    let last = rho.len() - 1;
    let head: f64 = rho[..last].iter().sum();
    rho[last] = (plan.budget / tau - head).max(0.0);
    Ok(SpendPlan { rho_hat: rho, normalized: true, delta_used: delta, ..plan.clone() })
}

/// Inputs to the default accuracy margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum DeltaContext {
    /// `(E + 1) p sqrt(ln(2E / delta) / (2n))`.
    Fp { episodes: usize, price: f64, n: usize, confidence: f64 },
    /// `c (E + 1) n^(-1/3)`.
    Sp { episodes: usize, n: usize, c: f64 },
}

pub fn default_delta(ctx: &DeltaContext) -> f64 {
    match *ctx {
        DeltaContext::Fp { episodes, price, n, confidence } => {
            let e = episodes as f64;
            (e + 1.0) * price * ((2.0 * e / confidence).ln() / (2.0 * n.max(1) as f64)).sqrt()
        }
        DeltaContext::Sp { episodes, n, c } => c * (episodes as f64 + 1.0) * (n.max(1) as f64).powf(-1.0 / 3.0),
    }
}

/// Draws `n` samples per episode from the mixture of that episode's rounds:
/// each sample picks a round uniformly among the episode's `tau` rounds and
/// draws value and price from it.
pub fn bucket_slow_moving<R: Rng + ?Sized>(
    model: &SlowMovingModel,
    episodes: usize,
    n_per_episode: usize,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let t = model.horizon();
    if episodes == 0 || t == 0 || t % episodes != 0 {
        return Err(Error::IndivisibleHorizon { rounds: t, episodes });
    }
    let tau = t / episodes;
    Ok((0..episodes)
        .map(|e| {
            let mut values = Vec::with_capacity(n_per_episode);
            let mut prices = Vec::with_capacity(n_per_episode);
            for _ in 0..n_per_episode {
                let round = &model.rounds[e * tau + rng.gen_range(0..tau)];
                let (v, p) = round.draw(rng);
                values.push(v);
                prices.push(p);
            }
            (values, prices)
        })
        .collect())
}
