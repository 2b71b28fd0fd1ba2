//! Ground truth: the hindsight fractional optimum, the ex-post dual, the true
//! optimal spend rates, and the driver that plays a strategy against a
//! realized sequence of second-price auctions.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{true_spend_function, EpisodicModel};
use crate::error::{Error, Result};
use crate::pacing::Strategy;
use crate::quadrature::QuadratureConfig;

/// Realized values and prices of a campaign, one entry per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub values: Vec<f64>,
    pub prices: Vec<f64>,
}

impl Realization {
    pub fn new(values: Vec<f64>, prices: Vec<f64>) -> Result<Self> {
        if values.len() != prices.len() {
            return Err(Error::LengthMismatch(values.len(), prices.len()));
        }
        Ok(Self { values, prices })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Hex SHA-256 over the little-endian bytes of every value and price.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (v, p) in self.values.iter().zip(&self.prices) {
            h.update(v.to_le_bytes());
            h.update(p.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// One round as seen by the auction driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub e: usize,
    pub v: f64,
    pub p: f64,
    pub b: f64,
    pub z: f64,
    /// Shading after the round's update, if the strategy has one.
    pub mu: Option<f64>,
    /// Remaining campaign budget after the round.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub utility: f64,
    pub spend: f64,
    pub wins: usize,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Writes `t,e,v,p,b,z,mu,budget` rows.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Plays `strategy` on every round of `realization`.
///
/// The bidder wins iff `b >= p` and then pays `p`. `rounds_per_episode` labels trace
/// rows and is only used when `record_trace` is set.
pub fn run_strategy(
    strategy: &mut dyn Strategy,
    realization: &Realization,
    rounds_per_episode: usize,
    record_trace: bool,
) -> Result<Outcome> {
    let mut utility = 0.0;
    let mut spend = 0.0;
    let mut wins = 0;
    let mut trace = record_trace.then(|| Vec::with_capacity(realization.len()));
    let tau = rounds_per_episode.max(1);
    for (i, (&v, &p)) in realization.values.iter().zip(&realization.prices).enumerate() {
        let b = strategy.bid(v)?;
        let z = if b >= p { p } else { 0.0 };
        if b >= p {
            wins += 1;
            utility += v - p;
            spend += p;
        }
        strategy.observe(z)?;
        if let Some(tr) = trace.as_mut() {
            tr.push(TraceRecord {
                t: i + 1,
                e: i / tau + 1,
                v,
                p,
                b,
                z,
                mu: strategy.shading(),
                budget: strategy.remaining_budget(),
            });
        }
    }
    Ok(Outcome { utility, spend, wins, trace })
}

/// Optimal fractional allocation in hindsight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hindsight {
    pub value: f64,
    pub allocation: Vec<f64>,
}

/// `max sum (v - p) x` subject to `sum p x <= B`, `x in [0, 1]`.
///
/// Rounds with positive utility are taken greedily by decreasing `(v - p) / p`,
/// ties by round index; the last affordable item is taken fractionally.
pub fn hindsight_value(realization: &Realization, budget: f64) -> Hindsight {
    let n = realization.len();
    let mut allocation = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).filter(|&i| realization.values[i] > realization.prices[i]).collect();
    let ratio = |i: usize| {
        let p = realization.prices[i];
        if p <= 0.0 {
            f64::INFINITY
        } else {
            (realization.values[i] - p) / p
        }
    };
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));
    let mut left = budget.max(0.0);
    let mut value = 0.0;
    for i in order {
        let (v, p) = (realization.values[i], realization.prices[i]);
        let x = if p <= left { 1.0 } else if p > 0.0 { left / p } else { 1.0 };
        if x <= 0.0 {
            break;
        }
        allocation[i] = x;
        value += x * (v - p);
        left = (left - x * p).max(0.0);
    }
    Hindsight { value, allocation }
}

/// `alpha * mean(H) - mean(sigma)` over paired runs.
pub fn alpha_regret(strategy_utilities: &[f64], hindsight_values: &[f64], alpha: f64) -> Result<f64> {
    if strategy_utilities.is_empty() || hindsight_values.is_empty() {
        return Err(Error::EmptyLists);
    }
    if strategy_utilities.len() != hindsight_values.len() {
        return Err(Error::LengthMismatch(strategy_utilities.len(), hindsight_values.len()));
    }
    let n = strategy_utilities.len() as f64;
    Ok(alpha * hindsight_values.iter().sum::<f64>() / n - strategy_utilities.iter().sum::<f64>() / n)
}

/// Minimizer of the ex-post Lagrangian dual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    /// Midpoint of the minimizing interval.
    pub mu_star: f64,
    pub dual_value: f64,
    /// The full set of minimizers; the upper end is infinite when `B = 0`.
    pub interval: (f64, f64),
}

/// Minimizes `psi(mu) = sum [v - (1 + mu) p]^+ + mu B` over `mu >= 0`.
///
/// `psi` is convex and piecewise linear with kinks at `v / p - 1`, so it is
/// evaluated at `0` and every nonnegative kink.
pub fn expost_dual_mu(realization: &Realization, budget: f64) -> DualSolution {
    // Kinks with their (v, p), sorted ascending.
    let mut items: Vec<(f64, f64, f64)> = realization
        .values
        .iter()
        .zip(&realization.prices)
        .filter(|(v, p)| **p > 0.0 && **v > **p)
        .map(|(v, p)| (v / p - 1.0, *v, *p))
        .collect();
    items.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut candidates = vec![0.0];
    candidates.extend(items.iter().map(|it| it.0));
    candidates.dedup();

    // Suffix sums of v and p over items whose kink lies strictly above mu.
    let mut suffix_v = vec![0.0; items.len() + 1];
    let mut suffix_p = vec![0.0; items.len() + 1];
    for k in (0..items.len()).rev() {
        suffix_v[k] = suffix_v[k + 1] + items[k].1;
        suffix_p[k] = suffix_p[k + 1] + items[k].2;
    }
    let psi: Vec<f64> = candidates
        .iter()
        .map(|&mu| {
            let k = items.partition_point(|it| it.0 <= mu);
            suffix_v[k] - (1.0 + mu) * suffix_p[k] + mu * budget
        })
        .collect();
    let best = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = 1.0 + best.abs() + suffix_v[0];
    let tie = 1e-12 * scale;
    let lo_idx = psi.iter().position(|x| *x <= best + tie).unwrap();
    let hi_idx = psi.iter().rposition(|x| *x <= best + tie).unwrap();
    let lo = candidates[lo_idx];
    let hi = if hi_idx + 1 == candidates.len() && budget <= 0.0 { f64::INFINITY } else { candidates[hi_idx] };
    let mu_star = if hi.is_finite() { 0.5 * (lo + hi) } else { lo };
    DualSolution { mu_star, dual_value: best, interval: (lo, hi) }
}

/// Shading and per-episode spend rates that exhaust the budget in expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSpendRates {
    pub mu_star: f64,
    pub rho: Vec<f64>,
}

const TRUE_MU_TOL: f64 = 1e-8;
const TRUE_MU_LIMIT: f64 = 1e8;

/// Solves `(1/E) sum_e G_e(mu) = B / T` by bisection on the true spend
/// functions; `mu = 0` when the budget is slack.
pub fn true_optimal_spend_rates(model: &EpisodicModel, budget: f64, quad: &QuadratureConfig) -> Result<TrueSpendRates> {
    model.validate()?;
    let target = budget / model.horizon() as f64;
    let per_episode = |mu: f64| -> Result<Vec<f64>> {
        model.episodes.iter().map(|ep| true_spend_function(&ep.value, &ep.price, mu, quad)).collect()
    };
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let at_zero = per_episode(0.0)?;
    if mean(&at_zero) <= target {
        return Ok(TrueSpendRates { mu_star: 0.0, rho: at_zero });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while mean(&per_episode(hi)?) > target {
        lo = hi;
        hi *= 2.0;
        if hi > TRUE_MU_LIMIT {
            return Err(Error::BisectionBracketFailure { target, mu_max: hi, value: mean(&per_episode(hi)?) });
        }
    }
    while hi - lo > TRUE_MU_TOL {
        let mid = 0.5 * (lo + hi);
        if mean(&per_episode(mid)?) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(TrueSpendRates { mu_star: hi, rho: per_episode(hi)? })
}
