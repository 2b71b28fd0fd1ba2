//! Hand-built scenarios: the two-instance history counterexample, the
//! fixed-multiplier counterexample, and linearly drifting campaigns.

use super::model::{Episode, EpisodicModel, SlowMovingModel};
use super::spec::DistributionSpec;
use crate::error::{Error, Result};

/// Grid size used to measure per-round drift of slow-moving models.
pub const DRIFT_GRID_POINTS: usize = 4096;

/// A model together with the budget it is meant to be run with.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: EpisodicModel,
    pub budget: f64,
}

/// Two campaigns that agree on the first episode and differ on the second.
///
/// Prices are always 1. Episode 1 values are 2 in both; episode 2 values are
/// 1 in the first instance and 3 in the second. The budget buys exactly half
/// of the rounds.
pub fn make_example1_instance(horizon: usize) -> Result<(Scenario, Scenario)> {
    if horizon == 0 || horizon % 2 != 0 {
        return Err(Error::IndivisibleHorizon { rounds: horizon, episodes: 2 });
    }
    let price = DistributionSpec::atom(1.0)?;
    let build = |second_value: f64| -> Result<Scenario> {
        let model = EpisodicModel::with_horizon(
            horizon,
            vec![
                Episode::new(DistributionSpec::atom(2.0)?, price.clone()),
                Episode::new(DistributionSpec::atom(second_value)?, price.clone()),
            ],
        )?;
        Ok(Scenario { model, budget: horizon as f64 / 2.0 })
    };
    Ok((build(1.0)?, build(3.0)?))
}

/// Parameters and derived quantities of the fixed-multiplier counterexample.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma2Instance {
    pub scenario: Scenario,
    pub tau: usize,
    pub p_high: f64,
    pub p_low: f64,
    pub v_low: f64,
    pub v_high: f64,
    /// Ex-ante optimal pacing multiplier `p_high / (p_high + v_low)`.
    pub beta_star: f64,
}

impl Lemma2Instance {
    /// Utility gap that the fixed multiplier suffers when two or more valuable
    /// rounds show up in the first episode.
    pub fn regret_threshold(&self) -> f64 {
        self.tau as f64 * self.v_high - 2.0 * self.v_low
    }
}

/// Two episodes of `tau` rounds each. Episode 1: price `p_high`, value
/// `p_high + v_low` with probability `1/tau` and 0 otherwise. Episode 2: price
/// `p_low = p_high / tau`, value `p_low + v_high`. Budget `2 p_high`.
pub fn make_lemma2_instance(tau: usize, p_high: f64, v_low: f64, v_high: f64) -> Result<Lemma2Instance> {
    if tau < 3 {
        return Err(Error::InvalidModel(format!("lemma-2 instance needs tau >= 3, got {tau}")));
    }
    if !(v_high > v_low && v_low > 0.0 && p_high > 0.0) {
        return Err(Error::InvalidModel("lemma-2 instance needs v_high > v_low > 0 and p_high > 0".into()));
    }
    let t = tau as f64;
    let p_low = p_high / t;
    let first_value =
        DistributionSpec::discrete(vec![0.0, p_high + v_low], vec![(t - 1.0) / t, 1.0 - (t - 1.0) / t])?;
    let model = EpisodicModel::new(
        tau,
        vec![
            Episode::new(first_value, DistributionSpec::atom(p_high)?),
            Episode::new(DistributionSpec::atom(p_low + v_high)?, DistributionSpec::atom(p_low)?),
        ],
    )?;
    Ok(Lemma2Instance {
        scenario: Scenario { model, budget: 2.0 * p_high },
        tau,
        p_high,
        p_low,
        v_low,
        v_high,
        beta_star: p_high / (p_high + v_low),
    })
}

/// Campaign whose distribution parameters move linearly from `start` (round 1)
/// to `end` (round `horizon`).
///
/// The declared drift bounds are the largest per-round sup-norm changes of
/// the value cdf and price density, measured on a dense grid over the union
/// of supports. They are metadata only.
pub fn make_slow_moving_interpolation(start: &Episode, end: &Episode, horizon: usize) -> Result<SlowMovingModel> {
    if horizon == 0 {
        return Err(Error::InvalidModel("horizon must be positive".into()));
    }
    if start.value.family() != end.value.family() || start.price.family() != end.price.family() {
        return Err(Error::MixedFamilies);
    }
    let mut rounds = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let lambda = if horizon == 1 { 0.0 } else { t as f64 / (horizon - 1) as f64 };
        rounds.push(Episode::new(
            start.value.interpolate(&end.value, lambda)?,
            start.price.interpolate(&end.price, lambda)?,
        ));
    }
    let values: Vec<&DistributionSpec> = rounds.iter().map(|r| &r.value).collect();
    let prices: Vec<&DistributionSpec> = rounds.iter().map(|r| &r.price).collect();
    let declared_zeta = max_step_change(&values, |d, x| d.cdf(x));
    let declared_theta = if prices.iter().any(|p| p.is_atomic()) {
        if prices.windows(2).all(|w| w[0] == w[1]) {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        max_step_change(&prices, |d, x| d.pdf(x).unwrap_or(0.0))
    };
    Ok(SlowMovingModel { rounds, declared_zeta, declared_theta })
}

fn max_step_change(dists: &[&DistributionSpec], eval: impl Fn(&DistributionSpec, f64) -> f64) -> f64 {
    if dists.len() < 2 {
        return 0.0;
    }
    let lo = dists.iter().map(|d| d.lower_bound()).fold(f64::INFINITY, f64::min).min(0.0);
    let hi = dists.iter().map(|d| d.upper_bound()).fold(0.0, f64::max);
    let grid = dense_grid(lo, hi, DRIFT_GRID_POINTS);
    let mut prev: Vec<f64> = grid.iter().map(|x| eval(dists[0], *x)).collect();
    let mut worst = 0.0f64;
    for d in &dists[1..] {
        let cur: Vec<f64> = grid.iter().map(|x| eval(d, *x)).collect();
        let step = prev.iter().zip(&cur).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(step);
        prev = cur;
    }
    worst
}

pub(crate) fn dense_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 || hi <= lo {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points).map(|i| lo + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_values() {
        let (i, ip) = make_example1_instance(100).unwrap();
        assert_eq!(i.model.episodes[0].value, DistributionSpec::Atom { value: 2.0 });
        assert_eq!(i.model.episodes[1].value, DistributionSpec::Atom { value: 1.0 });
        assert_eq!(ip.model.episodes[0].value, DistributionSpec::Atom { value: 2.0 });
        assert_eq!(ip.model.episodes[1].value, DistributionSpec::Atom { value: 3.0 });
        assert_eq!(i.budget, 50.0);
        assert_eq!(i.model.rounds_per_episode, 50);
        assert!(make_example1_instance(101).is_err());
    }

    #[test]
    fn lemma2_construction() {
        let inst = make_lemma2_instance(5, 10.0, 1.0, 2.0).unwrap();
        let m = &inst.scenario.model;
        assert_eq!(m.rounds_per_episode, 5);
        assert_eq!(inst.scenario.budget, 20.0);
        assert_eq!(inst.p_low, 2.0);
        assert_eq!(m.episodes[0].price, DistributionSpec::Atom { value: 10.0 });
        assert_eq!(m.episodes[1].price, DistributionSpec::Atom { value: 2.0 });
        assert_eq!(m.episodes[1].value, DistributionSpec::Atom { value: 4.0 });
        match &m.episodes[0].value {
            DistributionSpec::DiscreteAtoms { points, weights } => {
                assert_eq!(points, &vec![0.0, 11.0]);
                assert!((weights[0] - 0.8).abs() < 1e-15);
                assert!((weights[1] - 0.2).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!((inst.beta_star - 10.0 / 11.0).abs() < 1e-15);
        assert_eq!(inst.regret_threshold(), 8.0);
        assert!(make_lemma2_instance(2, 10.0, 1.0, 2.0).is_err());
        assert!(make_lemma2_instance(5, 10.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn stationary_interpolation_has_no_drift() {
        let ep = Episode::new(DistributionSpec::uniform(0.0, 2.0).unwrap(), DistributionSpec::normal(1.0, 0.2).unwrap());
        let m = make_slow_moving_interpolation(&ep, &ep, 50).unwrap();
        assert_eq!(m.declared_zeta, 0.0);
        assert_eq!(m.declared_theta, 0.0);
        let single = make_slow_moving_interpolation(&ep, &ep, 1).unwrap();
        assert_eq!(single.horizon(), 1);
        assert_eq!(single.declared_zeta, 0.0);
    }

    #[test]
    fn mixed_families_rejected() {
        let a = Episode::new(DistributionSpec::uniform(0.0, 2.0).unwrap(), DistributionSpec::atom(1.0).unwrap());
        let b = Episode::new(DistributionSpec::lognormal(0.0, 1.0).unwrap(), DistributionSpec::atom(1.0).unwrap());
        assert!(matches!(make_slow_moving_interpolation(&a, &b, 10), Err(Error::MixedFamilies)));
    }

    #[test]
    fn uniform_drift_matches_grid_oracle() {
        // Uniform{0, 2} -> Uniform{0, 2 + c}: consecutive hi differ by
        // c / (T - 1). The sup of |F_{t+1} - F_t| sits at x = hi_t and equals
        // 1 - hi_t / hi_{t+1}, largest for the first step.
        let c = 1.0;
        let t = 11;
        let a = Episode::new(DistributionSpec::uniform(0.0, 2.0).unwrap(), DistributionSpec::atom(1.0).unwrap());
        let b = Episode::new(DistributionSpec::uniform(0.0, 2.0 + c).unwrap(), DistributionSpec::atom(1.0).unwrap());
        let m = make_slow_moving_interpolation(&a, &b, t).unwrap();
        let h1 = 2.0 + c / (t - 1) as f64;
        let exact = 1.0 - 2.0 / h1;
        let grid_step = 3.0 / (DRIFT_GRID_POINTS - 1) as f64;
        assert!(m.declared_zeta <= exact + 1e-12);
        assert!(m.declared_zeta >= exact - grid_step / 2.0, "{} vs {exact}", m.declared_zeta);
        assert_eq!(m.declared_theta, 0.0);
    }
}
