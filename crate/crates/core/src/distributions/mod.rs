//! Value and price distributions, campaign models, and the ground-truth
//! per-round spend function.

mod datasets;
mod model;
mod scenarios;
mod spec;

pub use datasets::{
    make_dataset, make_table1_dataset, Dataset, MetaRanges, Range, DEFAULT_EPISODES, DEFAULT_HORIZON,
};
pub use model::{Episode, EpisodicModel, ModelDocument, SlowMovingModel, MODEL_FORMAT_VERSION};
pub use scenarios::{
    make_example1_instance, make_lemma2_instance, make_slow_moving_interpolation, Lemma2Instance, Scenario,
    DRIFT_GRID_POINTS,
};
pub use spec::{normal_density, DistributionSpec, UPPER_TAIL};

use crate::error::Result;
use crate::quadrature::{integrate_piecewise, QuadratureConfig};

/// Expected per-round expenditure of a bidder that bids `v / (1 + mu)` with
/// no budget cap: `E[p * 1{v >= (1 + mu) p}]`.
///
/// Atomic prices use the closed form `sum_i w_i p_i P(v >= (1 + mu) p_i)`.
/// Continuous prices are integrated over `[lower, min(price upper, h / (1 + mu))]`
/// with breakpoints at every kink of either distribution.
pub fn true_spend_function(
    value: &DistributionSpec,
    price: &DistributionSpec,
    mu: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    let scale = 1.0 + mu.max(0.0);
    if let Some(atoms) = price.atoms() {
        return Ok(atoms.iter().map(|(p, w)| w * p * value.survival_ge(scale * p)).sum());
    }
    let lo = price.lower_bound();
    let hi = price.upper_bound().min(value.upper_bound() / scale);
    if hi <= lo {
        return Ok(0.0);
    }
    let mut breaks: Vec<f64> = value.kinks().into_iter().map(|k| k / scale).collect();
    breaks.extend(price.kinks());
    integrate_piecewise(
        |p| {
            let density = price.pdf(p).unwrap_or(0.0);
            p * value.survival_ge(scale * p) * density
        },
        lo,
        hi,
        &breaks,
        quad,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn uniform_value_atom_price_closed_form() {
        let v = DistributionSpec::uniform(0.0, 2.0).unwrap();
        let p = DistributionSpec::atom(1.0).unwrap();
        assert!((true_spend_function(&v, &p, 0.5, &q()).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn atom_threshold() {
        let v = DistributionSpec::atom(2.0).unwrap();
        let p = DistributionSpec::atom(1.0).unwrap();
        assert_eq!(true_spend_function(&v, &p, 0.9, &q()).unwrap(), 1.0);
        assert_eq!(true_spend_function(&v, &p, 1.1, &q()).unwrap(), 0.0);
        // Ties win.
        assert_eq!(true_spend_function(&v, &p, 1.0, &q()).unwrap(), 1.0);
    }

    #[test]
    fn huge_shading_spends_nothing() {
        let pairs = [
            (DistributionSpec::uniform(0.0, 2.0).unwrap(), DistributionSpec::normal(1.0, 0.3).unwrap()),
            (DistributionSpec::lognormal(0.0, 0.5).unwrap(), DistributionSpec::lognormal(-0.5, 0.4).unwrap()),
            (
                DistributionSpec::normal(1.0, 0.3).unwrap(),
                DistributionSpec::max_of_lognormals(3, vec![(-1.0, 0.5)]).unwrap(),
            ),
        ];
        for (v, p) in &pairs {
            assert!(true_spend_function(v, p, 1e6, &q()).unwrap() <= 1e-6);
        }
    }

    #[test]
    fn continuous_price_matches_monte_carlo() {
        let v = DistributionSpec::uniform(0.0, 2.0).unwrap();
        let p = DistributionSpec::normal(1.0, 0.2).unwrap();
        let mu = 0.3;
        let g = true_spend_function(&v, &p, mu, &q()).unwrap();
        let mut rng = stream(5, Purpose::Generic, 0);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let vv = v.sample(&mut rng);
            let pp = p.sample(&mut rng);
            let x = if vv >= (1.0 + mu) * pp { pp } else { 0.0 };
            sum += x;
            sq += x * x;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((g - mean).abs() <= 3.0 * se, "g={g} mc={mean} se={se}");
    }
}
