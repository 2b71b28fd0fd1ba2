use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf;

use crate::error::{Error, Result};

/// Probability mass left above the reported upper support bound of an
/// unbounded family.
pub const UPPER_TAIL: f64 = 1e-9;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// A value or price distribution.
///
/// `Normal` is truncated to the nonnegative half-line and renormalized.
/// `MaxOfLogNormals` is the distribution of the largest of `k` independent
/// lognormal draws; `params` holds either one shared `(mu, sigma)` pair or
/// exactly `k` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, stddev: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Atom { value: f64 },
    MaxOfLogNormals { k: usize, params: Vec<(f64, f64)> },
    DiscreteAtoms { points: Vec<f64>, weights: Vec<f64> },
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / SQRT_2PI
}

fn std_normal_quantile(q: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * q)
}

/// Density of an untruncated normal distribution.
pub fn normal_density(x: f64, mean: f64, stddev: f64) -> f64 {
    std_normal_pdf((x - mean) / stddev) / stddev
}

fn lognormal_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        std_normal_cdf((x.ln() - mu) / sigma)
    }
}

fn lognormal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        std_normal_pdf((x.ln() - mu) / sigma) / (x * sigma)
    }
}

impl DistributionSpec {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::Uniform { lo, hi }.validated()
    }

    pub fn normal(mean: f64, stddev: f64) -> Result<Self> {
        Self::Normal { mean, stddev }.validated()
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        Self::LogNormal { mu, sigma }.validated()
    }

    pub fn atom(value: f64) -> Result<Self> {
        Self::Atom { value }.validated()
    }

    pub fn max_of_lognormals(k: usize, params: Vec<(f64, f64)>) -> Result<Self> {
        Self::MaxOfLogNormals { k, params }.validated()
    }

    pub fn discrete(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::DiscreteAtoms { points, weights }.validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    /// Checks parameter constraints. Called by every constructor and by
    /// model loaders, so sampling and evaluation never see an invalid spec.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Self::Uniform { lo, hi } => {
                if !finite(&[*lo, *hi]) || *lo < 0.0 || lo > hi {
                    return bad(format!("uniform needs 0 <= lo <= hi, got [{lo}, {hi}]"));
                }
            }
            Self::Normal { mean, stddev } => {
                if !finite(&[*mean, *stddev]) || *stddev <= 0.0 {
                    return bad(format!("normal needs stddev > 0, got {stddev}"));
                }
                if std_normal_cdf(mean / stddev) < 1e-12 {
                    return bad(format!("normal({mean}, {stddev}) has no mass on [0, inf)"));
                }
            }
            Self::LogNormal { mu, sigma } => {
                if !finite(&[*mu, *sigma]) || *sigma <= 0.0 {
                    return bad(format!("lognormal needs sigma > 0, got {sigma}"));
                }
            }
            Self::Atom { value } => {
                if !value.is_finite() || *value < 0.0 {
                    return bad(format!("atom must be a nonnegative real, got {value}"));
                }
            }
            Self::MaxOfLogNormals { k, params } => {
                if *k == 0 {
                    return bad("max-of-lognormals needs k >= 1".into());
                }
                if params.len() != 1 && params.len() != *k {
                    return bad(format!("max-of-lognormals needs 1 or {k} parameter pairs, got {}", params.len()));
                }
                if params.iter().any(|(m, s)| !m.is_finite() || !s.is_finite() || *s <= 0.0) {
                    return bad("max-of-lognormals needs finite mu and sigma > 0".into());
                }
            }
            Self::DiscreteAtoms { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return bad("discrete atoms need equally many points and weights".into());
                }
                if !finite(points) || points.iter().any(|p| *p < 0.0) {
                    return bad("discrete atoms must be nonnegative reals".into());
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("discrete weights must be nonnegative".into());
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return bad(format!("discrete weights sum to {total}, not 1"));
                }
            }
        }
        Ok(())
    }

    /// Name of the parametric family, used to check interpolation endpoints.
    pub fn family(&self) -> &'static str {
        match self {
            Self::Uniform { .. } => "uniform",
            Self::Normal { .. } => "normal",
            Self::LogNormal { .. } => "lognormal",
            Self::Atom { .. } => "atom",
            Self::MaxOfLogNormals { .. } => "max_of_lognormals",
            Self::DiscreteAtoms { .. } => "discrete_atoms",
        }
    }

    /// True for distributions without a density (point masses).
    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Atom { .. } | Self::DiscreteAtoms { .. })
            || matches!(self, Self::Uniform { lo, hi } if lo == hi)
    }

    fn lognormal_params(&self, i: usize) -> (f64, f64) {
        match self {
            Self::MaxOfLogNormals { params, .. } => {
                if params.len() == 1 {
                    params[0]
                } else {
                    params[i]
                }
            }
            _ => unreachable!(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Self::Normal { mean, stddev } => {
                // Inverse-cdf draw restricted to the nonnegative part.
                let floor = std_normal_cdf(-mean / stddev);
                let u = floor + (1.0 - floor) * rng.gen::<f64>();
                (mean + stddev * std_normal_quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))).max(0.0)
            }
            Self::LogNormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Self::Atom { value } => *value,
            Self::MaxOfLogNormals { k, .. } => (0..*k)
                .map(|i| {
                    let (mu, sigma) = self.lognormal_params(i);
                    let z: f64 = StandardNormal.sample(rng);
                    (mu + sigma * z).exp()
                })
                .fold(0.0, f64::max),
            Self::DiscreteAtoms { points, weights } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *p;
                    }
                }
                *points.last().unwrap()
            }
        }
    }

    /// `P(X <= x)`; right-continuous at atoms.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform { lo, hi } => {
                if x < *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    (x - lo) / (hi - lo)
                }
            }
            Self::Normal { mean, stddev } => {
                if x < 0.0 {
                    return 0.0;
                }
                let floor = std_normal_cdf(-mean / stddev);
                let mass = std_normal_cdf(mean / stddev);
                ((std_normal_cdf((x - mean) / stddev) - floor) / mass).clamp(0.0, 1.0)
            }
            Self::LogNormal { mu, sigma } => lognormal_cdf(x, *mu, *sigma),
            Self::Atom { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::MaxOfLogNormals { k, .. } => (0..*k)
                .map(|i| {
                    let (mu, sigma) = self.lognormal_params(i);
                    lognormal_cdf(x, mu, sigma)
                })
                .product(),
            Self::DiscreteAtoms { points, weights } => {
                points.iter().zip(weights).filter(|(p, _)| **p <= x).map(|(_, w)| w).sum::<f64>().min(1.0)
            }
        }
    }

    /// `P(X < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Self::Atom { value } => {
                if x > *value {
                    1.0
                } else {
                    0.0
                }
            }
            Self::DiscreteAtoms { points, weights } => {
                points.iter().zip(weights).filter(|(p, _)| **p < x).map(|(_, w)| w).sum::<f64>().min(1.0)
            }
            Self::Uniform { lo, hi } if lo == hi => {
                if x > *lo {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    /// `P(X >= x)`, the probability that a draw clears threshold `x`.
    pub fn survival_ge(&self, x: f64) -> f64 {
        1.0 - self.cdf_left(x)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_atomic() {
            return Err(Error::AtomHasNoDensity);
        }
        Ok(match self {
            Self::Uniform { lo, hi } => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            Self::Normal { mean, stddev } => {
                if x < 0.0 {
                    0.0
                } else {
                    normal_density(x, *mean, *stddev) / std_normal_cdf(mean / stddev)
                }
            }
            Self::LogNormal { mu, sigma } => lognormal_pdf(x, *mu, *sigma),
            Self::MaxOfLogNormals { k, .. } => {
                let cdfs: Vec<f64> = (0..*k)
                    .map(|i| {
                        let (mu, sigma) = self.lognormal_params(i);
                        lognormal_cdf(x, mu, sigma)
                    })
                    .collect();
                (0..*k)
                    .map(|i| {
                        let (mu, sigma) = self.lognormal_params(i);
                        let others: f64 = cdfs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c).product();
                        lognormal_pdf(x, mu, sigma) * others
                    })
                    .sum()
            }
            Self::Atom { .. } | Self::DiscreteAtoms { .. } => unreachable!(),
        })
    }

    /// Smallest `x` with `cdf(x) >= q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Self::Uniform { lo, hi } => lo + q * (hi - lo),
            Self::Normal { mean, stddev } => {
                let floor = std_normal_cdf(-mean / stddev);
                let u = floor + q * (1.0 - floor);
                if u >= 1.0 {
                    return f64::INFINITY;
                }
                (mean + stddev * std_normal_quantile(u)).max(0.0)
            }
            Self::LogNormal { mu, sigma } => {
                if q >= 1.0 {
                    return f64::INFINITY;
                }
                (mu + sigma * std_normal_quantile(q)).exp()
            }
            Self::Atom { value } => *value,
            Self::MaxOfLogNormals { k, .. } => {
                if q >= 1.0 {
                    return f64::INFINITY;
                }
                // Bracket between the per-component quantiles at q^(1/k)
                // and q, then bisect in log space.
                let comps: Vec<(f64, f64)> = (0..*k).map(|i| self.lognormal_params(i)).collect();
                let lo_q = q.max(1e-300);
                let mut lo = comps.iter().map(|(m, s)| m + s * std_normal_quantile(lo_q)).fold(f64::INFINITY, f64::min);
                let hi_q = q.powf(1.0 / *k as f64).min(1.0 - 1e-16);
                let mut hi = comps.iter().map(|(m, s)| m + s * std_normal_quantile(hi_q)).fold(f64::NEG_INFINITY, f64::max);
                lo -= 1.0;
                hi += 1.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid.exp()) >= q {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                    if hi - lo < 1e-13 {
                        break;
                    }
                }
                hi.exp()
            }
            Self::DiscreteAtoms { points, weights } => {
                let mut order: Vec<usize> = (0..points.len()).collect();
                order.sort_by(|a, b| points[*a].total_cmp(&points[*b]));
                let mut acc = 0.0;
                for i in &order {
                    acc += weights[*i];
                    if acc >= q - 1e-15 && weights[*i] > 0.0 {
                        return points[*i];
                    }
                }
                points[*order.last().unwrap()]
            }
        }
    }

    /// Smallest point of the support.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Self::Uniform { lo, .. } => *lo,
            Self::Atom { value } => *value,
            Self::DiscreteAtoms { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(p, _)| *p)
                .fold(f64::INFINITY, f64::min),
            _ => 0.0,
        }
    }

    /// Upper support bound; the `1 - 1e-9` quantile for unbounded families.
    pub fn upper_bound(&self) -> f64 {
        match self {
            Self::Uniform { hi, .. } => *hi,
            Self::Atom { value } => *value,
            Self::DiscreteAtoms { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .map(|(p, _)| *p)
                .fold(0.0, f64::max),
            _ => self.quantile(1.0 - UPPER_TAIL),
        }
    }

    /// Points where the cdf or density is not smooth.
    pub fn kinks(&self) -> Vec<f64> {
        match self {
            Self::Uniform { lo, hi } => vec![*lo, *hi],
            Self::Normal { .. } => vec![0.0],
            Self::LogNormal { .. } | Self::MaxOfLogNormals { .. } => Vec::new(),
            Self::Atom { value } => vec![*value],
            Self::DiscreteAtoms { points, .. } => points.clone(),
        }
    }

    /// Weighted atoms `(point, mass)` for atomic specs; `None` otherwise.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::Atom { value } => Some(vec![(*value, 1.0)]),
            Self::Uniform { lo, hi } if lo == hi => Some(vec![(*lo, 1.0)]),
            Self::DiscreteAtoms { points, weights } => {
                Some(points.iter().copied().zip(weights.iter().copied()).collect())
            }
            _ => None,
        }
    }

    /// Linear interpolation of parameters: `self` at `lambda = 0`, `other` at 1.
    pub fn interpolate(&self, other: &Self, lambda: f64) -> Result<Self> {
        let mix = |a: f64, b: f64| a + (b - a) * lambda;
        let out = match (self, other) {
            (Self::Uniform { lo: a0, hi: b0 }, Self::Uniform { lo: a1, hi: b1 }) => {
                Self::Uniform { lo: mix(*a0, *a1), hi: mix(*b0, *b1) }
            }
            (Self::Normal { mean: m0, stddev: s0 }, Self::Normal { mean: m1, stddev: s1 }) => {
                Self::Normal { mean: mix(*m0, *m1), stddev: mix(*s0, *s1) }
            }
            (Self::LogNormal { mu: m0, sigma: s0 }, Self::LogNormal { mu: m1, sigma: s1 }) => {
                Self::LogNormal { mu: mix(*m0, *m1), sigma: mix(*s0, *s1) }
            }
            (Self::Atom { value: v0 }, Self::Atom { value: v1 }) => Self::Atom { value: mix(*v0, *v1) },
            (Self::MaxOfLogNormals { k: k0, params: p0 }, Self::MaxOfLogNormals { k: k1, params: p1 })
                if k0 == k1 && p0.len() == p1.len() =>
            {
                Self::MaxOfLogNormals {
                    k: *k0,
                    params: p0.iter().zip(p1).map(|(a, b)| (mix(a.0, b.0), mix(a.1, b.1))).collect(),
                }
            }
            (Self::DiscreteAtoms { points: x0, weights: w0 }, Self::DiscreteAtoms { points: x1, weights: w1 })
                if x0.len() == x1.len() =>
            {
                let weights: Vec<f64> = w0.iter().zip(w1).map(|(a, b)| mix(*a, *b)).collect();
                let total: f64 = weights.iter().sum();
                Self::DiscreteAtoms {
                    points: x0.iter().zip(x1).map(|(a, b)| mix(*a, *b)).collect(),
                    weights: weights.into_iter().map(|w| w / total).collect(),
                }
            }
            _ => return Err(Error::MixedFamilies),
        };
        out.validated()
    }
}
