//! Per-episode spend-function estimates built from historical samples.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ecdf::EmpiricalCdf;
use super::kde::{KdeEstimate, Kernel};
use crate::error::{Error, Result};
use crate::quadrature::{cumulative_trapezoid, integrate_piecewise, QuadratureConfig};

/// Cap on the largest tabulated shading multiplier.
pub const MU_CAP: f64 = 1e4;
/// Number of points in the shading grid of stochastic-price estimates.
pub const MU_GRID_POINTS: usize = 512;
const LINEAR_SPAN: f64 = 2.0;
const MAX_TABLE_NODES: usize = 1 << 16;
const NODES_PER_BANDWIDTH: f64 = 8.0;

/// Anything that can be evaluated as a nonincreasing function of `mu >= 0`.
pub trait SpendCurve {
    fn eval(&self, mu: f64) -> f64;
    /// Shading beyond which the curve is treated as constant.
    fn mu_max(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Fixed price, exact step function.
    Fp,
    /// Stochastic price, kernel-smoothed and tabulated.
    Sp,
}

/// How `M(u) = int_0^u p d(p) dp` is tabulated for the stochastic-price estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SpIntegration {
    /// Linearly binned density on a fine grid, cumulative trapezoid.
    #[default]
    Binned,
    /// Exact density, adaptive Simpson on every table cell.
    Adaptive { quad: QuadratureConfig },
}

#[derive(Debug, Clone)]
enum Rule {
    Step { price: f64 },
    Grid { mu_grid: Vec<f64>, values: Vec<f64> },
}

/// Estimated episodic spend function `G_hat(mu)`.
#[derive(Debug, Clone)]
pub struct SpendFunctionEstimate {
    provenance: Provenance,
    ecdf: EmpiricalCdf,
    kde: Option<KdeEstimate>,
    rule: Rule,
    mu_max: f64,
}

impl SpendFunctionEstimate {
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn value_cdf(&self) -> &EmpiricalCdf {
        &self.ecdf
    }

    pub fn price_kde(&self) -> Option<&KdeEstimate> {
        self.kde.as_ref()
    }

    pub fn price_atom(&self) -> Option<f64> {
        match self.rule {
            Rule::Step { price } => Some(price),
            Rule::Grid { .. } => None,
        }
    }

    /// The `(mu, value)` pairs backing the estimate. For fixed prices these
    /// are `0` and every positive breakpoint `V_i / p - 1`, evaluated at the
    /// breakpoint itself.
    pub fn grid(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.rule {
            Rule::Grid { mu_grid, values } => (mu_grid.clone(), values.clone()),
            Rule::Step { price } => {
                let mut mus = vec![0.0];
                mus.extend(self.ecdf.samples().iter().map(|v| v / price - 1.0).filter(|m| *m > 0.0));
                mus.dedup();
                let vals = mus.iter().map(|m| self.eval(*m)).collect();
                (mus, vals)
            }
        }
    }

    /// Writes `mu,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mu", "value"])?;
        let (mus, vals) = self.grid();
        for (m, v) in mus.iter().zip(&vals) {
            w.write_record([m.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl SpendCurve for SpendFunctionEstimate {
    fn eval(&self, mu: f64) -> f64 {
        let mu = mu.max(0.0);
        match &self.rule {
            Rule::Step { price } => price * self.ecdf.survival_ge((1.0 + mu) * price),
            Rule::Grid { mu_grid, values } => interpolate(mu_grid, values, mu),
        }
    }

    fn mu_max(&self) -> f64 {
        self.mu_max
    }
}

/// Pointwise mean of several curves.
#[derive(Debug, Clone, Copy)]
pub struct AveragedSpend<'a, C> {
    parts: &'a [C],
}

impl<'a, C: SpendCurve> AveragedSpend<'a, C> {
    pub fn new(parts: &'a [C]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptyLists);
        }
        Ok(Self { parts })
    }
}

impl<C: SpendCurve> SpendCurve for AveragedSpend<'_, C> {
    fn eval(&self, mu: f64) -> f64 {
        self.parts.iter().map(|c| c.eval(mu)).sum::<f64>() / self.parts.len() as f64
    }

    fn mu_max(&self) -> f64 {
        self.parts.iter().map(|c| c.mu_max()).fold(0.0, f64::max)
    }
}

/// Tabulated curve, mainly for tests and hand-built inputs. Values are
/// clamped to be nonincreasing and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCurve {
    mu_grid: Vec<f64>,
    values: Vec<f64>,
}

impl TabulatedCurve {
    pub fn new(mu_grid: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        if mu_grid.is_empty() {
            return Err(Error::EmptyLists);
        }
        if mu_grid.len() != values.len() {
            return Err(Error::LengthMismatch(mu_grid.len(), values.len()));
        }
        isotonic_clamp(&mut values);
        Ok(Self { mu_grid, values })
    }
}

impl SpendCurve for TabulatedCurve {
    fn eval(&self, mu: f64) -> f64 {
        interpolate(&self.mu_grid, &self.values, mu.max(0.0))
    }

    fn mu_max(&self) -> f64 {
        *self.mu_grid.last().unwrap()
    }
}

/// Fixed-price estimate `G_hat(mu) = p (1 - F_hat((1 + mu) p))`.
pub fn approx_spend_fp(values: &[f64], price: f64) -> Result<SpendFunctionEstimate> {
    if !(price > 0.0 && price.is_finite()) {
        return Err(Error::InvalidDistribution(format!("fixed price must be positive, got {price}")));
    }
    let ecdf = EmpiricalCdf::fit(values)?;
    let top = ecdf.samples().last().copied().unwrap_or(0.0);
    let mu_max = (top / price - 1.0).clamp(1.0, MU_CAP);
    Ok(SpendFunctionEstimate { provenance: Provenance::Fp, ecdf, kde: None, rule: Rule::Step { price }, mu_max })
}

/// Stochastic-price estimate `G_hat(mu) = int p (1 - F_hat((1 + mu) p)) d_hat(p) dp`.
///
/// Because `1 - F_hat(x)` counts samples `V_j >= x`, the integral equals
/// `(1/n) sum_j M(V_j / (1 + mu))` with `M(u) = int_0^u p d_hat(p) dp`. `M` is
/// tabulated once and the result is exact in the step function. Prices are
/// integrated over `p >= 0`.
pub fn approx_spend_sp(
    values: &[f64],
    prices: &[f64],
    kernel: Kernel,
    bandwidth: f64,
    method: &SpIntegration,
) -> Result<SpendFunctionEstimate> {
    if values.len() != prices.len() {
        return Err(Error::LengthMismatch(values.len(), prices.len()));
    }
    let ecdf = EmpiricalCdf::fit(values)?;
    let kde = KdeEstimate::fit(prices, kernel, bandwidth)?;
    let reach = kernel.reach() * bandwidth;

    let p_hi = kde.samples().last().copied().unwrap_or(0.0) + reach;
    let table = if p_hi > 0.0 { Some(MomentTable::build(&kde, p_hi, method)?) } else { None };

    let min_positive = kde.samples().iter().copied().find(|p| *p > 0.0);
    let top = ecdf.samples().last().copied().unwrap_or(0.0);
    let mu_max = match min_positive {
        Some(p) => {
            let floor = (p - reach).max(1e-3 * p);
            (top / floor - 1.0).clamp(1.0, MU_CAP)
        }
        None => 1.0,
    };
    let mu_grid = mu_grid(mu_max);
    let positive_values: Vec<f64> = ecdf.samples().iter().copied().filter(|v| *v > 0.0).collect();
    let n = ecdf.len() as f64;
    let mut vals: Vec<f64> = mu_grid
        .iter()
        .map(|mu| match &table {
            Some(t) => positive_values.iter().map(|v| t.eval(v / (1.0 + mu))).sum::<f64>() / n,
            None => 0.0,
        })
        .collect();
    isotonic_clamp(&mut vals);
    Ok(SpendFunctionEstimate {
        provenance: Provenance::Sp,
        ecdf,
        kde: Some(kde),
        rule: Rule::Grid { mu_grid, values: vals },
        mu_max,
    })
}

/// `M(u) = int_0^u p d(p) dp` on an equally spaced table over `[0, hi]`.
struct MomentTable {
    dx: f64,
    cumulative: Vec<f64>,
}

impl MomentTable {
    fn build(kde: &KdeEstimate, hi: f64, method: &SpIntegration) -> Result<Self> {
        let wanted = (hi / (kde.bandwidth() / NODES_PER_BANDWIDTH)).ceil() as usize + 1;
        let nodes = wanted.clamp(2, MAX_TABLE_NODES);
        let dx = hi / (nodes - 1) as f64;
        let cumulative = match method {
            SpIntegration::Binned => {
                let density = kde.tabulate(0.0, hi, nodes);
                let integrand: Vec<f64> = density.iter().enumerate().map(|(i, d)| i as f64 * dx * d).collect();
                cumulative_trapezoid(&integrand, dx)
            }
            SpIntegration::Adaptive { quad } => {
                let cell_cfg = QuadratureConfig { abs_tol: quad.abs_tol / (nodes - 1) as f64, ..*quad };
                let knots = kernel_knots(kde);
                let mut acc = Vec::with_capacity(nodes);
                acc.push(0.0);
                let mut total = 0.0;
                for i in 0..nodes - 1 {
                    let (a, b) = (i as f64 * dx, (i + 1) as f64 * dx);
                    let from = knots.partition_point(|k| *k <= a);
                    let to = knots.partition_point(|k| *k < b);
                    total += integrate_piecewise(|p| p * kde.eval(p), a, b, &knots[from..to], &cell_cfg)?;
                    acc.push(total);
                }
                acc
            }
        };
        Ok(Self { dx, cumulative })
    }

    fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let pos = u / self.dx;
        let last = self.cumulative.len() - 1;
        if pos >= last as f64 {
            return self.cumulative[last];
        }
        let k = pos.floor() as usize;
        let frac = pos - k as f64;
        self.cumulative[k] + frac * (self.cumulative[k + 1] - self.cumulative[k])
    }
}

/// Points where the density estimate is not smooth.
fn kernel_knots(kde: &KdeEstimate) -> Vec<f64> {
    let s = kde.bandwidth();
    let mut knots: Vec<f64> = match kde.kernel() {
        Kernel::Gaussian => Vec::new(),
        Kernel::Exponential => kde.samples().to_vec(),
        Kernel::Uniform => kde.samples().iter().flat_map(|x| [x - s, x + s]).collect(),
    };
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots
}

/// 512 shading points: linear on `[0, min(mu_max, 2)]`, geometric above.
pub fn mu_grid(mu_max: f64) -> Vec<f64> {
    let mu_max = mu_max.max(f64::MIN_POSITIVE);
    if mu_max <= LINEAR_SPAN {
        let step = mu_max / (MU_GRID_POINTS - 1) as f64;
        return (0..MU_GRID_POINTS).map(|i| step * i as f64).collect();
    }
    let half = MU_GRID_POINTS / 2;
    let step = LINEAR_SPAN / (half - 1) as f64;
    let mut grid: Vec<f64> = (0..half).map(|i| step * i as f64).collect();
    let ratio = (mu_max / LINEAR_SPAN).powf(1.0 / half as f64);
    grid.extend((1..=half).map(|i| LINEAR_SPAN * ratio.powi(i as i32)));
    *grid.last_mut().unwrap() = mu_max;
    grid
}

/// Cumulative minimum followed by a floor at zero.
pub fn isotonic_clamp(values: &mut [f64]) {
    let mut running = f64::INFINITY;
    for v in values.iter_mut() {
        running = running.min(*v);
        *v = running.max(0.0);
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|g| *g <= x);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[k - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}
