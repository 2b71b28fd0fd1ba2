//! Adaptive Simpson quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance and recursion limits for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-8, max_depth: 40 }
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `cfg.abs_tol`.
///
/// The interval is first cut into 8 equal panels so that narrow features are
/// not missed by the initial five-point estimate; each panel then recurses
/// with its share of the tolerance. Recursion past `max_depth` is an error.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    const PANELS: usize = 8;
    let width = (b - a) / PANELS as f64;
    let tol = cfg.abs_tol / PANELS as f64;
    // Far enough inside to clear rounding in where a jump lands, never more
    // than a sliver of the first panel.
    let inset = ((b - a) * 1e-13).max(a.abs().max(b.abs()) * 1e-14).min(width * 1e-3);
    let mut total = 0.0;
    for i in 0..PANELS {
        let lo = a + width * i as f64;
        let hi = if i + 1 == PANELS { b } else { lo + width };
        // Outer endpoints are sampled just inside the interval so that a jump
        // placed exactly on a breakpoint is attributed to the correct piece.
        let flo = if i == 0 { f(lo + inset) } else { f(lo) };
        let fhi = if i + 1 == PANELS { f(hi - inset) } else { f(hi) };
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        let whole = simpson(lo, hi, flo, fmid, fhi);
        total += recurse(&f, lo, hi, flo, fmid, fhi, whole, tol, cfg.max_depth).map_err(|_| {
            Error::QuadratureNonConvergence { lo: a, hi: b, tol: cfg.abs_tol, max_depth: cfg.max_depth }
        })?;
    }
    Ok(total)
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite() && *x > a && *x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);
    let pieces = (nodes.len() - 1) as f64;
    let piece_cfg = QuadratureConfig { abs_tol: cfg.abs_tol / pieces, ..*cfg };
    nodes.windows(2).map(|w| integrate(&f, w[0], w[1], &piece_cfg)).sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> std::result::Result<f64, ()> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    // A piece this narrow holds at most a rounding-level share of any jump.
    if b - a <= 1e-13 * (a.abs() + b.abs()) {
        return Ok(left + right);
    }
    if depth == 0 || m <= a || m >= b {
        return Err(());
    }
    Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Composite trapezoid cumulative integral of tabulated `y` on uniform spacing `dx`.
pub(crate) fn cumulative_trapezoid(y: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in y.windows(2) {
        acc += 0.5 * dx * (w[0] + w[1]);
        out.push(acc);
    }
    out
}
