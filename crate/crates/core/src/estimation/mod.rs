//! Nonparametric estimators and per-episode spend-function estimates.

mod ecdf;
mod kde;
mod spend;

pub use ecdf::{dkw_bound, two_sample_ks, EmpiricalCdf};
pub use kde::{default_bandwidth, sample_stddev, BandwidthRule, KdeEstimate, Kernel};
pub use spend::{
    approx_spend_fp, approx_spend_sp, isotonic_clamp, mu_grid, AveragedSpend, Provenance, SpIntegration,
    SpendCurve, SpendFunctionEstimate, TabulatedCurve, MU_CAP, MU_GRID_POINTS,
};

/// Fits the empirical value cdf.
pub fn fit_ecdf(samples: &[f64]) -> crate::error::Result<EmpiricalCdf> {
    EmpiricalCdf::fit(samples)
}

/// Fits a kernel density estimate with bandwidth `s`.
pub fn fit_kde(samples: &[f64], kernel: Kernel, s: f64) -> crate::error::Result<KdeEstimate> {
    KdeEstimate::fit(samples, kernel, s)
}
