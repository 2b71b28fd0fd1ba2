use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Symmetric, nonincreasing, exponentially decaying kernels, each normalized
/// to integrate to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Gaussian,
    /// Laplace kernel `exp(-|u|) / 2`.
    Exponential,
    /// Box kernel `1/2` on `[-1, 1]`.
    Uniform,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Exponential => "exponential",
            Kernel::Uniform => "uniform",
        }
    }

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            Kernel::Exponential => 0.5 * (-u.abs()).exp(),
            Kernel::Uniform => {
                if u.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Half-width (in bandwidth units) outside which the kernel is below
    /// double precision relevance.
    pub fn reach(self) -> f64 {
        match self {
            Kernel::Gaussian => 9.0,
            Kernel::Exponential => 36.0,
            Kernel::Uniform => 1.0,
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "exponential" => Ok(Kernel::Exponential),
            "uniform" => Ok(Kernel::Uniform),
            other => Err(Error::UnknownKernel(other.to_string())),
        }
    }
}

/// How the kernel bandwidth is chosen from the training sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum BandwidthRule {
    /// `sd * n^(-1/3)`, equivariant under rescaling of the sample.
    #[default]
    Scaled,
    /// `n^(-1/3)` with no scale adjustment.
    Raw,
    Fixed(f64),
}

impl BandwidthRule {
    pub fn bandwidth(self, samples: &[f64]) -> Result<f64> {
        match self {
            BandwidthRule::Scaled => default_bandwidth(samples),
            BandwidthRule::Raw => {
                if samples.is_empty() {
                    return Err(Error::EmptySample);
                }
                Ok((samples.len() as f64).powf(-1.0 / 3.0))
            }
            BandwidthRule::Fixed(s) if s > 0.0 => Ok(s),
            BandwidthRule::Fixed(s) => Err(Error::NonpositiveBandwidth(s)),
        }
    }
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_stddev(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `s = sd * n^(-1/3)`.
pub fn default_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let sd = sample_stddev(samples);
    if !(sd > 0.0) {
        return Err(Error::DegenerateSample);
    }
    Ok(sd * (samples.len() as f64).powf(-1.0 / 3.0))
}

/// Kernel density estimate `d(x) = 1/(n s) sum_i K((x - X_i) / s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeEstimate {
    sorted: Vec<f64>,
    bandwidth: f64,
    kernel: Kernel,
}

impl KdeEstimate {
    pub fn fit(samples: &[f64], kernel: Kernel, bandwidth: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::NonpositiveBandwidth(bandwidth));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted, bandwidth, kernel })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Exact evaluation, summing over samples within the kernel's reach.
    pub fn eval(&self, x: f64) -> f64 {
        let reach = self.kernel.reach() * self.bandwidth;
        let lo = self.sorted.partition_point(|s| *s < x - reach);
        let hi = self.sorted.partition_point(|s| *s <= x + reach);
        let sum: f64 = self.sorted[lo..hi].iter().map(|xi| self.kernel.eval((x - xi) / self.bandwidth)).sum();
        sum / (self.sorted.len() as f64 * self.bandwidth)
    }

    /// Density tabulated on `nodes` equally spaced points over `[a, b]`.
    ///
    /// Samples are linearly binned onto the grid and the bin counts are
    /// convolved with the sampled kernel. The grid spacing should be a small
    /// fraction of the bandwidth for the binning error to be negligible.
    pub fn tabulate(&self, a: f64, b: f64, nodes: usize) -> Vec<f64> {
        assert!(nodes >= 2 && b > a);
        let dx = (b - a) / (nodes - 1) as f64;
        let mut counts = vec![0.0; nodes];
        for x in &self.sorted {
            let pos = (x - a) / dx;
            if pos <= 0.0 {
                counts[0] += 1.0;
            } else if pos >= (nodes - 1) as f64 {
                counts[nodes - 1] += 1.0;
            } else {
                let k = pos.floor() as usize;
                let frac = pos - k as f64;
                counts[k] += 1.0 - frac;
                counts[k + 1] += frac;
            }
        }
        let taps = ((self.kernel.reach() * self.bandwidth) / dx).ceil() as usize;
        let taps = taps.min(nodes - 1);
        let mut weights: Vec<f64> = (0..=taps).map(|l| self.kernel.eval(l as f64 * dx / self.bandwidth)).collect();
        // Rescale so the sampled kernel has unit mass on the grid; this matters
        // for the box kernel, whose edges land on grid nodes.
        let mass = (2.0 * weights.iter().sum::<f64>() - weights[0]) * dx / self.bandwidth;
        if mass > 0.0 {
            weights.iter_mut().for_each(|w| *w /= mass);
        }
        let norm = 1.0 / (self.sorted.len() as f64 * self.bandwidth);
        (0..nodes)
            .map(|k| {
                let lo = k.saturating_sub(taps);
                let hi = (k + taps).min(nodes - 1);
                let mut acc = 0.0;
                for (j, c) in counts.iter().enumerate().take(hi + 1).skip(lo) {
                    if *c != 0.0 {
                        acc += c * weights[k.abs_diff(j)];
                    }
                }
                acc * norm
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureConfig};

    #[test]
    fn single_sample_peak() {
        let k = KdeEstimate::fit(&[0.0], Kernel::Gaussian, 1.0).unwrap();
        assert!((k.eval(0.0) - 0.39894).abs() < 1e-5);
    }

    #[test]
    fn errors() {
        assert!(matches!(KdeEstimate::fit(&[], Kernel::Gaussian, 1.0), Err(Error::EmptySample)));
        assert!(matches!(KdeEstimate::fit(&[1.0], Kernel::Gaussian, 0.0), Err(Error::NonpositiveBandwidth(_))));
        assert!(matches!(default_bandwidth(&[2.0, 2.0, 2.0]), Err(Error::DegenerateSample)));
        assert!(matches!("cosine".parse::<Kernel>(), Err(Error::UnknownKernel(_))));
    }

    #[test]
    fn symmetric_sample_gives_symmetric_density() {
        let xs = [-2.0, -0.5, 0.0, 0.5, 2.0, 1.0, -1.0];
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        for kernel in [Kernel::Gaussian, Kernel::Exponential, Kernel::Uniform] {
            let k = KdeEstimate::fit(&xs, kernel, 0.7).unwrap();
            for x in [0.1, 0.9, 1.7, 3.3] {
                assert!((k.eval(x) - k.eval(2.0 * mean - x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn kernels_integrate_to_one() {
        let xs = [0.3, 1.2, 1.9, 4.0];
        let cfg = QuadratureConfig { abs_tol: 1e-9, max_depth: 40 };
        for kernel in [Kernel::Gaussian, Kernel::Exponential] {
            let k = KdeEstimate::fit(&xs, kernel, 0.4).unwrap();
            let mass = integrate(|x| k.eval(x), -20.0, 25.0, &cfg).unwrap();
            assert!((mass - 1.0).abs() < 1e-4, "{kernel}: {mass}");
        }
        let k = KdeEstimate::fit(&xs, Kernel::Uniform, 0.4).unwrap();
        let breaks: Vec<f64> = xs.iter().flat_map(|x| [x - 0.4, x + 0.4]).collect();
        let mass = crate::quadrature::integrate_piecewise(|x| k.eval(x), -2.0, 6.0, &breaks, &cfg).unwrap();
        assert!((mass - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bandwidth_formula_and_equivariance() {
        // Samples with sd exactly 1: n = 1000 gives s = 0.1.
        let n = 1000;
        let raw: Vec<f64> = (0..n).map(|i| (i as f64 / n as f64 * 7.0).sin()).collect();
        let sd = sample_stddev(&raw);
        let unit: Vec<f64> = raw.iter().map(|x| x / sd).collect();
        assert!((default_bandwidth(&unit).unwrap() - 0.1).abs() < 1e-12);
        let scaled: Vec<f64> = unit.iter().map(|x| 3.5 * x).collect();
        assert!((default_bandwidth(&scaled).unwrap() - 0.35).abs() < 1e-12);
    }

    #[test]
    fn tabulated_density_matches_exact() {
        let xs: Vec<f64> = (0..500).map(|i| 1.0 + ((i * 7919) % 500) as f64 / 500.0).collect();
        for kernel in [Kernel::Gaussian, Kernel::Exponential] {
            let k = KdeEstimate::fit(&xs, kernel, 0.1).unwrap();
            let nodes = 4001;
            let (a, b) = (0.0, 4.0);
            let tab = k.tabulate(a, b, nodes);
            let dx = (b - a) / (nodes - 1) as f64;
            for i in (0..nodes).step_by(97) {
                let x = a + dx * i as f64;
                assert!((tab[i] - k.eval(x)).abs() < 5e-3, "{kernel} x={x}: {} vs {}", tab[i], k.eval(x));
            }
        }
    }
}
