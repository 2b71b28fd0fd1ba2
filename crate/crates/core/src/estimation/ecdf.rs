use crate::error::{Error, Result};

/// Empirical cdf with the strict convention `F(x) = #{X_i < x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn fit(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Number of samples strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        self.sorted.partition_point(|s| *s < x)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.count_below(x) as f64 / self.sorted.len() as f64
    }

    /// Fraction of samples at or above `x`.
    pub fn survival_ge(&self, x: f64) -> f64 {
        1.0 - self.eval(x)
    }

    /// `sup_x |F(x) - F_hat(x)|` against a continuous cdf `F`.
    ///
    /// The supremum of the difference between a continuous function and a
    /// step function is reached at a jump, so only the left and right limits
    /// at each sample need checking.
    pub fn sup_distance<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let n = self.sorted.len() as f64;
        let mut worst = 0.0f64;
        let mut i = 0;
        while i < self.sorted.len() {
            let x = self.sorted[i];
            let mut j = i;
            while j < self.sorted.len() && self.sorted[j] == x {
                j += 1;
            }
            let f = cdf(x);
            worst = worst.max((f - i as f64 / n).abs()).max((f - j as f64 / n).abs());
            i = j;
        }
        worst
    }
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn two_sample_ks(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let mut points: Vec<f64> = a.samples().iter().chain(b.samples()).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    points
        .iter()
        .flat_map(|x| {
            // Both the value at and just after every jump.
            let at = (a.eval(*x) - b.eval(*x)).abs();
            let after = (a.count_below_or_equal(*x) as f64 / a.len() as f64
                - b.count_below_or_equal(*x) as f64 / b.len() as f64)
                .abs();
            [at, after]
        })
        .fold(0.0, f64::max)
}

impl EmpiricalCdf {
    fn count_below_or_equal(&self, x: f64) -> usize {
        self.sorted.partition_point(|s| *s <= x)
    }
}

/// Dvoretzky–Kiefer–Wolfowitz radius: with probability at least `1 - delta`
/// the empirical cdf of `n` samples is within this sup-norm distance of the
/// true cdf.
pub fn dkw_bound(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_counting() {
        let f = EmpiricalCdf::fit(&[3.0, 1.0, 2.0]).unwrap();
        assert!((f.eval(2.5) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(10.0), 1.0);
        // Strict: a sample equal to x is not counted.
        assert!((f.eval(2.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_sample() {
        assert!(matches!(EmpiricalCdf::fit(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn dkw_values() {
        assert!((dkw_bound(200, 0.05) - (40f64.ln() / 400.0).sqrt()).abs() < 1e-15);
        assert!((dkw_bound(200, 0.05) - 0.09603).abs() < 1e-5);
        assert!((dkw_bound(800, 0.05) - dkw_bound(200, 0.05) / 2.0).abs() < 1e-15);
        let delta = 2.0 / std::f64::consts::E.powi(2);
        assert!((dkw_bound(1, delta) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sup_distance_uniform_grid() {
        // Samples at 0.1, 0.3, ..., 0.9 against U[0,1]: the gap is 0.1 at every jump.
        let f = EmpiricalCdf::fit(&[0.1, 0.3, 0.5, 0.7, 0.9]).unwrap();
        assert!((f.sup_distance(|x| x.clamp(0.0, 1.0)) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a = EmpiricalCdf::fit(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(two_sample_ks(&a, &a), 0.0);
        let b = EmpiricalCdf::fit(&[10.0, 20.0]).unwrap();
        assert_eq!(two_sample_ks(&a, &b), 1.0);
    }
}
