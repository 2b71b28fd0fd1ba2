//! Synthetic episodic datasets: three value families crossed with three price
//! settings, combined into six named datasets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{Episode, EpisodicModel};
use super::spec::DistributionSpec;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

pub const DEFAULT_EPISODES: usize = 10;
pub const DEFAULT_HORIZON: usize = 1000;

const DEFAULT_META_RANGES: &str = include_str!("../../config/meta_ranges.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dataset {
    #[serde(rename = "uniform_v_fix_p")]
    UniformValueFixedPrice,
    #[serde(rename = "normal_v_fix_p")]
    NormalValueFixedPrice,
    #[serde(rename = "lognorm_v_fix_p")]
    LogNormalValueFixedPrice,
    #[serde(rename = "uniform_v_normal_p")]
    UniformValueNormalPrice,
    #[serde(rename = "normal_v_normal_p")]
    NormalValueNormalPrice,
    #[serde(rename = "lognorn_v_maxlognorm_p")]
    LogNormalValueMaxLogNormalPrice,
}

impl Dataset {
    pub const ALL: [Dataset; 6] = [
        Dataset::UniformValueFixedPrice,
        Dataset::NormalValueFixedPrice,
        Dataset::LogNormalValueFixedPrice,
        Dataset::UniformValueNormalPrice,
        Dataset::NormalValueNormalPrice,
        Dataset::LogNormalValueMaxLogNormalPrice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dataset::UniformValueFixedPrice => "uniform_v_fix_p",
            Dataset::NormalValueFixedPrice => "normal_v_fix_p",
            Dataset::LogNormalValueFixedPrice => "lognorm_v_fix_p",
            Dataset::UniformValueNormalPrice => "uniform_v_normal_p",
            Dataset::NormalValueNormalPrice => "normal_v_normal_p",
            Dataset::LogNormalValueMaxLogNormalPrice => "lognorn_v_maxlognorm_p",
        }
    }

    fn index(self) -> u32 {
        Dataset::ALL.iter().position(|d| *d == self).unwrap() as u32
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dataset::ALL.into_iter().find(|d| d.name() == s).ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

/// Closed interval `[low, high]` that a parameter is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64);

impl Range {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Always consume one draw so the stream layout does not depend on
        // whether a range is degenerate.
        let u: f64 = rng.gen();
        self.0 + (self.1 - self.0) * u
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.0.is_finite() && self.1.is_finite() && self.0 <= self.1) {
            return Err(Error::Config(format!("range `{name}` must satisfy low <= high, got [{}, {}]", self.0, self.1)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformValueRanges {
    pub lo: Range,
    pub hi: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalRanges {
    pub mean: Range,
    pub stddev: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogNormalRanges {
    pub mu: Range,
    pub sigma: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPriceRange {
    pub price: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLogNormalRanges {
    pub k: usize,
    pub mu: Range,
    pub sigma: Range,
}

/// Ranges the per-episode dataset parameters are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaRanges {
    pub version: u32,
    pub uniform_value: UniformValueRanges,
    pub normal_value: NormalRanges,
    pub lognormal_value: LogNormalRanges,
    pub fixed_price: FixedPriceRange,
    pub normal_price: NormalRanges,
    pub max_lognormal_price: MaxLogNormalRanges,
}

impl Default for MetaRanges {
    fn default() -> Self {
        Self::from_toml(DEFAULT_META_RANGES).expect("bundled meta ranges parse")
    }
}

impl MetaRanges {
    pub fn from_toml(text: &str) -> Result<Self> {
        let ranges: MetaRanges = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        ranges.check()?;
        Ok(ranges)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    fn check(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::Config(format!("unsupported meta-range version {}", self.version)));
        }
        self.uniform_value.lo.check("uniform_value.lo")?;
        self.uniform_value.hi.check("uniform_value.hi")?;
        if self.uniform_value.lo.0 < 0.0 || self.uniform_value.lo.1 > self.uniform_value.hi.0 {
            return Err(Error::Config("uniform_value.lo must lie below uniform_value.hi and be nonnegative".into()));
        }
        for (name, r) in [
            ("normal_value.mean", self.normal_value.mean),
            ("normal_value.stddev", self.normal_value.stddev),
            ("lognormal_value.mu", self.lognormal_value.mu),
            ("lognormal_value.sigma", self.lognormal_value.sigma),
            ("fixed_price.price", self.fixed_price.price),
            ("normal_price.mean", self.normal_price.mean),
            ("normal_price.stddev", self.normal_price.stddev),
            ("max_lognormal_price.mu", self.max_lognormal_price.mu),
            ("max_lognormal_price.sigma", self.max_lognormal_price.sigma),
        ] {
            r.check(name)?;
        }
        if self.normal_value.stddev.0 <= 0.0
            || self.normal_price.stddev.0 <= 0.0
            || self.lognormal_value.sigma.0 <= 0.0
            || self.max_lognormal_price.sigma.0 <= 0.0
        {
            return Err(Error::Config("scale parameters must be positive".into()));
        }
        if self.fixed_price.price.0 <= 0.0 {
            return Err(Error::Config("fixed price must be positive".into()));
        }
        if self.max_lognormal_price.k == 0 {
            return Err(Error::Config("max_lognormal_price.k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Builds dataset `name` with `episodes` episodes over `horizon` rounds using
/// the bundled parameter ranges.
pub fn make_table1_dataset(name: &str, seed: u64, episodes: usize, horizon: usize) -> Result<EpisodicModel> {
    make_dataset(name.parse()?, seed, episodes, horizon, &MetaRanges::default())
}

pub fn make_dataset(
    dataset: Dataset,
    seed: u64,
    episodes: usize,
    horizon: usize,
    ranges: &MetaRanges,
) -> Result<EpisodicModel> {
    if episodes == 0 || horizon == 0 || horizon % episodes != 0 {
        return Err(Error::IndivisibleHorizon { rounds: horizon, episodes });
    }
    let mut rng = stream(seed, Purpose::DatasetParameters, dataset.index());
    let fixed_price = ranges.fixed_price.price.draw(&mut rng);
    let mut eps = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let value = match dataset {
            Dataset::UniformValueFixedPrice | Dataset::UniformValueNormalPrice => {
                let lo = ranges.uniform_value.lo.draw(&mut rng);
                let hi = ranges.uniform_value.hi.draw(&mut rng);
                DistributionSpec::uniform(lo, hi)?
            }
            Dataset::NormalValueFixedPrice | Dataset::NormalValueNormalPrice => {
                let mean = ranges.normal_value.mean.draw(&mut rng);
                let sd = ranges.normal_value.stddev.draw(&mut rng);
                DistributionSpec::normal(mean, sd)?
            }
            Dataset::LogNormalValueFixedPrice | Dataset::LogNormalValueMaxLogNormalPrice => {
                let mu = ranges.lognormal_value.mu.draw(&mut rng);
                let sigma = ranges.lognormal_value.sigma.draw(&mut rng);
                DistributionSpec::lognormal(mu, sigma)?
            }
        };
        let price = match dataset {
            Dataset::UniformValueFixedPrice | Dataset::NormalValueFixedPrice | Dataset::LogNormalValueFixedPrice => {
                DistributionSpec::atom(fixed_price)?
            }
            Dataset::UniformValueNormalPrice | Dataset::NormalValueNormalPrice => {
                let mean = ranges.normal_price.mean.draw(&mut rng);
                let sd = ranges.normal_price.stddev.draw(&mut rng);
                DistributionSpec::normal(mean, sd)?
            }
            Dataset::LogNormalValueMaxLogNormalPrice => {
                let r = &ranges.max_lognormal_price;
                let params = (0..r.k).map(|_| (r.mu.draw(&mut rng), r.sigma.draw(&mut rng))).collect();
                DistributionSpec::max_of_lognormals(r.k, params)?
            }
        };
        eps.push(Episode::new(value, price));
    }
    EpisodicModel::with_horizon(horizon, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_fixed_price_shape() {
        let m = make_table1_dataset("uniform_v_fix_p", 7, 10, 1000).unwrap();
        assert_eq!(m.num_episodes(), 10);
        assert_eq!(m.horizon(), 1000);
        for ep in &m.episodes {
            assert!(matches!(ep.value, DistributionSpec::Uniform { .. }));
            assert!(matches!(ep.price, DistributionSpec::Atom { .. }));
        }
    }

    #[test]
    fn lognormal_max_price_family() {
        let m = make_table1_dataset("lognorn_v_maxlognorm_p", 7, 10, 1000).unwrap();
        for ep in &m.episodes {
            assert!(matches!(ep.value, DistributionSpec::LogNormal { .. }));
            assert!(matches!(ep.price, DistributionSpec::MaxOfLogNormals { k: 5, .. }));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for d in Dataset::ALL {
            let a = make_table1_dataset(d.name(), 11, 10, 1000).unwrap();
            let b = make_table1_dataset(d.name(), 11, 10, 1000).unwrap();
            assert_eq!(a, b);
            let c = make_table1_dataset(d.name(), 12, 10, 1000).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn unknown_dataset() {
        assert!(matches!(make_table1_dataset("nope", 1, 10, 1000), Err(Error::UnknownDataset(_))));
    }

    #[test]
    fn bundled_ranges_parse_and_bad_ranges_rejected() {
        let r = MetaRanges::default();
        assert_eq!(r.max_lognormal_price.k, 5);
        let bad = DEFAULT_META_RANGES.replace("stddev = [0.1, 0.5]", "stddev = [0.5, 0.1]");
        assert!(MetaRanges::from_toml(&bad).is_err());
    }
}
