//! Versioned experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, Episode};
use crate::error::{Error, Result};
use crate::estimation::{BandwidthRule, Kernel};
use crate::spendplan::{EstimationSettings, FpMode};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ChangingSpend,
    FixedSpendBg19,
    Truthful,
    FixedMultiplier,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] =
        [Algorithm::ChangingSpend, Algorithm::FixedSpendBg19, Algorithm::Truthful, Algorithm::FixedMultiplier];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ChangingSpend => "changing_spend",
            Algorithm::FixedSpendBg19 => "fixed_spend_bg19",
            Algorithm::Truthful => "truthful",
            Algorithm::FixedMultiplier => "fixed_multiplier",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Margin added to every estimated rate before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaMode {
    Named(NamedDelta),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedDelta {
    /// The accuracy bound of the estimator in use.
    Theory,
    Zero,
}

impl Default for DeltaMode {
    fn default() -> Self {
        DeltaMode::Named(NamedDelta::Zero)
    }
}

impl fmt::Display for DeltaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaMode::Named(NamedDelta::Theory) => f.write_str("theory"),
            DeltaMode::Named(NamedDelta::Zero) => f.write_str("zero"),
            DeltaMode::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for DeltaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(DeltaMode::Named(NamedDelta::Theory)),
            "zero" => Ok(DeltaMode::Named(NamedDelta::Zero)),
            other => match other.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => Ok(DeltaMode::Value(v)),
                _ => Err(Error::Config(format!("delta must be `theory`, `zero` or a nonnegative number, got `{s}`"))),
            },
        }
    }
}

/// Starting shading of the pipeline's pacer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuInit {
    Named(NamedMuInit),
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedMuInit {
    /// The plan's estimated multiplier, clamped to `mu_bar`.
    Plan,
}

impl Default for MuInit {
    fn default() -> Self {
        MuInit::Named(NamedMuInit::Plan)
    }
}

impl fmt::Display for MuInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuInit::Named(NamedMuInit::Plan) => f.write_str("plan"),
            MuInit::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for MuInit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plan" => Ok(MuInit::Named(NamedMuInit::Plan)),
            other => match other.parse::<f64>() {
                Ok(v) if v >= 0.0 && v.is_finite() => Ok(MuInit::Value(v)),
                _ => Err(Error::Config(format!("mu_init must be `plan` or a nonnegative number, got `{s}`"))),
            },
        }
    }
}

/// Bandwidth selection as written in config files and flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    #[default]
    Scaled,
    Raw,
}

impl FromStr for BandwidthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaled" => Ok(BandwidthMode::Scaled),
            "raw" => Ok(BandwidthMode::Raw),
            other => Err(Error::Config(format!("bandwidth mode must be `scaled` or `raw`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub dataset: String,
    /// Datasets for multi-dataset comparisons; empty means `dataset` alone.
    pub datasets: Vec<String>,
    /// JSON model document; takes precedence over `dataset`.
    pub model_file: Option<PathBuf>,
    /// TOML meta-range file used to build datasets.
    pub meta_ranges: Option<PathBuf>,
    pub seed: u64,
    pub horizon: usize,
    pub episodes: usize,
    /// Training samples per episode.
    pub n: usize,
    pub budget_frac: f64,
    /// Absolute budget; overrides `budget_frac` when set.
    pub budget: Option<f64>,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub kernel: Kernel,
    pub bandwidth: BandwidthMode,
    pub fp_mode: FpMode,
    pub eta: Option<f64>,
    /// Multiplies the default step `tau^(-1/2)` of the pipeline's pacer when
    /// `eta` is unset.
    pub eta_scale: f64,
    pub mu_bar: Option<f64>,
    pub mu_init: MuInit,
    pub delta: DeltaMode,
    pub delta_confidence: f64,
    pub delta_c: f64,
    /// Multiplier for `fixed_multiplier`; defaults to `1 / (1 + mu_hat)`.
    pub beta: Option<f64>,
    pub buy_all_seeds: usize,
    pub output: Option<PathBuf>,
    pub n_grid: Vec<usize>,
    pub budget_fracs: Vec<f64>,
    /// Upper end of the budget fraction drawn per comparison run.
    pub max_budget_frac: f64,
    pub e_bucket_grid: Vec<usize>,
    pub drift_start: Option<Episode>,
    pub drift_end: Option<Episode>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            dataset: "uniform_v_fix_p".into(),
            datasets: Vec::new(),
            model_file: None,
            meta_ranges: None,
            seed: 0,
            horizon: 1000,
            episodes: 10,
            n: 1000,
            budget_frac: 0.5,
            budget: None,
            algorithms: vec![Algorithm::ChangingSpend, Algorithm::FixedSpendBg19, Algorithm::Truthful],
            repetitions: 20,
            kernel: Kernel::Gaussian,
            bandwidth: BandwidthMode::Scaled,
            fp_mode: FpMode::Auto,
            eta: None,
            eta_scale: 0.5,
            mu_bar: None,
            mu_init: MuInit::default(),
            delta: DeltaMode::default(),
            delta_confidence: 0.05,
            delta_c: 1.0,
            beta: None,
            buy_all_seeds: 20,
            output: None,
            n_grid: vec![10, 30, 100, 300, 1000, 3000, 10000],
            budget_fracs: vec![0.25, 0.5, 0.75, 1.0],
            max_budget_frac: 1.0,
            e_bucket_grid: vec![1, 10],
            drift_start: None,
            drift_end: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.horizon == 0 || self.episodes == 0 || self.horizon % self.episodes != 0 {
            return bad(format!("horizon {} is not divisible into {} episodes", self.horizon, self.episodes));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.budget_frac > 0.0 && self.budget_frac <= 1.5) {
            return bad(format!("budget_frac must lie in (0, 1.5], got {}", self.budget_frac));
        }
        if !(self.max_budget_frac > 0.0 && self.max_budget_frac <= 1.5) {
            return bad(format!("max_budget_frac must lie in (0, 1.5], got {}", self.max_budget_frac));
        }
        if let Some(b) = self.budget {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("budget must be positive, got {b}"));
            }
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required".into());
        }
        if let Some(eta) = self.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                return bad(format!("eta must be nonnegative, got {eta}"));
            }
        }
        if !(self.eta_scale >= 0.0 && self.eta_scale.is_finite()) {
            return bad(format!("eta_scale must be nonnegative, got {}", self.eta_scale));
        }
        if let Some(m) = self.mu_bar {
            if !(m > 0.0 && m.is_finite()) {
                return bad(format!("mu_bar must be positive, got {m}"));
            }
        }
        if let MuInit::Value(m) = self.mu_init {
            if !(m >= 0.0 && m.is_finite()) {
                return bad(format!("mu_init must be nonnegative, got {m}"));
            }
        }
        if !(self.delta_confidence > 0.0 && self.delta_confidence < 1.0) {
            return bad(format!("delta_confidence must lie in (0, 1), got {}", self.delta_confidence));
        }
        if !(self.delta_c >= 0.0) {
            return bad(format!("delta_c must be nonnegative, got {}", self.delta_c));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta <= 1.0) {
                return bad(format!("beta must lie in (0, 1], got {beta}"));
            }
        }
        if self.buy_all_seeds == 0 {
            return bad("buy_all_seeds must be at least 1".into());
        }
        if self.budget_fracs.iter().any(|f| !(*f > 0.0 && *f <= 1.5)) {
            return bad("every entry of budget_fracs must lie in (0, 1.5]".into());
        }
        if self.n_grid.contains(&0) {
            return bad("n_grid entries must be positive".into());
        }
        if self.e_bucket_grid.contains(&0) {
            return bad("e_bucket_grid entries must be positive".into());
        }
        Ok(())
    }

    pub fn estimation_settings(&self) -> EstimationSettings {
        EstimationSettings {
            kernel: self.kernel,
            bandwidth: match self.bandwidth {
                BandwidthMode::Scaled => BandwidthRule::Scaled,
                BandwidthMode::Raw => BandwidthRule::Raw,
            },
            fp_mode: self.fp_mode,
            ..EstimationSettings::default()
        }
    }

    /// Datasets for multi-dataset runs: `datasets` if set, else `dataset`.
    pub fn dataset_list(&self) -> Vec<String> {
        if self.datasets.is_empty() {
            vec![self.dataset.clone()]
        } else {
            self.datasets.clone()
        }
    }

    /// Start and end of the drifting campaign used by slow-moving runs.
    pub fn drift_endpoints(&self) -> Result<(Episode, Episode)> {
        let start = match &self.drift_start {
            Some(e) => e.clone(),
            None => Episode::new(DistributionSpec::uniform(0.0, 4.0)?, DistributionSpec::atom(1.0)?),
        };
        let end = match &self.drift_end {
            Some(e) => e.clone(),
            None => Episode::new(DistributionSpec::uniform(0.0, 1.0)?, DistributionSpec::atom(1.0)?),
        };
        Ok((start, end))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("version = 1\nseed = 9\ndelta = 0.05\nalgorithms = [\"truthful\"]\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.delta, DeltaMode::Value(0.05));
        assert_eq!(cfg.algorithms, vec![Algorithm::Truthful]);
        assert_eq!(cfg.horizon, 1000);
        let cfg = ExperimentConfig::from_toml("version = 1\ndelta = \"theory\"\n").unwrap();
        assert_eq!(cfg.delta, DeltaMode::Named(NamedDelta::Theory));
    }

    #[test]
    fn invalid_files_are_config_errors() {
        for text in [
            "version = 2",
            "version = 1\nrepetitions = 0",
            "version = 1\nhorizon = 1001",
            "version = 1\nbudget_frac = 2.0",
            "version = 1\nunknown_key = 3",
            "version = 1\nkernel = \"cosine\"",
        ] {
            let err = ExperimentConfig::from_toml(text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn drift_endpoints_parse_from_inline_tables() {
        let text = r#"
version = 1
drift_start = { value = { family = "uniform", lo = 0.0, hi = 2.0 }, price = { family = "atom", value = 1.0 } }
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let (start, _) = cfg.drift_endpoints().unwrap();
        assert_eq!(start.value, DistributionSpec::Uniform { lo: 0.0, hi: 2.0 });
    }

    #[test]
    fn parse_helpers() {
        assert_eq!("changing_spend".parse::<Algorithm>().unwrap(), Algorithm::ChangingSpend);
        assert!("bogus".parse::<Algorithm>().is_err());
        assert_eq!("0.1".parse::<DeltaMode>().unwrap(), DeltaMode::Value(0.1));
        assert!("-1".parse::<DeltaMode>().is_err());
        assert_eq!("raw".parse::<BandwidthMode>().unwrap(), BandwidthMode::Raw);
    }
}
