//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("atomic distribution has no density")]
    AtomHasNoDensity,

    #[error("quadrature did not reach tolerance {tol:e} within depth {max_depth} on [{lo}, {hi}]")]
    QuadratureNonConvergence { lo: f64, hi: f64, tol: f64, max_depth: u32 },

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("start and end distributions belong to different families")]
    MixedFamilies,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("sample set is empty")]
    EmptySample,

    #[error("bandwidth must be positive, got {0}")]
    NonpositiveBandwidth(f64),

    #[error("sample standard deviation is zero; use the fixed-price estimator")]
    DegenerateSample,

    #[error("unknown kernel `{0}` (expected gaussian, exponential or uniform)")]
    UnknownKernel(String),

    #[error("spend function stays above target {target} at mu_max = {mu_max} (value {value})")]
    BisectionBracketFailure { target: f64, mu_max: f64, value: f64 },

    #[error("all plan entries plus delta are zero")]
    AllZeroPlan,

    #[error("horizon of {rounds} rounds is not divisible into {episodes} episodes")]
    IndivisibleHorizon { rounds: usize, episodes: usize },

    #[error("invalid pacer config: {0}")]
    InvalidConfig(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(&'static str),

    #[error("expenditure {spent} exceeds posted bid {bid}")]
    Overcharge { spent: f64, bid: f64 },

    #[error("input lists are empty")]
    EmptyLists,

    #[error("input lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("table is empty")]
    EmptyTable,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::UnknownDataset(_)
            | Error::UnknownKernel(_)
            | Error::InvalidConfig(_)
            | Error::InvalidDistribution(_)
            | Error::InvalidModel(_)
            | Error::MixedFamilies
            | Error::IndivisibleHorizon { .. } => 2,
            _ => 3,
        }
    }
}
