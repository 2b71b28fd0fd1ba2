use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::spec::DistributionSpec;
use crate::benchmark::Realization;
use crate::error::{Error, Result};

/// Version tag written into serialized models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Value and price distribution for one episode (or one round).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub value: DistributionSpec,
    pub price: DistributionSpec,
}

impl Episode {
    pub fn new(value: DistributionSpec, price: DistributionSpec) -> Self {
        Self { value, price }
    }

    /// Draws one `(value, price)` pair.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let v = self.value.sample(rng);
        let p = self.price.sample(rng);
        (v, p)
    }
}

/// A campaign of `E` equal-length episodes, each with a stationary product
/// distribution of values and prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodicModel {
    pub rounds_per_episode: usize,
    pub episodes: Vec<Episode>,
}

impl EpisodicModel {
    pub fn new(rounds_per_episode: usize, episodes: Vec<Episode>) -> Result<Self> {
        let model = Self { rounds_per_episode, episodes };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model for a horizon of `total_rounds`, which must split evenly.
    pub fn with_horizon(total_rounds: usize, episodes: Vec<Episode>) -> Result<Self> {
        let e = episodes.len();
        if e == 0 || total_rounds % e != 0 || total_rounds == 0 {
            return Err(Error::IndivisibleHorizon { rounds: total_rounds, episodes: e });
        }
        Self::new(total_rounds / e, episodes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes.is_empty() {
            return Err(Error::InvalidModel("model has no episodes".into()));
        }
        if self.rounds_per_episode == 0 {
            return Err(Error::InvalidModel("episodes must contain at least one round".into()));
        }
        for ep in &self.episodes {
            ep.value.validate()?;
            ep.price.validate()?;
        }
        Ok(())
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    pub fn horizon(&self) -> usize {
        self.rounds_per_episode * self.episodes.len()
    }

    /// Episode index (0-based) of 0-based round `t`.
    pub fn episode_of(&self, t: usize) -> usize {
        t / self.rounds_per_episode
    }

    /// Largest value upper bound across episodes (the campaign's `h`).
    pub fn value_upper_bound(&self) -> f64 {
        self.episodes.iter().map(|e| e.value.upper_bound()).fold(0.0, f64::max)
    }

    /// True when every price distribution is a single point mass.
    pub fn has_fixed_prices(&self) -> bool {
        self.episodes.iter().all(|e| matches!(e.price.atoms(), Some(a) if a.len() == 1))
    }

    /// Draws a full `T`-round realization.
    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let t = self.horizon();
        let mut values = Vec::with_capacity(t);
        let mut prices = Vec::with_capacity(t);
        for ep in &self.episodes {
            for _ in 0..self.rounds_per_episode {
                let (v, p) = ep.draw(rng);
                values.push(v);
                prices.push(p);
            }
        }
        Realization { values, prices }
    }

    /// Draws `n` independent `(values, prices)` training samples per episode.
    pub fn training_samples<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<(Vec<f64>, Vec<f64>)> {
        self.episodes
            .iter()
            .map(|ep| {
                let values = (0..n).map(|_| ep.value.sample(rng)).collect();
                let prices = (0..n).map(|_| ep.price.sample(rng)).collect();
                (values, prices)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::Episodic { version: MODEL_FORMAT_VERSION, model: self.clone() })?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// A campaign whose distribution changes every round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlowMovingModel {
    pub rounds: Vec<Episode>,
    /// Declared bound on the per-round sup-norm change of the value cdf.
    pub declared_zeta: f64,
    /// Declared bound on the per-round sup-norm change of the price density.
    pub declared_theta: f64,
}

impl SlowMovingModel {
    pub fn validate(&self) -> Result<()> {
        if self.rounds.is_empty() {
            return Err(Error::InvalidModel("slow-moving model has no rounds".into()));
        }
        for r in &self.rounds {
            r.value.validate()?;
            r.price.validate()?;
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn value_upper_bound(&self) -> f64 {
        self.rounds.iter().map(|e| e.value.upper_bound()).fold(0.0, f64::max)
    }

    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> Realization {
        let (values, prices) = self.rounds.iter().map(|r| r.draw(rng)).unzip();
        Realization { values, prices }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelDocument::SlowMoving {
            version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Serialized model document. The `kind` tag selects the model type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelDocument {
    Episodic { version: u32, model: EpisodicModel },
    SlowMoving { version: u32, model: SlowMovingModel },
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        let version = match &doc {
            ModelDocument::Episodic { version, model } => {
                model.validate()?;
                *version
            }
            ModelDocument::SlowMoving { version, model } => {
                model.validate()?;
                *version
            }
        };
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model format version {version} (expected {MODEL_FORMAT_VERSION})"
            )));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
