use serde::{Deserialize, Serialize};

use crate::data::DatasetSpec;
use crate::diff::{AdamConfig, GradMethod};
use crate::error::{Error, Result};
use crate::models::{Architecture, ModelConfig};

/// Short-term (one step) or long-term (multi-step) forecasting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "ST")]
    ShortTerm,
    #[serde(rename = "LT")]
    LongTerm,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::ShortTerm => "ST",
            Regime::LongTerm => "LT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub grad_method: GradMethod,
}

fn default_lr() -> f64 {
    5e-4
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

impl TrainingSpec {
    pub fn new(epochs: usize, batch_size: usize) -> Self {
        Self {
            epochs,
            batch_size,
            lr: default_lr(),
            seeds: default_seeds(),
            grad_method: GradMethod::default(),
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.lr)
    }
}

/// Everything needed to reproduce one row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub regime: Regime,
    pub dataset: DatasetSpec,
    pub model: Architecture,
    pub training: TrainingSpec,
}

impl ExperimentSpec {
    /// Model configuration for a dataset with `channels` channels.
    pub fn model_config(&self, channels: usize, target: Option<usize>) -> ModelConfig {
        ModelConfig {
            lookback: self.dataset.lookback,
            horizon: self.dataset.horizon,
            channels,
            target_channel: target,
            grad_method: self.training.grad_method,
            arch: self.model.clone(),
        }
    }

    /// Checks everything that can be checked before loading data.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.dataset.validate()?;
        let s = self.dataset.horizon;
        match self.regime {
            Regime::ShortTerm if s != 1 => return bad(format!("ST regime needs horizon 1, got {s}")),
            Regime::LongTerm if s < 2 => return bad(format!("LT regime needs horizon > 1, got {s}")),
            Regime::LongTerm if self.model.single_step_only() => {
                return bad(format!("{} cannot forecast more than one step", self.model.name()))
            }
            _ => {}
        }
        let t = &self.training;
        if t.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(t.lr > 0.0 && t.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", t.lr));
        }
        if t.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        Ok(())
    }
}
