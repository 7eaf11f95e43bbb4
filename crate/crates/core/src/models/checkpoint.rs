//! Checkpoint files: JSON with a format header, the model configuration, the
//! data normaliser and every parameter tensor by name.
//!
//! ```json
//! { "format": "qforecast-checkpoint", "version": 1,
//!   "config": { ... }, "normalizer": { ... } | null,
//!   "tensors": [ { "name": "tokenizer.weight", "shape": [5, 9], "values": [...] } ] }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_model, Forecaster, ModelConfig};
use crate::data::Normalizer;
use crate::diff::Tensor;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "qforecast-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: ModelConfig,
    #[serde(default)]
    pub normalizer: Option<Normalizer>,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn from_model(model: &dyn Forecaster, normalizer: Option<Normalizer>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: model.config().clone(),
            normalizer,
            tensors: model
                .params()
                .entries()
                .iter()
                .map(|e| TensorRecord {
                    name: e.name.clone(),
                    shape: [e.value.rows(), e.value.cols()],
                    values: e.value.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Rebuilds the model and loads every tensor, checking names and shapes.
    pub fn into_model(&self) -> Result<Box<dyn Forecaster>> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut model = build_model(&self.config, 0)?;
        let store = model.params_mut();
        if store.len() != self.tensors.len() {
            return Err(Error::Config(format!(
                "checkpoint has {} tensors, model has {}",
                self.tensors.len(),
                store.len()
            )));
        }
        let mut values = Vec::with_capacity(self.tensors.len());
        for (rec, entry) in self.tensors.iter().zip(store.entries()) {
            let [r, c] = rec.shape;
            if rec.name != entry.name || (r, c) != entry.value.shape() {
                return Err(Error::Config(format!(
                    "checkpoint tensor {} {:?} does not match model tensor {} {:?}",
                    rec.name,
                    rec.shape,
                    entry.name,
                    entry.value.shape()
                )));
            }
            values.push(Tensor::new(r, c, rec.values.clone())?);
        }
        store.set_values(values);
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_vec_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&text)?)
    }
}
