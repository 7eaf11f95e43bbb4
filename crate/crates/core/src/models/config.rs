use serde::{Deserialize, Serialize};

use crate::diff::GradMethod;
use crate::error::{Error, Result};

/// Model architecture and its architecture-specific hyperparameters.
///
/// Deserialises from a table tagged by `kind`, e.g.
/// `{ kind = "iqtransformer", blocks = 2, d_model = 9, ... }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    /// Affine map from the flattened window to the flattened horizon.
    Linear,
    /// One `T`-qubit circuit per channel, ⟨Z₀⟩ rescaled to [0, 1].
    IndepVqc { depth: usize },
    /// Independent circuits followed by a two-layer MLP over channels.
    VqcMlp { depth: usize },
    /// Three channels per qubit, read out as ⟨X₀⟩, ⟨Y₀⟩, ⟨Z₀⟩.
    DenseEmbedObs { depth: usize },
    /// Three channels per qubit, read out as ⟨Z⟩ on qubits 0, 1, 2.
    DenseEmbedQubits { depth: usize },
    /// Classical encoder, `n_qubits` circuit, classical decoder.
    EncVqcDec { n_qubits: usize, depth: usize },
    /// One qubit per channel, encoding and variational layers alternating per
    /// time step.
    Reupload {
        #[serde(default = "one")]
        depth_per_step: usize,
    },
    #[serde(rename = "itransformer")]
    ITransformer {
        blocks: usize,
        d_model: usize,
        d_ff: usize,
    },
    #[serde(rename = "iqtransformer")]
    IQTransformer {
        blocks: usize,
        d_model: usize,
        d_ff: usize,
        n_qubits: usize,
        p_enc: usize,
        p_vqc: usize,
    },
}

fn one() -> usize {
    1
}

impl Architecture {
    pub fn name(&self) -> &'static str {
        match self {
            Architecture::Linear => "linear",
            Architecture::IndepVqc { .. } => "indep_vqc",
            Architecture::VqcMlp { .. } => "vqc_mlp",
            Architecture::DenseEmbedObs { .. } => "dense_embed_obs",
            Architecture::DenseEmbedQubits { .. } => "dense_embed_qubits",
            Architecture::EncVqcDec { .. } => "enc_vqc_dec",
            Architecture::Reupload { .. } => "reupload",
            Architecture::ITransformer { .. } => "itransformer",
            Architecture::IQTransformer { .. } => "iqtransformer",
        }
    }

    /// Models whose output is a rescaled expectation and so only forecast one step.
    pub fn single_step_only(&self) -> bool {
        matches!(
            self,
            Architecture::IndepVqc { .. }
                | Architecture::DenseEmbedObs { .. }
                | Architecture::DenseEmbedQubits { .. }
                | Architecture::Reupload { .. }
        )
    }
}

/// Full model configuration: data shape plus architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Lookback window length `T`.
    pub lookback: usize,
    /// Forecast horizon `S`.
    pub horizon: usize,
    /// Number of input channels `C`.
    pub channels: usize,
    /// When set, only this channel is forecast.
    #[serde(default)]
    pub target_channel: Option<usize>,
    #[serde(default)]
    pub grad_method: GradMethod,
    pub arch: Architecture,
}

impl ModelConfig {
    pub fn new(lookback: usize, horizon: usize, channels: usize, arch: Architecture) -> Self {
        Self {
            lookback,
            horizon,
            channels,
            target_channel: None,
            grad_method: GradMethod::default(),
            arch,
        }
    }

    pub fn with_target(mut self, target: Option<usize>) -> Self {
        self.target_channel = target;
        self
    }

    /// Columns of the forecast: `C`, or 1 in target-channel mode.
    pub fn output_channels(&self) -> usize {
        if self.target_channel.is_some() {
            1
        } else {
            self.channels
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let (t, s, c) = (self.lookback, self.horizon, self.channels);
        if t == 0 || s == 0 || c == 0 {
            return bad(format!("lookback, horizon and channels must be positive (got {t}, {s}, {c})"));
        }
        if let Some(tc) = self.target_channel {
            if tc >= c {
                return bad(format!("target channel {tc} out of range for {c} channels"));
            }
        }
        if self.arch.single_step_only() && s != 1 {
            return bad(format!("{} only supports horizon 1, got {s}", self.arch.name()));
        }
        let positive = |name: &str, v: usize| {
            if v == 0 {
                Err(Error::Config(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        match self.arch {
            Architecture::Linear => {}
            Architecture::IndepVqc { depth } | Architecture::VqcMlp { depth } => {
                positive("depth", depth)?;
                if t < 2 {
                    return bad(format!("per-channel circuits use one qubit per step and need lookback >= 2, got {t}"));
                }
                qubit_limit(t)?;
            }
            Architecture::DenseEmbedObs { depth } | Architecture::DenseEmbedQubits { depth } => {
                positive("depth", depth)?;
                if c != 3 {
                    return bad(format!("dense embedding is defined for exactly 3 channels, got {c}"));
                }
                let min_t = if matches!(self.arch, Architecture::DenseEmbedQubits { .. }) { 3 } else { 2 };
                if t < min_t {
                    return bad(format!("{} needs lookback >= {min_t}, got {t}", self.arch.name()));
                }
                qubit_limit(t)?;
            }
            Architecture::EncVqcDec { n_qubits, depth } => {
                positive("depth", depth)?;
                if n_qubits < 2 {
                    return bad(format!("n_qubits must be at least 2, got {n_qubits}"));
                }
                qubit_limit(n_qubits)?;
            }
            Architecture::Reupload { depth_per_step } => {
                positive("depth_per_step", depth_per_step)?;
                if c < 2 {
                    return bad(format!("re-uploading uses one qubit per channel and needs >= 2 channels, got {c}"));
                }
                qubit_limit(c)?;
            }
            Architecture::ITransformer { d_model, d_ff, .. } => {
                positive("d_model", d_model)?;
                positive("d_ff", d_ff)?;
            }
            Architecture::IQTransformer {
                d_model,
                d_ff,
                n_qubits,
                p_enc,
                p_vqc,
                ..
            } => {
                positive("d_ff", d_ff)?;
                positive("p_enc", p_enc)?;
                positive("p_vqc", p_vqc)?;
                if n_qubits < 2 {
                    return bad(format!("n_qubits must be at least 2, got {n_qubits}"));
                }
                qubit_limit(n_qubits)?;
                if d_model != n_qubits * (p_enc + 2) {
                    return bad(format!(
                        "d_model must equal n_qubits * (p_enc + 2) = {}, got {d_model}",
                        n_qubits * (p_enc + 2)
                    ));
                }
                super::qsal::value_observable_set(n_qubits, d_model)?;
            }
        }
        Ok(())
    }
}

fn qubit_limit(n: usize) -> Result<()> {
    if n > crate::qsim::MAX_QUBITS {
        Err(Error::QubitCount(n))
    } else {
        Ok(())
    }
}
