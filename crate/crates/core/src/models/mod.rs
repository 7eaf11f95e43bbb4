//! Forecasting models behind one interface.
//!
//! Every model maps a `T × C` window to an `S × C` forecast. In target-channel
//! mode the forecast is computed for all channels and [`select_output`] keeps
//! the target column, so the other heads exist but receive no gradient.

mod checkpoint;
mod config;
mod layers;
mod params;
pub mod qsal;
mod transformer;
mod vqc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{Checkpoint, TensorRecord, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{Architecture, ModelConfig};
pub use layers::{Affine, LayerNorm, Mlp};
pub use params::{ParamEntry, ParamId, ParamKind, ParamStore};
pub use qsal::{gaussian_coefficients, qsal_circuit, value_observable_set, Qsal};
pub use transformer::{ChannelStats, InvertedTransformer, TransformerTrace};
pub use vqc::{DenseEmbed, DenseReadout, EncVqcDec, IndepVqc, Linear, Reupload, VqcMlp};

use crate::diff::{Tape, Tensor, Var};
use crate::error::{Error, Result};

pub trait Forecaster: Send + Sync {
    fn config(&self) -> &ModelConfig;
    fn params(&self) -> &ParamStore;
    fn params_mut(&mut self) -> &mut ParamStore;

    /// `params` are the leaves from [`ParamStore::leaves`] in store order.
    /// Returns `S × C`, before any target-channel selection.
    fn forward<'t>(&self, tape: &'t Tape, params: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>>;

    /// Attention matrices per block, for models that have them.
    fn attention_maps(&self, _window: &Tensor) -> Result<Option<Vec<Tensor>>> {
        Ok(None)
    }
}

/// Validates `config` and initialises a model from `seed`.
pub fn build_model(config: &ModelConfig, seed: u64) -> Result<Box<dyn Forecaster>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = config.clone();
    Ok(match config.arch {
        Architecture::Linear => Box::new(Linear::new(cfg, &mut rng)?),
        Architecture::IndepVqc { .. } => Box::new(IndepVqc::new(cfg, &mut rng)?),
        Architecture::VqcMlp { .. } => Box::new(VqcMlp::new(cfg, &mut rng)?),
        Architecture::DenseEmbedObs { .. } | Architecture::DenseEmbedQubits { .. } => {
            Box::new(DenseEmbed::new(cfg, &mut rng)?)
        }
        Architecture::EncVqcDec { .. } => Box::new(EncVqcDec::new(cfg, &mut rng)?),
        Architecture::Reupload { .. } => Box::new(Reupload::new(cfg, &mut rng)?),
        Architecture::ITransformer { .. } | Architecture::IQTransformer { .. } => {
            Box::new(InvertedTransformer::new(cfg, &mut rng)?)
        }
    })
}

fn check_window(cfg: &ModelConfig, window: &Tensor) -> Result<()> {
    if window.shape() != (cfg.lookback, cfg.channels) {
        return Err(Error::shape(
            "forecast",
            format!(
                "window is {:?}, model expects {}×{}",
                window.shape(),
                cfg.lookback,
                cfg.channels
            ),
        ));
    }
    Ok(())
}

/// Keeps the target column in target-channel mode.
pub fn select_output<'t>(cfg: &ModelConfig, out: Var<'t>) -> Result<Var<'t>> {
    match cfg.target_channel {
        Some(c) => out.column(c),
        None => Ok(out),
    }
}

/// Forecast for one window: `S × C`, or `S × 1` in target-channel mode.
pub fn predict(model: &dyn Forecaster, window: &Tensor) -> Result<Tensor> {
    let cfg = model.config();
    check_window(cfg, window)?;
    let tape = Tape::new();
    let p: Vec<_> = model.params().values().into_iter().map(|v| tape.constant(v)).collect();
    let out = model.forward(&tape, &p, tape.constant(window.clone()))?;
    Ok(select_output(cfg, out)?.value())
}

/// Mean squared error of one window's forecast and its gradient for every
/// parameter tensor, in store order.
pub fn loss_and_grads(model: &dyn Forecaster, window: &Tensor, target: &Tensor) -> Result<(f64, Vec<Tensor>)> {
    let cfg = model.config();
    check_window(cfg, window)?;
    let want = (cfg.horizon, cfg.output_channels());
    if target.shape() != want {
        return Err(Error::shape(
            "loss",
            format!("target is {:?}, forecast is {want:?}", target.shape()),
        ));
    }
    let tape = Tape::new();
    let p = model.params().leaves(&tape);
    let out = select_output(cfg, model.forward(&tape, &p, tape.constant(window.clone()))?)?;
    let loss = out.sub(tape.constant(target.clone()))?.square().mean();
    let value = loss.value().get(0, 0);
    let grads = tape.backward(loss)?;
    Ok((value, p.iter().map(|v| grads.wrt_or_zeros(*v)).collect()))
}

/// Total trainable scalars: classical weights plus circuit angles.
pub fn count_parameters(model: &dyn Forecaster) -> usize {
    model.params().scalar_count()
}

/// Scalar counts grouped by component, in construction order. The group is
/// the parameter name up to its last `.`.
pub fn parameter_breakdown(model: &dyn Forecaster) -> Vec<(String, usize)> {
    let mut out: Vec<(String, usize)> = Vec::new();
    for e in model.params().entries() {
        let group = e.name.rsplit_once('.').map_or(e.name.as_str(), |(g, _)| g).to_string();
        match out.last_mut() {
            Some((g, n)) if *g == group => *n += e.value.len(),
            _ => out.push((group, e.value.len())),
        }
    }
    out
}
