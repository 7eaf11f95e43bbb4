use std::ops::Range;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{Metrics, MetricsAccumulator};
use super::spec::ExperimentSpec;
use crate::data::Dataset;
use crate::diff::{adam_step, AdamState, Tensor};
use crate::error::{Error, Result};
use crate::models::{build_model, count_parameters, loss_and_grads, predict, Forecaster};

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Windows per work unit when differentiating a batch. Fixed so that the
/// gradient sum has the same association order on any thread count.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 0 is the untrained model.
    pub epoch: usize,
    /// Mean per-window training loss over the epoch; `None` for epoch 0.
    pub train_loss: Option<f64>,
    pub val_loss: f64,
    pub val: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { epoch: usize, reason: String },
}

/// History of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub experiment: String,
    pub model: String,
    pub seed: u64,
    pub param_count: usize,
    pub status: RunStatus,
    /// Entry 0 holds the initial validation metrics.
    pub epochs: Vec<EpochRecord>,
    /// Wall-clock seconds per trained epoch. Not reproducible; kept out of
    /// summaries.
    pub epoch_seconds: Vec<f64>,
}

impl RunRecord {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }

    /// The record without wall-clock data, for reproducibility checks.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            epoch_seconds: Vec::new(),
            ..self.clone()
        }
    }
}

pub struct TrainedRun {
    pub record: RunRecord,
    pub model: Box<dyn Forecaster>,
}

/// Loss and metrics of `model` over windows `range`. Forward passes only.
pub fn evaluate(model: &dyn Forecaster, data: &Dataset, range: Range<usize>) -> Result<(f64, Metrics)> {
    let preds: Vec<(Tensor, Tensor)> = range
        .into_par_iter()
        .map(|i| Ok((predict(model, &data.input(i))?, data.target(i))))
        .collect::<Result<_>>()?;
    let mut acc = MetricsAccumulator::default();
    for (p, t) in &preds {
        acc.push(p.data(), t.data())?;
    }
    Ok((acc.mse(), acc.finish()?))
}

fn sum_into(acc: &mut [Tensor], g: &[Tensor]) {
    for (a, b) in acc.iter_mut().zip(g) {
        a.data_mut().iter_mut().zip(b.data()).for_each(|(x, y)| *x += y);
    }
}

/// Summed loss and gradients over `idx`, in a thread-count independent order.
fn batch_gradients(model: &dyn Forecaster, data: &Dataset, idx: &[usize]) -> Result<(f64, Vec<Tensor>)> {
    let parts: Vec<(f64, Vec<Tensor>)> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut loss = 0.0;
            let mut grads: Option<Vec<Tensor>> = None;
            for &i in chunk {
                let w = data.window(i);
                let (l, g) = loss_and_grads(model, &w.x, &w.y)?;
                loss += l;
                match grads.as_mut() {
                    Some(acc) => sum_into(acc, &g),
                    None => grads = Some(g),
                }
            }
            Ok((loss, grads.expect("non-empty chunk")))
        })
        .collect::<Result<_>>()?;
    let mut it = parts.into_iter();
    let (mut loss, mut grads) = it.next().expect("non-empty batch");
    for (l, g) in it {
        loss += l;
        sum_into(&mut grads, &g);
    }
    Ok((loss, grads))
}

fn failed(epoch: usize, reason: String) -> RunStatus {
    log::warn!("run failed at epoch {epoch}: {reason}");
    RunStatus::Failed { epoch, reason }
}

/// Trains one seed. Initialisation and shuffling depend only on `seed`.
/// A non-finite loss stops the run and is recorded, not returned as an error.
pub fn train_run(spec: &ExperimentSpec, data: &Dataset, seed: u64) -> Result<TrainedRun> {
    spec.validate()?;
    let (t, s) = (spec.dataset.lookback, spec.dataset.horizon);
    if (data.lookback, data.horizon) != (t, s) {
        return Err(Error::Config(format!(
            "dataset windows are {}→{}, experiment wants {t}→{s}",
            data.lookback, data.horizon
        )));
    }
    let cfg = spec.model_config(data.channels(), data.target);
    let mut model = build_model(&cfg, seed)?;
    let adam = spec.training.adam();
    let mut opt = AdamState::new(&model.params().values());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let (val_loss, val) = evaluate(model.as_ref(), data, data.val_range())?;
    let mut record = RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        experiment: spec.name.clone(),
        model: cfg.arch.name().to_string(),
        seed,
        param_count: count_parameters(model.as_ref()),
        status: RunStatus::Completed,
        epochs: vec![EpochRecord {
            epoch: 0,
            train_loss: None,
            val_loss,
            val,
        }],
        epoch_seconds: Vec::new(),
    };
    let mut order: Vec<usize> = data.train_range().collect();
    'epochs: for epoch in 1..=spec.training.epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(spec.training.batch_size) {
            let (loss, mut grads) = batch_gradients(model.as_ref(), data, batch)?;
            if !loss.is_finite() {
                record.status = failed(epoch, format!("non-finite training loss {loss}"));
                break 'epochs;
            }
            total += loss;
            let inv = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.data_mut().iter_mut().for_each(|v| *v *= inv));
            let mut values = model.params().values();
            adam_step(&mut values, &grads, &mut opt, &adam)?;
            model.params_mut().set_values(values);
        }
        let (val_loss, val) = evaluate(model.as_ref(), data, data.val_range())?;
        if !val_loss.is_finite() {
            record.status = failed(epoch, format!("non-finite validation loss {val_loss}"));
            break;
        }
        let train_loss = total / order.len() as f64;
        log::debug!("{} seed {seed} epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}", spec.name);
        record.epochs.push(EpochRecord {
            epoch,
            train_loss: Some(train_loss),
            val_loss,
            val,
        });
        record.epoch_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(TrainedRun { record, model })
}
