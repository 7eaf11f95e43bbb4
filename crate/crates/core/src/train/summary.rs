use serde::{Deserialize, Serialize};

use super::run::RunRecord;
use super::spec::Regime;
use crate::error::{Error, Result};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

/// Epochs averaged per seed before averaging over seeds.
pub const FINAL_EPOCHS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(xs: &[f64]) -> Self {
        if xs.windows(2).all(|w| w[0] == w[1]) {
            return Self { mean: xs[0], sd: 0.0 };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, sd: var.sqrt() }
    }
}

/// One results-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub experiment: String,
    pub model: String,
    pub regime: Regime,
    pub param_count: usize,
    pub seeds: Vec<u64>,
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub mape: MeanSd,
    pub mae: MeanSd,
    pub rmse: MeanSd,
    pub val_loss: MeanSd,
}

/// Per seed, the mean of each validation metric over the last ten epochs;
/// then mean and standard deviation across completed seeds. Failed runs are
/// counted and left out.
pub fn aggregate(records: &[RunRecord], regime: Regime) -> Result<Summary> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("cannot aggregate zero runs".into()))?;
    let done: Vec<&RunRecord> = records.iter().filter(|r| r.completed()).collect();
    if done.is_empty() {
        return Err(Error::Config(format!("all {} run(s) failed", records.len())));
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for r in &done {
        let trained = &r.epochs[1..];
        if trained.len() < FINAL_EPOCHS {
            return Err(Error::Config(format!(
                "aggregation needs at least {FINAL_EPOCHS} epochs, seed {} has {}",
                r.seed,
                trained.len()
            )));
        }
        let tail = &trained[trained.len() - FINAL_EPOCHS..];
        let mean = |f: &dyn Fn(&super::run::EpochRecord) -> f64| tail.iter().map(f).sum::<f64>() / FINAL_EPOCHS as f64;
        cols[0].push(mean(&|e| e.val.mape));
        cols[1].push(mean(&|e| e.val.mae));
        cols[2].push(mean(&|e| e.val.rmse));
        cols[3].push(mean(&|e| e.val_loss));
    }
    Ok(Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        experiment: first.experiment.clone(),
        model: first.model.clone(),
        regime,
        param_count: first.param_count,
        seeds: records.iter().map(|r| r.seed).collect(),
        completed_runs: done.len(),
        failed_runs: records.len() - done.len(),
        mape: MeanSd::of(&cols[0]),
        mae: MeanSd::of(&cols[1]),
        rmse: MeanSd::of(&cols[2]),
        val_loss: MeanSd::of(&cols[3]),
    })
}
