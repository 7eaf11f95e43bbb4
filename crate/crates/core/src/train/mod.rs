//! Training loop, metrics and multi-seed aggregation.

mod metrics;
mod run;
mod spec;
mod summary;

pub use metrics::{metrics, mse_loss, Metrics, MetricsAccumulator, MAPE_EPS};
pub use run::{evaluate, train_run, EpochRecord, RunRecord, RunStatus, TrainedRun, RECORD_SCHEMA_VERSION};
pub use spec::{ExperimentSpec, Regime, TrainingSpec};
pub use summary::{aggregate, MeanSd, Summary, FINAL_EPOCHS, SUMMARY_SCHEMA_VERSION};
