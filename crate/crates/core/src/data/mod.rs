//! Series generation and ingestion, normalisation, windowing and splitting.

mod dataset;
mod ingest;
mod lorenz;
mod normalize;
mod series;
mod surrogate;

pub use dataset::{build_dataset, make_windows, split_point, window_count, window_starts, Dataset, DatasetSpec, Source, Window};
pub use ingest::{clean, ingest_csv, interpolate_gaps, unwrap_degrees, write_csv, CsvSchema, TURBINE_CHANNELS};
pub use lorenz::{lorenz_generate, lorenz_step, LorenzParams};
pub use normalize::{NormMode, Normalizer};
pub use series::RawSeries;
pub use surrogate::{surrogate_generate, SurrogateParams};
