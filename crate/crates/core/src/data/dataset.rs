use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    ingest_csv, lorenz_generate, surrogate_generate, CsvSchema, LorenzParams, NormMode, Normalizer, RawSeries,
    SurrogateParams,
};
use crate::diff::Tensor;
use crate::error::{Error, Result};

/// Windows of `N` rows with lookback `T` and horizon `S`: `N − T − S + 1`, or 0.
pub fn window_count(n: usize, lookback: usize, horizon: usize) -> usize {
    (n + 1).saturating_sub(lookback + horizon)
}

/// Window start rows, stride 1, never crossing a segment boundary, in time order.
pub fn window_starts(series: &RawSeries, lookback: usize, horizon: usize) -> Vec<usize> {
    series
        .segments
        .iter()
        .flat_map(|seg| seg.start..seg.start + window_count(seg.len(), lookback, horizon))
        .collect()
}

/// Chronological split sizes: the first `⌊n · frac⌋` windows train.
pub fn split_point(n_windows: usize, frac: f64) -> usize {
    ((n_windows as f64) * frac).floor() as usize
}

/// Where the raw series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Lorenz(LorenzParams),
    Surrogate(SurrogateParams),
    Csv {
        path: PathBuf,
        /// Defaults to the turbine layout.
        #[serde(default)]
        schema: Option<CsvSchema>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: Source,
    pub lookback: usize,
    pub horizon: usize,
    #[serde(default = "default_split")]
    pub split: f64,
    /// Channel name forecast alone; all channels when absent.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub normalization: NormMode,
}

fn default_split() -> f64 {
    0.75
}

impl DatasetSpec {
    pub fn new(source: Source, lookback: usize, horizon: usize) -> Self {
        Self {
            source,
            lookback,
            horizon,
            split: default_split(),
            target: None,
            normalization: NormMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::Config("lookback and horizon must be positive".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::Config(format!("split must be in (0, 1), got {}", self.split)));
        }
        Ok(())
    }

    pub fn load_series(&self) -> Result<RawSeries> {
        match &self.source {
            Source::Lorenz(p) => lorenz_generate(p),
            Source::Surrogate(p) => surrogate_generate(p),
            Source::Csv { path, schema } => {
                let schema = schema.clone().unwrap_or_else(CsvSchema::turbine);
                ingest_csv(path, &schema)
            }
        }
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    /// `T × C`
    pub x: Tensor,
    /// `S × C`, or `S × 1` in target mode.
    pub y: Tensor,
}

/// Normalised series plus window layout. Windows are materialised on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub series: RawSeries,
    pub normalizer: Normalizer,
    pub lookback: usize,
    pub horizon: usize,
    pub target: Option<usize>,
    pub starts: Vec<usize>,
    pub n_train: usize,
    /// Cells clamped into [0, 1] because they fell outside the training range.
    pub clamped: usize,
}

impl Dataset {
    pub fn channels(&self) -> usize {
        self.series.channels()
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn train_range(&self) -> Range<usize> {
        0..self.n_train
    }

    pub fn val_range(&self) -> Range<usize> {
        self.n_train..self.starts.len()
    }

    pub fn output_channels(&self) -> usize {
        if self.target.is_some() {
            1
        } else {
            self.channels()
        }
    }

    fn rows(&self, from: usize, count: usize, cols: &[usize]) -> Tensor {
        let data = self.series.values[from..from + count]
            .iter()
            .flat_map(|r| cols.iter().map(move |&c| r[c]))
            .collect();
        Tensor::new(count, cols.len(), data).expect("sized")
    }

    pub fn input(&self, i: usize) -> Tensor {
        let all: Vec<usize> = (0..self.channels()).collect();
        self.rows(self.starts[i], self.lookback, &all)
    }

    pub fn target(&self, i: usize) -> Tensor {
        let cols: Vec<usize> = match self.target {
            Some(t) => vec![t],
            None => (0..self.channels()).collect(),
        };
        self.rows(self.starts[i] + self.lookback, self.horizon, &cols)
    }

    pub fn window(&self, i: usize) -> Window {
        Window {
            x: self.input(i),
            y: self.target(i),
        }
    }

    /// Writes the dataset as JSON.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let doc = CachedDataset {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            dataset: self.clone(),
        };
        fs::write(path, serde_json::to_vec(&doc)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read(path).map_err(|e| Error::io(path, e))?;
        let doc: CachedDataset = serde_json::from_slice(&text)?;
        if doc.format != DATASET_FORMAT || doc.version != DATASET_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported dataset cache {} v{}",
                path.display(),
                doc.format,
                doc.version
            )));
        }
        Ok(doc.dataset)
    }
}

const DATASET_FORMAT: &str = "qforecast-dataset";
const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CachedDataset {
    format: String,
    version: u32,
    dataset: Dataset,
}

/// Windows the series, splits chronologically, fits the normaliser on the
/// rows touched by training windows and normalises everything with it.
pub fn make_windows(
    series: &RawSeries,
    lookback: usize,
    horizon: usize,
    target: Option<usize>,
    split: f64,
    mode: NormMode,
) -> Result<Dataset> {
    if let Some(t) = target {
        if t >= series.channels() {
            return Err(Error::Config(format!("target channel {t} out of range")));
        }
    }
    let starts = window_starts(series, lookback, horizon);
    if starts.is_empty() {
        return Err(Error::Data(format!(
            "no segment is long enough for lookback {lookback} + horizon {horizon} (longest {})",
            series.segments.iter().map(|s| s.len()).max().unwrap_or(0)
        )));
    }
    let n_train = split_point(starts.len(), split);
    if n_train == 0 || n_train == starts.len() {
        return Err(Error::Data(format!(
            "split {split} of {} windows leaves an empty side",
            starts.len()
        )));
    }
    let mut in_train = vec![false; series.len()];
    for &s in &starts[..n_train] {
        in_train[s..s + lookback + horizon].iter_mut().for_each(|f| *f = true);
    }
    let fit_rows = series
        .values
        .iter()
        .zip(&in_train)
        .filter(|(_, f)| **f)
        .map(|(r, _)| r.as_slice());
    let normalizer = Normalizer::fit(mode, fit_rows, &series.channel_names)?;
    let mut normed = series.clone();
    let mut clamped = 0;
    for seg in &series.segments {
        for row in &mut normed.values[seg.clone()] {
            clamped += normalizer.apply_row(row);
        }
    }
    if clamped > 0 {
        log::info!("clamped {clamped} normalised value(s) outside the training range");
    }
    Ok(Dataset {
        series: normed,
        normalizer,
        lookback,
        horizon,
        target,
        starts,
        n_train,
        clamped,
    })
}

pub fn build_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let series = spec.load_series()?;
    let target = spec
        .target
        .as_ref()
        .map(|name| {
            series
                .channel_index(name)
                .ok_or_else(|| Error::Config(format!("target channel '{name}' not in {:?}", series.channel_names)))
        })
        .transpose()?;
    make_windows(&series, spec.lookback, spec.horizon, target, spec.split, spec.normalization)
}
