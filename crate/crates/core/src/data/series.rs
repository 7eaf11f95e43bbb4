use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equidistant multichannel series. Rows outside `segments` are unusable
/// (excluded records or gaps too long to interpolate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub channel_names: Vec<String>,
    /// `N` rows of `C` values.
    pub values: Vec<Vec<f64>>,
    /// Per-cell flag: `true` if the value was observed, `false` if it was
    /// interpolated or belongs to an excluded row.
    pub mask: Vec<Vec<bool>>,
    /// Disjoint, increasing row ranges of usable data.
    pub segments: Vec<Range<usize>>,
}

impl RawSeries {
    /// Fully observed series with a single segment.
    pub fn dense(channel_names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let c = channel_names.len();
        if let Some((i, row)) = values.iter().enumerate().find(|(_, r)| r.len() != c) {
            return Err(Error::Data(format!("row {i} has {} values, expected {c}", row.len())));
        }
        let n = values.len();
        Ok(Self {
            channel_names,
            mask: vec![vec![true; c]; n],
            values,
            segments: if n > 0 { vec![0..n] } else { Vec::new() },
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channel_names.iter().position(|n| n == name)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[c]).collect()
    }

    pub fn usable_rows(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }
}
