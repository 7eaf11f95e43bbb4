use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Training range mapped to [0, 1]; other values clamped into it.
    #[default]
    Minmax01,
    /// Zero mean, unit population variance on the training range.
    Standardize,
}

/// Per-channel affine map `(v − shift) / scale`, fit on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mode: NormMode,
    /// `min` or `μ` per channel.
    pub shift: Vec<f64>,
    /// `max − min` or `σ` per channel.
    pub scale: Vec<f64>,
}

impl Normalizer {
    /// Fits on `rows`, each a full channel vector.
    pub fn fit<'a>(mode: NormMode, rows: impl IntoIterator<Item = &'a [f64]>, names: &[String]) -> Result<Self> {
        let c = names.len();
        let mut n = 0usize;
        let mut lo = vec![f64::INFINITY; c];
        let mut hi = vec![f64::NEG_INFINITY; c];
        let mut sum = vec![0.0; c];
        let mut sq = vec![0.0; c];
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        for r in &rows {
            n += 1;
            for (j, &v) in r.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
                sum[j] += v;
            }
        }
        if n == 0 {
            return Err(Error::Data("normalisation fit range is empty".into()));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        for r in &rows {
            for (j, &v) in r.iter().enumerate() {
                sq[j] += (v - mean[j]).powi(2);
            }
        }
        let (shift, scale) = match mode {
            NormMode::Minmax01 => (lo.clone(), lo.iter().zip(&hi).map(|(a, b)| b - a).collect::<Vec<_>>()),
            NormMode::Standardize => (mean, sq.iter().map(|s| (s / n as f64).sqrt()).collect()),
        };
        if let Some(j) = scale.iter().position(|s| *s == 0.0 || !s.is_finite()) {
            return Err(Error::Data(format!(
                "channel '{}' is constant over the training range and cannot be normalised",
                names[j]
            )));
        }
        Ok(Self { mode, shift, scale })
    }

    pub fn channels(&self) -> usize {
        self.shift.len()
    }

    /// Normalised value and whether it had to be clamped.
    pub fn apply_value(&self, c: usize, v: f64) -> (f64, bool) {
        let u = (v - self.shift[c]) / self.scale[c];
        match self.mode {
            NormMode::Minmax01 if !(0.0..=1.0).contains(&u) => (u.clamp(0.0, 1.0), true),
            _ => (u, false),
        }
    }

    /// Normalises a row in place, returning the number of clamped cells.
    pub fn apply_row(&self, row: &mut [f64]) -> usize {
        let mut clamped = 0;
        for (c, v) in row.iter_mut().enumerate() {
            let (u, hit) = self.apply_value(c, *v);
            *v = u;
            clamped += hit as usize;
        }
        clamped
    }

    pub fn invert_value(&self, c: usize, u: f64) -> f64 {
        u * self.scale[c] + self.shift[c]
    }

    pub fn invert_row(&self, row: &mut [f64]) {
        for (c, v) in row.iter_mut().enumerate() {
            *v = self.invert_value(c, *v);
        }
    }
}
