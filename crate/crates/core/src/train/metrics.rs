use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Guard added to `|target|` in the MAPE denominator.
pub const MAPE_EPS: f64 = 1e-8;

fn same_len(op: &'static str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::shape(op, format!("{} predictions vs {} targets", a.len(), b.len())));
    }
    Ok(())
}

/// Mean of squared differences.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    same_len("mse", pred, target)?;
    if pred.is_empty() {
        return Err(Error::shape("mse", "empty input".to_string()));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

/// Forecast error metrics. MAPE is a fraction, not a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub mape: f64,
    pub mae: f64,
    pub rmse: f64,
}

pub fn metrics(pred: &[f64], target: &[f64]) -> Result<Metrics> {
    let mut acc = MetricsAccumulator::default();
    acc.push(pred, target)?;
    acc.finish()
}

/// Streams prediction/target pairs and yields [`Metrics`] over all of them.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    n: usize,
    abs: f64,
    sq: f64,
    pct: f64,
}

impl MetricsAccumulator {
    pub fn push(&mut self, pred: &[f64], target: &[f64]) -> Result<()> {
        same_len("metrics", pred, target)?;
        for (p, t) in pred.iter().zip(target) {
            let d = (p - t).abs();
            self.n += 1;
            self.abs += d;
            self.sq += d * d;
            self.pct += d / (t.abs() + MAPE_EPS);
        }
        Ok(())
    }

    /// Mean squared error so far.
    pub fn mse(&self) -> f64 {
        self.sq / self.n as f64
    }

    pub fn finish(&self) -> Result<Metrics> {
        if self.n == 0 {
            return Err(Error::shape("metrics", "empty input".to_string()));
        }
        let n = self.n as f64;
        Ok(Metrics {
            mape: self.pct / n,
            mae: self.abs / n,
            rmse: (self.sq / n).sqrt(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse_loss(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 2.5);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn metric_examples() {
        assert_eq!(metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), Metrics::default());
        let m = metrics(&[1.1, 0.9, 1.1], &[1.0, 1.0, 1.0]).unwrap();
        assert!((m.mape - 0.1).abs() < 1e-7 && (m.mae - 0.1).abs() < 1e-12 && (m.rmse - 0.1).abs() < 1e-12);
        let m = metrics(&[1.1, 1.3], &[1.0, 1.0]).unwrap();
        assert!((m.mae - 0.2).abs() < 1e-12);
        assert!((m.rmse - 0.05f64.sqrt()).abs() < 1e-12);
        assert!((m.rmse - 0.2236).abs() < 1e-4);
    }
}
