use serde::{Deserialize, Serialize};

use super::RawSeries;
use crate::error::{Error, Result};

/// Lorenz system parameters and integration settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzParams {
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_x0")]
    pub x0: [f64; 3],
}

fn default_points() -> usize {
    1000
}
fn default_dt() -> f64 {
    0.01
}
fn default_sigma() -> f64 {
    10.0
}
fn default_rho() -> f64 {
    28.0
}
fn default_beta() -> f64 {
    8.0 / 3.0
}
fn default_x0() -> [f64; 3] {
    [0.0, -0.01, 9.0]
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            n_points: default_points(),
            dt: default_dt(),
            sigma: default_sigma(),
            rho: default_rho(),
            beta: default_beta(),
            x0: default_x0(),
        }
    }
}

/// One forward-Euler step.
pub fn lorenz_step(p: &LorenzParams, [x, y, z]: [f64; 3]) -> [f64; 3] {
    [
        x + p.dt * p.sigma * (y - x),
        y + p.dt * (-y - z * x + p.rho * x),
        z + p.dt * (-p.beta * z + x * y),
    ]
}

/// `n_points` rows, the first being `x0`. Channels are named `x`, `y`, `z`.
pub fn lorenz_generate(p: &LorenzParams) -> Result<RawSeries> {
    if p.n_points < 2 {
        return Err(Error::Config(format!("need at least 2 points, got {}", p.n_points)));
    }
    if !(p.dt > 0.0 && p.dt.is_finite()) {
        return Err(Error::Config(format!("dt must be positive, got {}", p.dt)));
    }
    let mut rows = Vec::with_capacity(p.n_points);
    let mut s = p.x0;
    rows.push(s.to_vec());
    for i in 1..p.n_points {
        s = lorenz_step(p, s);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("Lorenz state diverged at step {i}; reduce dt")));
        }
        rows.push(s.to_vec());
    }
    RawSeries::dense(vec!["x".into(), "y".into(), "z".into()], rows)
}
