//! Quantum and hybrid quantum-classical models for multivariate time-series
//! forecasting, built on an exact statevector simulator and a small
//! reverse-mode autodiff tape.

pub mod error;
pub mod qsim;

pub use error::{Error, Result};
pub mod diff;
pub mod models;
pub mod data;
pub mod train;
