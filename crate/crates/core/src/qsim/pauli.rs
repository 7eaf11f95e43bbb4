use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// Tensor product of single-qubit Paulis, identity on unlisted qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PauliString {
    // sorted by qubit, at most one factor per qubit
    factors: Vec<(usize, Pauli)>,
}

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, p: Pauli) -> Self {
        Self {
            factors: vec![(qubit, p)],
        }
    }

    pub fn x(qubit: usize) -> Self {
        Self::single(qubit, Pauli::X)
    }

    pub fn y(qubit: usize) -> Self {
        Self::single(qubit, Pauli::Y)
    }

    pub fn z(qubit: usize) -> Self {
        Self::single(qubit, Pauli::Z)
    }

    /// Z_i ⊗ Z_j.
    pub fn zz(i: usize, j: usize) -> Self {
        Self::single(i, Pauli::Z).with(j, Pauli::Z)
    }

    /// Sets the factor on `qubit`, replacing any previous one.
    pub fn with(mut self, qubit: usize, p: Pauli) -> Self {
        match self.factors.binary_search_by_key(&qubit, |&(q, _)| q) {
            Ok(pos) => self.factors[pos].1 = p,
            Err(pos) => self.factors.insert(pos, (qubit, p)),
        }
        self
    }

    pub fn factors(&self) -> &[(usize, Pauli)] {
        &self.factors
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.factors.last().map(|&(q, _)| q)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match self.max_qubit() {
            Some(q) if q >= n_qubits => Err(Error::QubitIndex { index: q, n_qubits }),
            _ => Ok(()),
        }
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut n_y = 0u32;
        for &(q, p) in &self.factors {
            let m = 1usize << q;
            match p {
                Pauli::X => flip |= m,
                Pauli::Y => {
                    flip |= m;
                    sign |= m;
                    n_y += 1;
                }
                Pauli::Z => sign |= m,
            }
        }
        (flip, sign, n_y)
    }

    /// Returns P|ψ⟩.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.validate(state.n_qubits())?;
        let mut out = state.clone();
        self.apply_unchecked(&mut out);
        Ok(out)
    }

    pub(crate) fn apply_unchecked(&self, state: &mut StateVector) {
        for &(q, p) in &self.factors {
            match p {
                Pauli::X => state.apply_x_unchecked(q),
                Pauli::Y => state.apply_y_unchecked(q),
                Pauli::Z => state.apply_z_unchecked(q),
            }
        }
    }

    pub(crate) fn expectation_unchecked(&self, state: &StateVector) -> f64 {
        let (flip, sign, n_y) = self.masks();
        let amps = state.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &a) in amps.iter().enumerate() {
            let b = amps[i ^ flip];
            let term = b.conj() * a;
            if (i & sign).count_ones() % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        // global factor i^{n_y}
        let acc = match n_y % 4 {
            0 => acc,
            1 => Complex64::new(-acc.im, acc.re),
            2 => -acc,
            _ => Complex64::new(acc.im, -acc.re),
        };
        debug_assert!(acc.im.abs() < 1e-9, "non-real Pauli expectation {acc}");
        acc.re
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "I");
        }
        for (k, (q, p)) in self.factors.iter().enumerate() {
            if k > 0 {
                write!(f, "⊗")?;
            }
            write!(f, "{p:?}{q}")?;
        }
        Ok(())
    }
}

/// ⟨ψ|P|ψ⟩ for a normalised state. Always real for Hermitian P.
pub fn expectation(state: &StateVector, obs: &PauliString) -> Result<f64> {
    obs.validate(state.n_qubits())?;
    Ok(obs.expectation_unchecked(state))
}
