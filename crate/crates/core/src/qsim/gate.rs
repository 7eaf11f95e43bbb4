use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Cnot,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

/// A gate acting on one target qubit, optionally controlled, optionally bound
/// to a circuit parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
    pub slot: Option<usize>,
}

impl Gate {
    pub fn rotation(kind: GateKind, target: usize, slot: usize) -> Self {
        debug_assert!(kind.is_rotation());
        Self {
            kind,
            target,
            control: None,
            slot: Some(slot),
        }
    }

    pub fn rx(target: usize, slot: usize) -> Self {
        Self::rotation(GateKind::Rx, target, slot)
    }

    pub fn ry(target: usize, slot: usize) -> Self {
        Self::rotation(GateKind::Ry, target, slot)
    }

    pub fn rz(target: usize, slot: usize) -> Self {
        Self::rotation(GateKind::Rz, target, slot)
    }

    pub fn h(target: usize) -> Self {
        Self {
            kind: GateKind::H,
            target,
            control: None,
            slot: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            target,
            control: Some(control),
            slot: None,
        }
    }

    /// Checks structural validity against a register size.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let check = |q: usize| {
            if q >= n_qubits {
                Err(Error::QubitIndex { index: q, n_qubits })
            } else {
                Ok(())
            }
        };
        check(self.target)?;
        match (self.kind, self.control) {
            (GateKind::Cnot, Some(c)) => {
                check(c)?;
                if c == self.target {
                    return Err(Error::InvalidGate(format!(
                        "CNOT control and target are both qubit {c}"
                    )));
                }
            }
            (GateKind::Cnot, None) => {
                return Err(Error::InvalidGate("CNOT without control".into()));
            }
            (_, Some(_)) => {
                return Err(Error::InvalidGate(format!("{:?} cannot be controlled", self.kind)));
            }
            _ => {}
        }
        if self.kind.is_rotation() != self.slot.is_some() {
            return Err(Error::InvalidGate(format!(
                "{:?} slot presence must match rotation kind",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Applies `gate` in place. Rotations take their angle in radians.
pub fn apply_in_place(state: &mut StateVector, gate: &Gate, angle: Option<f64>) -> Result<()> {
    gate.validate(state.n_qubits())?;
    match (gate.kind.is_rotation(), angle) {
        (true, None) => {
            return Err(Error::InvalidGate(format!("{:?} requires an angle", gate.kind)))
        }
        (false, Some(_)) => {
            return Err(Error::InvalidGate(format!("{:?} takes no angle", gate.kind)))
        }
        _ => {}
    }
    apply_unchecked(state, gate, angle.unwrap_or(0.0));
    Ok(())
}

/// Functional form of [`apply_in_place`].
pub fn apply_gate(state: &StateVector, gate: &Gate, angle: Option<f64>) -> Result<StateVector> {
    let mut out = state.clone();
    apply_in_place(&mut out, gate, angle)?;
    Ok(out)
}

/// Applies a pre-validated gate. `angle` is ignored for non-rotations.
pub(crate) fn apply_unchecked(state: &mut StateVector, gate: &Gate, angle: f64) {
    let q = gate.target;
    match gate.kind {
        GateKind::Rx => {
            let (s, c) = (angle / 2.0).sin_cos();
            let ci = Complex64::new(c, 0.0);
            let ms = Complex64::new(0.0, -s);
            state.apply_single(q, [[ci, ms], [ms, ci]]);
        }
        GateKind::Ry => {
            let (s, c) = (angle / 2.0).sin_cos();
            state.apply_single_real(q, [[c, -s], [s, c]]);
        }
        GateKind::Rz => {
            let (s, c) = (angle / 2.0).sin_cos();
            state.apply_diag(q, Complex64::new(c, -s), Complex64::new(c, s));
        }
        GateKind::H => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            state.apply_single_real(q, [[h, h], [h, -h]]);
        }
        GateKind::Cnot => {
            state.apply_cnot_unchecked(gate.control.expect("validated CNOT"), q);
        }
    }
}

/// Applies the inverse of a pre-validated gate.
pub(crate) fn apply_inverse_unchecked(state: &mut StateVector, gate: &Gate, angle: f64) {
    if gate.kind.is_rotation() {
        apply_unchecked(state, gate, -angle);
    } else {
        apply_unchecked(state, gate, 0.0);
    }
}

/// Applies the rotation generator (X, Y or Z) of a rotation gate.
pub(crate) fn apply_generator(state: &mut StateVector, gate: &Gate) {
    match gate.kind {
        GateKind::Rx => state.apply_x_unchecked(gate.target),
        GateKind::Ry => state.apply_y_unchecked(gate.target),
        GateKind::Rz => state.apply_z_unchecked(gate.target),
        _ => unreachable!("generator requested for non-rotation gate"),
    }
}
