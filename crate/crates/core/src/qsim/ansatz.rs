//! Reusable circuit templates.

use super::circuit::{ParamCircuit, SlotKind};
use super::gate::GateKind;
use crate::error::{Error, Result};

/// CNOT ring: qubit i controls i+1, the last qubit controls qubit 0.
pub fn cnot_ring(circuit: &mut ParamCircuit) -> Result<()> {
    let n = circuit.n_qubits();
    if n < 2 {
        return Err(Error::Config(format!("a CNOT ring needs at least 2 qubits, got {n}")));
    }
    for q in 0..n {
        circuit.cnot(q, (q + 1) % n)?;
    }
    Ok(())
}

/// One rotation per qubit, all of the same kind.
pub fn rotation_row(circuit: &mut ParamCircuit, kind: GateKind, slot_kind: SlotKind) -> Result<()> {
    for q in 0..circuit.n_qubits() {
        circuit.rotation(kind, q, slot_kind)?;
    }
    Ok(())
}

/// Generic VQC block: per layer, R_z R_y R_z on every qubit followed by a
/// CNOT ring, repeated `depth` times. `3 * n_qubits * depth` trainable slots.
pub fn build_ring_ansatz(n_qubits: usize, depth: usize) -> Result<ParamCircuit> {
    if n_qubits < 2 {
        return Err(Error::Config(format!("ring ansatz needs at least 2 qubits, got {n_qubits}")));
    }
    if depth == 0 {
        return Err(Error::Config("ring ansatz depth must be at least 1".into()));
    }
    let mut c = ParamCircuit::new(n_qubits)?;
    for _ in 0..depth {
        for q in 0..n_qubits {
            c.rotation(GateKind::Rz, q, SlotKind::Trainable)?;
            c.rotation(GateKind::Ry, q, SlotKind::Trainable)?;
            c.rotation(GateKind::Rz, q, SlotKind::Trainable)?;
        }
        cnot_ring(&mut c)?;
    }
    Ok(c)
}

/// Self-attention ansatz with trainable slots. See [`build_qsann_ansatz_with`].
pub fn build_qsann_ansatz(n_qubits: usize, depth: usize) -> Result<ParamCircuit> {
    build_qsann_ansatz_with(n_qubits, depth, SlotKind::Trainable)
}

/// R_x row, R_y row, then `depth` repetitions of [CNOT ring, R_y row].
/// Produces `n_qubits * (depth + 2)` slots, all of `slot_kind`, in gate order.
pub fn build_qsann_ansatz_with(
    n_qubits: usize,
    depth: usize,
    slot_kind: SlotKind,
) -> Result<ParamCircuit> {
    if n_qubits < 2 {
        return Err(Error::Config(format!(
            "self-attention ansatz needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if depth == 0 {
        return Err(Error::Config("self-attention ansatz depth must be at least 1".into()));
    }
    let mut c = ParamCircuit::new(n_qubits)?;
    rotation_row(&mut c, GateKind::Rx, slot_kind)?;
    rotation_row(&mut c, GateKind::Ry, slot_kind)?;
    for _ in 0..depth {
        cnot_ring(&mut c)?;
        rotation_row(&mut c, GateKind::Ry, slot_kind)?;
    }
    Ok(c)
}
