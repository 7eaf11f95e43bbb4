//! Dense statevector simulation.
//!
//! Amplitude index bit `q` is qubit `q` (qubit 0 least significant). Rotations
//! use half-angle matrices, `R_a(θ) = exp(−iθσ_a/2)`. Expectations are exact.

mod ansatz;
mod circuit;
mod gate;
mod pauli;
mod state;

pub use ansatz::{
    build_qsann_ansatz, build_qsann_ansatz_with, build_ring_ansatz, cnot_ring, rotation_row,
};
pub use circuit::{ParamCircuit, SlotKind};
pub use gate::{apply_gate, apply_in_place, Gate, GateKind};
pub use pauli::{expectation, Pauli, PauliString};
pub use state::{Basis, StateVector, MAX_QUBITS};

pub(crate) use gate::{apply_generator, apply_inverse_unchecked};

/// Convenience: run `circuit` from a product `basis` state.
pub fn run_circuit(circuit: &ParamCircuit, bindings: &[f64], initial: &StateVector) -> crate::Result<StateVector> {
    circuit.run(bindings, initial)
}
