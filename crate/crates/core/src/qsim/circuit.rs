use serde::{Deserialize, Serialize};

use super::gate::{self, Gate, GateKind};
use super::state::StateVector;
use crate::error::{Error, Result};

/// Role of a circuit parameter slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotKind {
    Encoding,
    Trainable,
}

/// Ordered gate list over symbolic parameter slots.
///
/// Every slot is referenced by exactly one rotation gate; slots are created
/// together with the gate that consumes them, so the invariant holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    slots: Vec<SlotKind>,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > super::MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        Ok(Self {
            n_qubits,
            gates: Vec::new(),
            slots: Vec::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn slots(&self) -> &[SlotKind] {
        &self.slots
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn count_slots(&self, kind: SlotKind) -> usize {
        self.slots.iter().filter(|&&k| k == kind).count()
    }

    pub fn count_gates(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Adds a rotation with a fresh slot and returns the slot index.
    pub fn rotation(&mut self, kind: GateKind, qubit: usize, slot_kind: SlotKind) -> Result<usize> {
        if !kind.is_rotation() {
            return Err(Error::InvalidGate(format!("{kind:?} is not a rotation")));
        }
        let slot = self.slots.len();
        let g = Gate::rotation(kind, qubit, slot);
        g.validate(self.n_qubits)?;
        self.gates.push(g);
        self.slots.push(slot_kind);
        Ok(slot)
    }

    pub fn h(&mut self, qubit: usize) -> Result<()> {
        self.push_fixed(Gate::h(qubit))
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.push_fixed(Gate::cnot(control, target))
    }

    fn push_fixed(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n_qubits)?;
        self.gates.push(g);
        Ok(())
    }

    /// Appends `other`, renumbering its slots after the existing ones.
    /// Returns the slot offset applied to `other`.
    pub fn append(&mut self, other: &ParamCircuit) -> Result<usize> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::shape(
                "ParamCircuit::append",
                format!("{} vs {} qubits", self.n_qubits, other.n_qubits),
            ));
        }
        let offset = self.slots.len();
        self.slots.extend_from_slice(&other.slots);
        self.gates.extend(other.gates.iter().map(|g| Gate {
            slot: g.slot.map(|s| s + offset),
            ..*g
        }));
        Ok(offset)
    }

    /// Runs the circuit on a copy of `initial`.
    pub fn run(&self, bindings: &[f64], initial: &StateVector) -> Result<StateVector> {
        let mut state = initial.clone();
        self.run_in_place(bindings, &mut state)?;
        Ok(state)
    }

    pub fn run_in_place(&self, bindings: &[f64], state: &mut StateVector) -> Result<()> {
        if bindings.len() != self.slots.len() {
            return Err(Error::BindingLength {
                expected: self.slots.len(),
                got: bindings.len(),
            });
        }
        if state.n_qubits() != self.n_qubits {
            return Err(Error::shape(
                "ParamCircuit::run",
                format!("circuit has {} qubits, state {}", self.n_qubits, state.n_qubits()),
            ));
        }
        for g in &self.gates {
            let angle = g.slot.map_or(0.0, |s| bindings[s]);
            gate::apply_unchecked(state, g, angle);
        }
        Ok(())
    }
}
