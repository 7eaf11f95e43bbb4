//! Circuits as differentiable tape nodes.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::tape::{CustomOp, Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::qsim::{self, Basis, ParamCircuit, PauliString, StateVector};

/// How circuit gradients are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMethod {
    /// Reverse sweep through the circuit, one forward and one backward pass.
    #[default]
    Adjoint,
    /// Two shifted circuit evaluations per slot.
    ParameterShift,
}

/// Where a circuit slot takes its angle from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SlotSource {
    /// `scale * inputs[index]`
    Input { index: usize, scale: f64 },
    /// `params[index]`
    Param(usize),
}

/// A circuit plus measured observables, with every slot bound either to an
/// element of the input tensor or to an element of the parameter tensor.
/// The same input element may feed several slots.
#[derive(Debug, Clone)]
pub struct QuantumNode {
    circuit: ParamCircuit,
    observables: Vec<PauliString>,
    initial: Basis,
    sources: Vec<SlotSource>,
    n_inputs: usize,
    n_params: usize,
}

impl QuantumNode {
    pub fn new(
        circuit: ParamCircuit,
        observables: Vec<PauliString>,
        initial: Basis,
        sources: Vec<SlotSource>,
        n_inputs: usize,
        n_params: usize,
    ) -> Result<Self> {
        if sources.len() != circuit.slot_count() {
            return Err(Error::Config(format!(
                "slot mapping covers {} of {} circuit slots",
                sources.len(),
                circuit.slot_count()
            )));
        }
        for s in &sources {
            match *s {
                SlotSource::Input { index, .. } if index >= n_inputs => {
                    return Err(Error::Config(format!("input index {index} out of {n_inputs}")))
                }
                SlotSource::Param(index) if index >= n_params => {
                    return Err(Error::Config(format!("param index {index} out of {n_params}")))
                }
                _ => {}
            }
        }
        if observables.is_empty() {
            return Err(Error::Config("quantum node needs at least one observable".into()));
        }
        for o in &observables {
            o.validate(circuit.n_qubits())?;
        }
        Ok(Self {
            circuit,
            observables,
            initial,
            sources,
            n_inputs,
            n_params,
        })
    }

    /// Inputs first (in slot order of `input_slots`), trainable params after.
    /// Convenience for the common "encoding circuit then variational circuit"
    /// layout where slot `k` of the encoding part reads input `k` times `scale`.
    pub fn encode_then_train(
        circuit: ParamCircuit,
        observables: Vec<PauliString>,
        initial: Basis,
        input_scale: f64,
    ) -> Result<Self> {
        let mut n_in = 0;
        let mut n_par = 0;
        let sources = circuit
            .slots()
            .iter()
            .map(|k| match k {
                qsim::SlotKind::Encoding => {
                    n_in += 1;
                    SlotSource::Input {
                        index: n_in - 1,
                        scale: input_scale,
                    }
                }
                qsim::SlotKind::Trainable => {
                    n_par += 1;
                    SlotSource::Param(n_par - 1)
                }
            })
            .collect();
        Self::new(circuit, observables, initial, sources, n_in, n_par)
    }

    pub fn circuit(&self) -> &ParamCircuit {
        &self.circuit
    }

    pub fn observables(&self) -> &[PauliString] {
        &self.observables
    }

    pub fn sources(&self) -> &[SlotSource] {
        &self.sources
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn check_lengths(&self, inputs: &[f64], params: &[f64]) -> Result<()> {
        if inputs.len() != self.n_inputs || params.len() != self.n_params {
            return Err(Error::shape(
                "quantum node",
                format!(
                    "expected {} inputs / {} params, got {} / {}",
                    self.n_inputs,
                    self.n_params,
                    inputs.len(),
                    params.len()
                ),
            ));
        }
        Ok(())
    }

    /// Slot angles for the given inputs and parameters.
    pub fn bindings(&self, inputs: &[f64], params: &[f64]) -> Result<Vec<f64>> {
        self.check_lengths(inputs, params)?;
        Ok(self
            .sources
            .iter()
            .map(|s| match *s {
                SlotSource::Input { index, scale } => scale * inputs[index],
                SlotSource::Param(i) => params[i],
            })
            .collect())
    }

    fn prepare(&self, bindings: &[f64]) -> Result<StateVector> {
        let mut state = StateVector::new(self.circuit.n_qubits(), self.initial)?;
        self.circuit.run_in_place(bindings, &mut state)?;
        Ok(state)
    }

    fn measure(&self, state: &StateVector) -> Vec<f64> {
        self.observables
            .iter()
            .map(|o| o.expectation_unchecked(state))
            .collect()
    }

    /// Expectation of every observable on the bound circuit.
    pub fn forward(&self, inputs: &[f64], params: &[f64]) -> Result<Vec<f64>> {
        let b = self.bindings(inputs, params)?;
        Ok(self.measure(&self.prepare(&b)?))
    }

    /// Gradient of `Σ_j upstream[j] ⟨P_j⟩` with respect to each circuit slot.
    /// Slots with `wanted[s] == false` are reported as zero.
    pub fn slot_gradients(
        &self,
        bindings: &[f64],
        upstream: &[f64],
        method: GradMethod,
        wanted: &[bool],
    ) -> Result<Vec<f64>> {
        if upstream.len() != self.observables.len() {
            return Err(Error::shape(
                "quantum backward",
                format!("{} upstream values for {} observables", upstream.len(), self.observables.len()),
            ));
        }
        match method {
            GradMethod::ParameterShift => self.parameter_shift(bindings, upstream, wanted),
            GradMethod::Adjoint => self.adjoint(bindings, upstream, wanted),
        }
    }

    fn weighted(&self, state: &StateVector, upstream: &[f64]) -> f64 {
        self.observables
            .iter()
            .zip(upstream)
            .filter(|(_, &u)| u != 0.0)
            .map(|(o, &u)| u * o.expectation_unchecked(state))
            .sum()
    }

    fn parameter_shift(&self, bindings: &[f64], upstream: &[f64], wanted: &[bool]) -> Result<Vec<f64>> {
        let mut shifted = bindings.to_vec();
        let mut grads = vec![0.0; bindings.len()];
        for s in 0..bindings.len() {
            if !wanted[s] {
                continue;
            }
            shifted[s] = bindings[s] + FRAC_PI_2;
            let plus = self.weighted(&self.prepare(&shifted)?, upstream);
            shifted[s] = bindings[s] - FRAC_PI_2;
            let minus = self.weighted(&self.prepare(&shifted)?, upstream);
            shifted[s] = bindings[s];
            grads[s] = 0.5 * (plus - minus);
        }
        Ok(grads)
    }

    fn adjoint(&self, bindings: &[f64], upstream: &[f64], wanted: &[bool]) -> Result<Vec<f64>> {
        let mut psi = self.prepare(bindings)?;
        // λ = M|ψ⟩ with M = Σ_j u_j P_j
        let mut lambda = psi.zeros_like();
        for (o, &u) in self.observables.iter().zip(upstream) {
            if u != 0.0 {
                let mut t = psi.clone();
                o.apply_unchecked(&mut t);
                lambda.scale_add(u, &t);
            }
        }
        let mut grads = vec![0.0; bindings.len()];
        let mut scratch = psi.clone();
        for gate in self.circuit.gates().iter().rev() {
            let angle = gate.slot.map_or(0.0, |s| bindings[s]);
            if let Some(s) = gate.slot {
                if wanted[s] {
                    scratch.amplitudes_mut().copy_from_slice(psi.amplitudes());
                    qsim::apply_generator(&mut scratch, gate);
                    grads[s] = lambda.inner(&scratch).im;
                }
            }
            qsim::apply_inverse_unchecked(&mut psi, gate, angle);
            qsim::apply_inverse_unchecked(&mut lambda, gate, angle);
        }
        Ok(grads)
    }

    /// Chains slot gradients back onto the input and parameter vectors.
    /// Re-used inputs accumulate the sum over their slots.
    pub fn backward(
        &self,
        inputs: &[f64],
        params: &[f64],
        upstream: &[f64],
        method: GradMethod,
        want_inputs: bool,
        want_params: bool,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let b = self.bindings(inputs, params)?;
        let wanted: Vec<bool> = self
            .sources
            .iter()
            .map(|s| match s {
                SlotSource::Input { .. } => want_inputs,
                SlotSource::Param(_) => want_params,
            })
            .collect();
        let g = self.slot_gradients(&b, upstream, method, &wanted)?;
        let mut gi = vec![0.0; self.n_inputs];
        let mut gp = vec![0.0; self.n_params];
        for (s, src) in self.sources.iter().enumerate() {
            match *src {
                SlotSource::Input { index, scale } => gi[index] += scale * g[s],
                SlotSource::Param(i) => gp[i] += g[s],
            }
        }
        Ok((gi, gp))
    }
}

struct QuantumOp {
    node: Arc<QuantumNode>,
    method: GradMethod,
}

impl CustomOp for QuantumOp {
    fn backward(
        &self,
        inputs: &[&Tensor],
        _output: &Tensor,
        upstream: &Tensor,
        needs_grad: &[bool],
    ) -> Vec<Option<Tensor>> {
        let (gi, gp) = self
            .node
            .backward(
                inputs[0].data(),
                inputs[1].data(),
                upstream.data(),
                self.method,
                needs_grad[0],
                needs_grad[1],
            )
            .expect("shapes validated at forward time");
        let reshape = |g: Vec<f64>, like: &Tensor| Tensor::new(like.rows(), like.cols(), g).expect("same length");
        vec![
            needs_grad[0].then(|| reshape(gi, inputs[0])),
            needs_grad[1].then(|| reshape(gp, inputs[1])),
        ]
    }
}

/// Records a circuit evaluation on the tape. Output is `1 × n_observables`.
pub fn quantum<'t>(
    tape: &'t Tape,
    node: &Arc<QuantumNode>,
    inputs: Var<'t>,
    params: Var<'t>,
    method: GradMethod,
) -> Result<Var<'t>> {
    let out = {
        let i = inputs.value();
        let p = params.value();
        node.forward(i.data(), p.data())?
    };
    let out = Tensor::row_vector(out);
    Ok(tape.custom(
        &[inputs, params],
        out,
        Box::new(QuantumOp {
            node: Arc::clone(node),
            method,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{build_ring_ansatz, GateKind, SlotKind};
    use std::f64::consts::PI;

    fn ry_node() -> QuantumNode {
        let mut c = ParamCircuit::new(1).unwrap();
        c.rotation(GateKind::Ry, 0, SlotKind::Trainable).unwrap();
        QuantumNode::new(c, vec![PauliString::z(0)], Basis::AllZero, vec![SlotSource::Param(0)], 0, 1).unwrap()
    }

    #[test]
    fn forward_cos_pi() {
        let mut c = ParamCircuit::new(1).unwrap();
        c.rotation(GateKind::Ry, 0, SlotKind::Encoding).unwrap();
        let node = QuantumNode::encode_then_train(c, vec![PauliString::z(0)], Basis::AllZero, 1.0).unwrap();
        let out = node.forward(&[PI], &[]).unwrap();
        assert!((out[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_ring_gives_ones() {
        let mut c = ParamCircuit::new(3).unwrap();
        crate::qsim::rotation_row(&mut c, GateKind::Ry, SlotKind::Encoding).unwrap();
        c.append(&build_ring_ansatz(3, 1).unwrap()).unwrap();
        let obs = (0..3).map(PauliString::z).collect();
        let node = QuantumNode::encode_then_train(c, obs, Basis::AllZero, 1.0).unwrap();
        let out = node.forward(&[0.0; 3], &[0.0; 9]).unwrap();
        for v in out {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_cos() {
        let node = ry_node();
        for method in [GradMethod::ParameterShift, GradMethod::Adjoint] {
            let (_, g) = node.backward(&[], &[PI / 2.0], &[1.0], method, false, true).unwrap();
            assert!((g[0] + 1.0).abs() < 1e-12, "{method:?}");
            let (_, g) = node.backward(&[], &[0.0], &[1.0], method, false, true).unwrap();
            assert!(g[0].abs() < 1e-12, "{method:?}");
        }
    }

    #[test]
    fn mapping_must_cover_all_slots() {
        let c = build_ring_ansatz(2, 1).unwrap();
        let err = QuantumNode::new(c, vec![PauliString::z(0)], Basis::AllZero, vec![SlotSource::Param(0)], 0, 1);
        assert!(err.is_err());
    }

    #[test]
    fn reused_input_sums_over_slots() {
        // two R_y gates reading the same input: ⟨Z⟩ = cos 2x, d/dx = −2 sin 2x
        let mut c = ParamCircuit::new(1).unwrap();
        c.rotation(GateKind::Ry, 0, SlotKind::Encoding).unwrap();
        c.rotation(GateKind::Ry, 0, SlotKind::Encoding).unwrap();
        let src = vec![
            SlotSource::Input { index: 0, scale: 1.0 },
            SlotSource::Input { index: 0, scale: 1.0 },
        ];
        let node = QuantumNode::new(c, vec![PauliString::z(0)], Basis::AllZero, src, 1, 0).unwrap();
        let x = 0.4;
        for method in [GradMethod::ParameterShift, GradMethod::Adjoint] {
            let (gi, _) = node.backward(&[x], &[], &[1.0], method, true, false).unwrap();
            assert!((gi[0] + 2.0 * (2.0 * x).sin()).abs() < 1e-12);
        }
    }
}
