//! Quantum self-attention over variate tokens.
//!
//! Each token `h_c ∈ ℝ^D` is loaded into `n` qubits as `U_enc(h_c) H^⊗n |0ⁿ⟩`,
//! where the `D = n(p_enc + 2)` token values fill the encoding ansatz slots
//! in gate order as raw radians. Three trainable circuits follow: queries and
//! keys read ⟨Z₀⟩, values read `D` Pauli expectations. Coefficients come from
//! a Gaussian kernel on query-key differences, normalised per row.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::params::{ParamId, ParamStore};
use crate::diff::{quantum, stack_rows, GradMethod, QuantumNode, Tensor, Var};
use crate::error::{Error, Result};
use crate::qsim::{build_qsann_ansatz_with, Basis, ParamCircuit, PauliString, SlotKind};

/// Value observables for `D` outputs on `n` qubits: `X_i, Y_i, Z_i` per qubit
/// in qubit order, then `Z_i Z_{i+1}` around the ring until `D` is reached.
pub fn value_observable_set(n_qubits: usize, d: usize) -> Result<Vec<PauliString>> {
    let local = 3 * n_qubits;
    // a two-qubit ring has a single distinct neighbour pair
    let pairs = match n_qubits {
        0 | 1 => 0,
        2 => 1,
        n => n,
    };
    if d < local || d > local + pairs {
        return Err(Error::Config(format!(
            "cannot build {d} value observables on {n_qubits} qubits (need {local}..={})",
            local + pairs
        )));
    }
    let mut out = Vec::with_capacity(d);
    for i in 0..n_qubits {
        out.extend([PauliString::x(i), PauliString::y(i), PauliString::z(i)]);
    }
    out.extend((0..d - local).map(|i| PauliString::zz(i, (i + 1) % n_qubits)));
    Ok(out)
}

/// Encoding ansatz with input slots followed by a trainable ansatz, started from `|+⟩ⁿ`.
fn attention_circuit(n: usize, p_enc: usize, p_vqc: usize, observables: Vec<PauliString>) -> Result<QuantumNode> {
    QuantumNode::encode_then_train(qsal_circuit(n, p_enc, p_vqc)?, observables, Basis::AllPlus, 1.0)
}

/// One quantum self-attention layer.
#[derive(Debug, Clone)]
pub struct Qsal {
    query: Arc<QuantumNode>,
    key: Arc<QuantumNode>,
    value: Arc<QuantumNode>,
    theta_q: ParamId,
    theta_k: ParamId,
    theta_v: ParamId,
    d: usize,
}

impl Qsal {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        n_qubits: usize,
        p_enc: usize,
        p_vqc: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let d = n_qubits * (p_enc + 2);
        let query = attention_circuit(n_qubits, p_enc, p_vqc, vec![PauliString::z(0)])?;
        let key = attention_circuit(n_qubits, p_enc, p_vqc, vec![PauliString::z(0)])?;
        let value = attention_circuit(n_qubits, p_enc, p_vqc, value_observable_set(n_qubits, d)?)?;
        let theta_q = store.add_angles(format!("{name}.query"), query.n_params(), rng);
        let theta_k = store.add_angles(format!("{name}.key"), key.n_params(), rng);
        let theta_v = store.add_angles(format!("{name}.value"), value.n_params(), rng);
        Ok(Self {
            query: Arc::new(query),
            key: Arc::new(key),
            value: Arc::new(value),
            theta_q,
            theta_k,
            theta_v,
            d,
        })
    }

    pub fn token_dim(&self) -> usize {
        self.d
    }

    pub fn value_node(&self) -> &QuantumNode {
        &self.value
    }

    pub fn query_node(&self) -> &QuantumNode {
        &self.query
    }

    pub fn param_ids(&self) -> [ParamId; 3] {
        [self.theta_q, self.theta_k, self.theta_v]
    }

    /// `h` is `C × D`. Returns the aggregate `α̃ V` (no residual) and `α̃`.
    pub fn forward<'t>(&self, p: &[Var<'t>], h: Var<'t>, method: GradMethod) -> Result<(Var<'t>, Var<'t>)> {
        let (c, d) = h.shape();
        if d != self.d {
            return Err(Error::shape("qsal", format!("token width {d}, layer expects {}", self.d)));
        }
        let tape = h.tape();
        let mut qs = Vec::with_capacity(c);
        let mut ks = Vec::with_capacity(c);
        let mut vs = Vec::with_capacity(c);
        for row in 0..c {
            let tok = h.row(row)?;
            qs.push(quantum(tape, &self.query, tok, p[self.theta_q.0], method)?);
            ks.push(quantum(tape, &self.key, tok, p[self.theta_k.0], method)?);
            vs.push(quantum(tape, &self.value, tok, p[self.theta_v.0], method)?);
        }
        let q = stack_rows(&qs)?; // C × 1
        let k = stack_rows(&ks)?.transpose(); // 1 × C
        let v = stack_rows(&vs)?; // C × D
        let alpha = gaussian_coefficients(q, k)?;
        Ok((alpha.matmul(v)?, alpha))
    }
}

/// `α̃[c, c'] ∝ exp(−(q_c − k_c')²)`, rows summing to one. `q` is `C × 1`, `k` is `1 × C`.
pub fn gaussian_coefficients<'t>(q: Var<'t>, k: Var<'t>) -> Result<Var<'t>> {
    let tape = q.tape();
    let c = q.shape().0;
    let qq = q.matmul(tape.constant(Tensor::filled(1, c, 1.0)))?;
    let kk = tape.constant(Tensor::filled(c, 1, 1.0)).matmul(k)?;
    Ok(qq.sub(kk)?.square().scale(-1.0).exp().normalize_rows())
}

/// Circuit used by every QSAL slot, exposed for inspection and tests.
pub fn qsal_circuit(n_qubits: usize, p_enc: usize, p_vqc: usize) -> Result<ParamCircuit> {
    let mut c = build_qsann_ansatz_with(n_qubits, p_enc, SlotKind::Encoding)?;
    c.append(&build_qsann_ansatz_with(n_qubits, p_vqc, SlotKind::Trainable)?)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Tape;

    #[test]
    fn observable_sets() {
        let v = value_observable_set(3, 9).unwrap();
        assert_eq!(v.len(), 9);
        assert_eq!(v[0].to_string(), "X0");
        assert_eq!(v[8].to_string(), "Z2");
        let v = value_observable_set(4, 16).unwrap();
        let tail: Vec<_> = v[12..].iter().map(|o| o.to_string()).collect();
        assert_eq!(tail, ["Z0⊗Z1", "Z1⊗Z2", "Z2⊗Z3", "Z0⊗Z3"]);
        assert_eq!(value_observable_set(2, 6).unwrap().len(), 6);
        assert!(value_observable_set(2, 8).is_err());
        assert!(value_observable_set(3, 8).is_err());
        assert!(value_observable_set(3, 13).is_err());
    }

    #[test]
    fn gaussian_kernel_hand_value() {
        let tape = Tape::new();
        let q = tape.constant(Tensor::new(2, 1, vec![0.0, 1.0]).unwrap());
        let k = tape.constant(Tensor::row_vector(vec![0.0, 1.0]));
        let a = gaussian_coefficients(q, k).unwrap().value();
        let e = (-1.0f64).exp();
        assert!((a.get(0, 0) - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((a.get(0, 0) - 0.7311).abs() < 1e-4);
        assert!((a.get(1, 1) - 1.0 / (1.0 + e)).abs() < 1e-12);
    }
}
