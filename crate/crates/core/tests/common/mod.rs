//! Brute-force reference implementations shared by the integration tests.
//! Everything here is built from textbook definitions with full Kronecker
//! products and dense matrices, without touching the simulator's kernels.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use qforecast::diff::Tensor;
use qforecast::models::{build_model, loss_and_grads, Architecture, ModelConfig};
use qforecast::qsim::{Gate, GateKind, ParamCircuit, Pauli, PauliString, SlotKind, StateVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Mat = Vec<Vec<C>>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(dim: usize) -> Mat {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect())
        .collect()
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

pub fn apply(m: &Mat, v: &[C]) -> Vec<C> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn single(kind: GateKind, theta: f64) -> Mat {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let r = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::Rx => vec![vec![c(co, 0.0), c(0.0, -si)], vec![c(0.0, -si), c(co, 0.0)]],
        GateKind::Ry => vec![vec![c(co, 0.0), c(-si, 0.0)], vec![c(si, 0.0), c(co, 0.0)]],
        GateKind::Rz => vec![
            vec![C::from_polar(1.0, -theta / 2.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), C::from_polar(1.0, theta / 2.0)],
        ],
        GateKind::H => vec![vec![c(r, 0.0), c(r, 0.0)], vec![c(r, 0.0), c(-r, 0.0)]],
        GateKind::Cnot => panic!("not a single-qubit gate"),
    }
}

pub fn pauli(p: Pauli) -> Mat {
    match p {
        Pauli::X => vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]],
        Pauli::Y => vec![vec![c(0.0, 0.0), c(0.0, -1.0)], vec![c(0.0, 1.0), c(0.0, 0.0)]],
        Pauli::Z => vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]],
    }
}

/// `⊗_{q = n−1 … 0} factor(q)`: qubit 0 is the least significant index bit.
pub fn product(n: usize, factor: impl Fn(usize) -> Mat) -> Mat {
    let mut out = vec![vec![c(1.0, 0.0)]];
    for q in (0..n).rev() {
        out = kron(&out, &factor(q));
    }
    out
}

pub fn embed(n: usize, target: usize, m: &Mat) -> Mat {
    product(n, |q| if q == target { m.clone() } else { identity(2) })
}

/// `|0⟩⟨0|_c ⊗ I + |1⟩⟨1|_c ⊗ X_t`
pub fn cnot(n: usize, control: usize, target: usize) -> Mat {
    let p0 = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]];
    let p1 = vec![vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]];
    let x = pauli(Pauli::X);
    let a = product(n, |q| if q == control { p0.clone() } else { identity(2) });
    let b = product(n, |q| {
        if q == control {
            p1.clone()
        } else if q == target {
            x.clone()
        } else {
            identity(2)
        }
    });
    add(&a, &b)
}

pub fn gate_matrix(n: usize, g: &Gate, bindings: &[f64]) -> Mat {
    match g.kind {
        GateKind::Cnot => cnot(n, g.control.unwrap(), g.target),
        k => embed(n, g.target, &single(k, g.slot.map_or(0.0, |s| bindings[s]))),
    }
}

pub fn circuit_unitary(n: usize, gates: &[Gate], bindings: &[f64]) -> Mat {
    gates
        .iter()
        .fold(identity(1 << n), |u, g| matmul(&gate_matrix(n, g, bindings), &u))
}

pub fn pauli_matrix(n: usize, p: &PauliString) -> Mat {
    product(n, |q| {
        p.factors()
            .iter()
            .find(|(fq, _)| *fq == q)
            .map_or(identity(2), |(_, f)| pauli(*f))
    })
}

pub fn expectation(v: &[C], m: &Mat) -> f64 {
    let mv = apply(m, v);
    v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum::<C>().re
}

pub fn zero_state(n: usize) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << n];
    v[0] = c(1.0, 0.0);
    v
}

pub fn plus_state(n: usize) -> Vec<C> {
    let a = (1.0 / (1u64 << n) as f64).sqrt();
    vec![c(a, 0.0); 1 << n]
}

/// Gates in a hand-built circuit description.
#[derive(Clone, Copy, Debug)]
pub enum Op {
    Rot(GateKind, usize, f64),
    Cx(usize, usize),
}

pub fn run_ops(n: usize, ops: &[Op], init: Vec<C>) -> Vec<C> {
    ops.iter().fold(init, |v, op| match *op {
        Op::Rot(k, q, t) => apply(&embed(n, q, &single(k, t)), &v),
        Op::Cx(a, b) => apply(&cnot(n, a, b), &v),
    })
}

/// Ring ansatz written out by hand: per layer `R_z R_y R_z` on each qubit,
/// then CNOTs `i → i+1 mod n`.
pub fn ring_ops(n: usize, depth: usize, theta: &[f64]) -> Vec<Op> {
    let mut ops = Vec::new();
    let mut k = 0;
    for _ in 0..depth {
        for q in 0..n {
            ops.push(Op::Rot(GateKind::Rz, q, theta[k]));
            ops.push(Op::Rot(GateKind::Ry, q, theta[k + 1]));
            ops.push(Op::Rot(GateKind::Rz, q, theta[k + 2]));
            k += 3;
        }
        for q in 0..n {
            ops.push(Op::Cx(q, (q + 1) % n));
        }
    }
    ops
}

/// Self-attention ansatz by hand: `R_x` row, `R_y` row, then `p ×` [ring, `R_y` row].
pub fn qsann_ops(n: usize, p: usize, theta: &[f64]) -> Vec<Op> {
    let mut ops = Vec::new();
    let mut k = 0;
    let mut row = |ops: &mut Vec<Op>, kind| {
        for q in 0..n {
            ops.push(Op::Rot(kind, q, theta[k]));
            k += 1;
        }
    };
    row(&mut ops, GateKind::Rx);
    row(&mut ops, GateKind::Ry);
    for _ in 0..p {
        for q in 0..n {
            ops.push(Op::Cx(q, (q + 1) % n));
        }
        row(&mut ops, GateKind::Ry);
    }
    ops
}

pub fn z_on(n: usize, q: usize) -> Mat {
    embed(n, q, &pauli(Pauli::Z))
}

/// Central finite difference of a scalar function along every coordinate.
pub fn finite_diff(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a − b| / max(|a|, |b|, floor)`
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Transformer hyperparameters used for the Lorenz experiments.
pub fn lorenz_transformers() -> [qforecast::models::Architecture; 2] {
    use qforecast::models::Architecture::*;
    [
        ITransformer {
            blocks: 2,
            d_model: 9,
            d_ff: 12,
        },
        IQTransformer {
            blocks: 2,
            d_model: 9,
            d_ff: 12,
            n_qubits: 3,
            p_enc: 1,
            p_vqc: 3,
        },
    ]
}

/// Transformer hyperparameters used for the wind-turbine experiments.
pub fn turbine_transformers() -> [qforecast::models::Architecture; 2] {
    use qforecast::models::Architecture::*;
    [
        ITransformer {
            blocks: 2,
            d_model: 16,
            d_ff: 8,
        },
        IQTransformer {
            blocks: 2,
            d_model: 16,
            d_ff: 8,
            n_qubits: 4,
            p_enc: 2,
            p_vqc: 3,
        },
    ]
}

/// Circuit baselines at experiment depth 24.
pub fn circuit_baselines() -> Vec<qforecast::models::Architecture> {
    use qforecast::models::Architecture::*;
    vec![
        IndepVqc { depth: 24 },
        VqcMlp { depth: 24 },
        DenseEmbedObs { depth: 24 },
        DenseEmbedQubits { depth: 24 },
        EncVqcDec { n_qubits: 8, depth: 24 },
        Reupload { depth_per_step: 24 },
    ]
}

pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, n_gates: usize) -> (ParamCircuit, Vec<f64>) {
    let mut circuit = ParamCircuit::new(n).unwrap();
    for _ in 0..n_gates {
        let pick = rng.gen_range(0..if n > 1 { 5 } else { 4 });
        let q = rng.gen_range(0..n);
        match pick {
            0 => circuit.rotation(GateKind::Rx, q, SlotKind::Trainable).map(drop),
            1 => circuit.rotation(GateKind::Ry, q, SlotKind::Trainable).map(drop),
            2 => circuit.rotation(GateKind::Rz, q, SlotKind::Trainable).map(drop),
            3 => circuit.h(q),
            _ => {
                let t = (q + rng.gen_range(1..n)) % n;
                circuit.cnot(q, t)
            }
        }
        .unwrap();
    }
    let bindings = (0..circuit.slot_count()).map(|_| rng.gen_range(-7.0..7.0)).collect();
    (circuit, bindings)
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let mut amps: Vec<_> = (0..1 << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(n, amps).unwrap()
}

pub fn toy_archs() -> Vec<(Architecture, usize)> {
    vec![
        (Architecture::Linear, 2),
        (Architecture::IndepVqc { depth: 2 }, 2),
        (Architecture::VqcMlp { depth: 2 }, 2),
        (Architecture::DenseEmbedObs { depth: 2 }, 3),
        (Architecture::DenseEmbedQubits { depth: 2 }, 3),
        (Architecture::EncVqcDec { n_qubits: 3, depth: 2 }, 2),
        (Architecture::Reupload { depth_per_step: 2 }, 2),
        (
            Architecture::ITransformer {
                blocks: 1,
                d_model: 4,
                d_ff: 3,
            },
            3,
        ),
        (
            Architecture::IQTransformer {
                blocks: 1,
                d_model: 6,
                d_ff: 3,
                n_qubits: 2,
                p_enc: 1,
                p_vqc: 1,
            },
            2,
        ),
        (
            Architecture::IQTransformer {
                blocks: 1,
                d_model: 9,
                d_ff: 2,
                n_qubits: 3,
                p_enc: 1,
                p_vqc: 1,
            },
            3,
        ),
    ]
}

/// Largest relative error between tape gradients and central differences of
/// the window MSE, over every trainable scalar.
pub fn fd_check_model(cfg: &ModelConfig, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = build_model(cfg, seed).unwrap();
    let window = Tensor::new(
        cfg.lookback,
        cfg.channels,
        (0..cfg.lookback * cfg.channels).map(|_| rng.gen_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let target = Tensor::new(
        cfg.horizon,
        cfg.output_channels(),
        (0..cfg.horizon * cfg.output_channels()).map(|_| rng.gen_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let (_, grads) = loss_and_grads(model.as_ref(), &window, &target).unwrap();
    let values = model.params().values();
    let mut worst = 0.0f64;
    for (k, v) in values.iter().enumerate() {
        let fd = finite_diff(
            |flat| {
                let mut vs = values.clone();
                vs[k] = Tensor::new(v.rows(), v.cols(), flat.to_vec()).unwrap();
                model.params_mut().set_values(vs);
                loss_and_grads(model.as_ref(), &window, &target).unwrap().0
            },
            v.data(),
            1e-6,
        );
        for (a, n) in grads[k].data().iter().zip(&fd) {
            worst = worst.max(rel_err(*a, *n, 1e-3));
        }
    }
    model.params_mut().set_values(values);
    worst
}
