//! Circuit-based baselines and the linear reference model.

use std::f64::consts::PI;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::config::{Architecture, ModelConfig};
use super::layers::{Affine, Mlp};
use super::params::{ParamId, ParamStore};
use super::Forecaster;
use crate::diff::{quantum, stack_rows, QuantumNode, SlotSource, Tape, Var};
use crate::error::Result;
use crate::qsim::{build_ring_ansatz, rotation_row, Basis, GateKind, ParamCircuit, PauliString, SlotKind};

/// Row-major flat index of `X[t, c]` in a `T × C` window.
fn at(t: usize, c: usize, channels: usize) -> usize {
    t * channels + c
}

/// `(v + 1) / 2`
fn rescale(v: Var<'_>) -> Var<'_> {
    v.offset(1.0).scale(0.5)
}

/// `R_y(π x_t)` on qubit `t`, then a ring ansatz, ⟨Z₀⟩ read out. Inputs are one
/// channel's `T` values.
fn channel_circuit(lookback: usize, depth: usize) -> Result<QuantumNode> {
    let mut c = ParamCircuit::new(lookback)?;
    rotation_row(&mut c, GateKind::Ry, SlotKind::Encoding)?;
    c.append(&build_ring_ansatz(lookback, depth)?)?;
    QuantumNode::encode_then_train(c, vec![PauliString::z(0)], Basis::AllZero, PI)
}

/// Shared machinery of the two per-channel circuit models: returns `1 × C` of
/// raw ⟨Z₀⟩ values.
fn per_channel_expectations<'t>(
    cfg: &ModelConfig,
    node: &Arc<QuantumNode>,
    thetas: &[ParamId],
    p: &[Var<'t>],
    window: Var<'t>,
) -> Result<Var<'t>> {
    let (t, ch) = (cfg.lookback, cfg.channels);
    let tape = window.tape();
    let zs = (0..ch)
        .map(|c| {
            let col = window.gather((0..t).map(|s| at(s, c, ch)).collect(), 1, t)?;
            quantum(tape, node, col, p[thetas[c].0], cfg.grad_method)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stack_rows(&zs)?.reshape(1, ch)?)
}

pub struct IndepVqc {
    cfg: ModelConfig,
    store: ParamStore,
    node: Arc<QuantumNode>,
    thetas: Vec<ParamId>,
}

impl IndepVqc {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let depth = match cfg.arch {
            Architecture::IndepVqc { depth } => depth,
            _ => unreachable!(),
        };
        let node = Arc::new(channel_circuit(cfg.lookback, depth)?);
        let mut store = ParamStore::new();
        let thetas = (0..cfg.channels)
            .map(|c| store.add_angles(format!("circuit{c}.theta"), node.n_params(), rng))
            .collect();
        Ok(Self { cfg, store, node, thetas })
    }

    pub fn channel_node(&self) -> &QuantumNode {
        &self.node
    }
}

impl Forecaster for IndepVqc {
    fn config(&self) -> &ModelConfig {
        &self.cfg
    }
    fn params(&self) -> &ParamStore {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn forward<'t>(&self, _tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>> {
        Ok(rescale(per_channel_expectations(&self.cfg, &self.node, &self.thetas, p, window)?))
    }
}

pub struct VqcMlp {
    cfg: ModelConfig,
    store: ParamStore,
    node: Arc<QuantumNode>,
    thetas: Vec<ParamId>,
    head: Mlp,
}

impl VqcMlp {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let depth = match cfg.arch {
            Architecture::VqcMlp { depth } => depth,
            _ => unreachable!(),
        };
        let node = Arc::new(channel_circuit(cfg.lookback, depth)?);
        let mut store = ParamStore::new();
        let thetas = (0..cfg.channels)
            .map(|c| store.add_angles(format!("circuit{c}.theta"), node.n_params(), rng))
            .collect();
        let (c, s) = (cfg.channels, cfg.horizon);
        let head = Mlp::new(&mut store, "mlp", c, 2 * c * s, c * s, rng);
        Ok(Self {
            cfg,
            store,
            node,
            thetas,
            head,
        })
    }

    pub fn head(&self) -> &Mlp {
        &self.head
    }
}

impl Forecaster for VqcMlp {
    fn config(&self) -> &ModelConfig {
        &self.cfg
    }
    fn params(&self) -> &ParamStore {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn forward<'t>(&self, _tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>> {
        let z = per_channel_expectations(&self.cfg, &self.node, &self.thetas, p, window)?;
        self.head
            .apply(p, z)?
            .reshape(self.cfg.horizon, self.cfg.channels)
    }
}

/// Output variant of the dense-embedding circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenseReadout {
    /// ⟨X₀⟩, ⟨Y₀⟩, ⟨Z₀⟩
    SingleQubitObs,
    /// ⟨Z₀⟩, ⟨Z₁⟩, ⟨Z₂⟩
    ThreeQubitZ,
}

pub struct DenseEmbed {
    cfg: ModelConfig,
    store: ParamStore,
    node: Arc<QuantumNode>,
    theta: ParamId,
    readout: DenseReadout,
}

impl DenseEmbed {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (depth, readout) = match cfg.arch {
            Architecture::DenseEmbedObs { depth } => (depth, DenseReadout::SingleQubitObs),
            Architecture::DenseEmbedQubits { depth } => (depth, DenseReadout::ThreeQubitZ),
            _ => unreachable!(),
        };
        let (t, ch) = (cfg.lookback, cfg.channels);
        let mut circuit = ParamCircuit::new(t)?;
        let mut sources = Vec::new();
        // R_z(πX_{t,2}) R_y(πX_{t,1}) R_z(πX_{t,0}) |+⟩ on qubit t
        for q in 0..t {
            for (c, kind) in [(0, GateKind::Rz), (1, GateKind::Ry), (2, GateKind::Rz)] {
                circuit.rotation(kind, q, SlotKind::Encoding)?;
                sources.push(SlotSource::Input {
                    index: at(q, c, ch),
                    scale: PI,
                });
            }
        }
        let ansatz = build_ring_ansatz(t, depth)?;
        circuit.append(&ansatz)?;
        sources.extend((0..ansatz.slot_count()).map(SlotSource::Param));
        let observables = match readout {
            DenseReadout::SingleQubitObs => vec![PauliString::x(0), PauliString::y(0), PauliString::z(0)],
            DenseReadout::ThreeQubitZ => (0..3).map(PauliString::z).collect(),
        };
        let node = QuantumNode::new(circuit, observables, Basis::AllPlus, sources, t * ch, ansatz.slot_count())?;
        let mut store = ParamStore::new();
        let theta = store.add_angles("circuit.theta", node.n_params(), rng);
        Ok(Self {
            cfg,
            store,
            node: Arc::new(node),
            theta,
            readout,
        })
    }

    pub fn readout(&self) -> DenseReadout {
        self.readout
    }

    pub fn node(&self) -> &QuantumNode {
        &self.node
    }
}

impl Forecaster for DenseEmbed {
    fn config(&self) -> &ModelConfig {
        &self.cfg
    }
    fn params(&self) -> &ParamStore {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn forward<'t>(&self, tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>> {
        let flat = window.reshape(1, self.cfg.lookback * self.cfg.channels)?;
        let v = quantum(tape, &self.node, flat, p[self.theta.0], self.cfg.grad_method)?;
        Ok(rescale(v))
    }
}

pub struct EncVqcDec {
    cfg: ModelConfig,
    store: ParamStore,
    encoder: Mlp,
    node: Arc<QuantumNode>,
    theta: ParamId,
    decoder: Mlp,
}

impl EncVqcDec {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (n, depth) = match cfg.arch {
            Architecture::EncVqcDec { n_qubits, depth } => (n_qubits, depth),
            _ => unreachable!(),
        };
        let (t, c, s) = (cfg.lookback, cfg.channels, cfg.horizon);
        let mut store = ParamStore::new();
        let encoder = Mlp::new(&mut store, "encoder", c * t, 2 * n, n, rng);
        let mut circuit = ParamCircuit::new(n)?;
        rotation_row(&mut circuit, GateKind::Ry, SlotKind::Encoding)?;
        circuit.append(&build_ring_ansatz(n, depth)?)?;
        let node = QuantumNode::encode_then_train(circuit, (0..n).map(PauliString::z).collect(), Basis::AllZero, 1.0)?;
        let theta = store.add_angles("circuit.theta", node.n_params(), rng);
        let decoder = Mlp::new(&mut store, "decoder", n, 2 * c * s, c * s, rng);
        Ok(Self {
            cfg,
            store,
            encoder,
            node: Arc::new(node),
            theta,
            decoder,
        })
    }

    pub fn node(&self) -> &QuantumNode {
        &self.node
    }

    pub fn encoder(&self) -> &Mlp {
        &self.encoder
    }

    pub fn decoder(&self) -> &Mlp {
        &self.decoder
    }
}

impl Forecaster for EncVqcDec {
    fn config(&self) -> &ModelConfig {
        &self.cfg
    }
    fn params(&self) -> &ParamStore {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn forward<'t>(&self, tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>> {
        let flat = window.reshape(1, self.cfg.lookback * self.cfg.channels)?;
        let angles = self.encoder.apply(p, flat)?;
        let z = quantum(tape, &self.node, angles, p[self.theta.0], self.cfg.grad_method)?;
        self.decoder
            .apply(p, z)?
            .reshape(self.cfg.horizon, self.cfg.channels)
    }
}

pub struct Reupload {
    cfg: ModelConfig,
    store: ParamStore,
    node: Arc<QuantumNode>,
    theta: ParamId,
}

impl Reupload {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let depth = match cfg.arch {
            Architecture::Reupload { depth_per_step } => depth_per_step,
            _ => unreachable!(),
        };
        let (t, ch) = (cfg.lookback, cfg.channels);
        let mut circuit = ParamCircuit::new(ch)?;
        let mut sources = Vec::new();
        let mut n_params = 0;
        for step in 0..t {
            for c in 0..ch {
                circuit.rotation(GateKind::Ry, c, SlotKind::Encoding)?;
                sources.push(SlotSource::Input {
                    index: at(step, c, ch),
                    scale: PI,
                });
            }
            let block = build_ring_ansatz(ch, depth)?;
            circuit.append(&block)?;
            sources.extend((n_params..n_params + block.slot_count()).map(SlotSource::Param));
            n_params += block.slot_count();
        }
        let node = QuantumNode::new(
            circuit,
            (0..ch).map(PauliString::z).collect(),
            Basis::AllZero,
            sources,
            t * ch,
            n_params,
        )?;
        let mut store = ParamStore::new();
        let theta = store.add_angles("circuit.theta", n_params, rng);
        Ok(Self {
            cfg,
            store,
            node: Arc::new(node),
            theta,
        })
    }

    pub fn node(&self) -> &QuantumNode {
        &self.node
    }
}

impl Forecaster for Reupload {
    fn config(&self) -> &ModelConfig {
        &self.cfg
    }
    fn params(&self) -> &ParamStore {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn forward<'t>(&self, tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>> {
        let flat = window.reshape(1, self.cfg.lookback * self.cfg.channels)?;
        let z = quantum(tape, &self.node, flat, p[self.theta.0], self.cfg.grad_method)?;
        Ok(rescale(z))
    }
}

/// Flattened window to flattened horizon, one affine layer.
pub struct Linear {
    cfg: ModelConfig,
    store: ParamStore,
    layer: Affine,
}

impl Linear {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut store = ParamStore::new();
        let layer = Affine::new(
            &mut store,
            "linear",
            cfg.lookback * cfg.channels,
            cfg.horizon * cfg.channels,
            rng,
        );
        Ok(Self { cfg, store, layer })
    }

    pub fn layer(&self) -> &Affine {
        &self.layer
    }
}

impl Forecaster for Linear {
    fn config(&self) -> &ModelConfig {
        &self.cfg
    }
    fn params(&self) -> &ParamStore {
        &self.store
    }
    fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }
    fn forward<'t>(&self, _tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<Var<'t>> {
        let flat = window.reshape(1, self.cfg.lookback * self.cfg.channels)?;
        self.layer
            .apply(p, flat)?
            .reshape(self.cfg.horizon, self.cfg.channels)
    }
}
