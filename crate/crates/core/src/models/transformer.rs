//! Inverted transformer: each channel's lookback window is one token, and
//! attention mixes channels. The attention sublayer is either classical
//! single-head softmax attention or a [`Qsal`].

use rand_chacha::ChaCha8Rng;

use super::config::{Architecture, ModelConfig};
use super::layers::{Affine, LayerNorm, Mlp};
use super::params::{ParamId, ParamStore};
use super::qsal::Qsal;
use super::Forecaster;
use crate::diff::{Tape, Tensor, Var, LAYER_NORM_EPS};
use crate::error::Result;

/// Per-channel mean and standard deviation over the lookback axis, taken from
/// the raw window. Used to normalise inputs and to restore the forecast scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    /// `window` is `T × C`. Population variance, `σ = √(var + ε)`.
    pub fn of(window: &Tensor) -> Self {
        let (t, c) = window.shape();
        let mut mean = vec![0.0; c];
        let mut std = vec![0.0; c];
        for ch in 0..c {
            let col = window.column(ch);
            let m = col.iter().sum::<f64>() / t as f64;
            let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / t as f64;
            mean[ch] = m;
            std[ch] = (var + LAYER_NORM_EPS).sqrt();
        }
        Self { mean, std }
    }

    /// `C × T` tokens from a `T × C` window, each row standardised.
    pub fn normalize(&self, window: &Tensor) -> Tensor {
        let mut out = window.transpose();
        for ch in 0..out.rows() {
            for t in 0..out.cols() {
                out.set(ch, t, (out.get(ch, t) - self.mean[ch]) / self.std[ch]);
            }
        }
        out
    }

    /// Inverse of [`normalize`](Self::normalize): `C × T` back to `T × C`.
    pub fn denormalize(&self, tokens: &Tensor) -> Tensor {
        let mut out = tokens.clone();
        for ch in 0..out.rows() {
            for t in 0..out.cols() {
                out.set(ch, t, out.get(ch, t) * self.std[ch] + self.mean[ch]);
            }
        }
        out.transpose()
    }
}

#[derive(Debug, Clone)]
enum Attention {
    Softmax { w_q: ParamId, w_k: ParamId, w_v: ParamId },
    Quantum(Qsal),
}

#[derive(Debug, Clone)]
struct Block {
    norm_attn: LayerNorm,
    attention: Attention,
    norm_ffn: LayerNorm,
    ffn: Mlp,
}

/// Forward results with the per-block attention matrices kept for inspection.
pub struct TransformerTrace<'t> {
    pub forecast: Var<'t>,
    /// One `C × C` row-stochastic matrix per block.
    pub attention: Vec<Var<'t>>,
}

pub struct InvertedTransformer {
    cfg: ModelConfig,
    store: ParamStore,
    input_norm: LayerNorm,
    tokenizer: Affine,
    blocks: Vec<Block>,
    projector: Affine,
}

impl InvertedTransformer {
    pub fn new(cfg: ModelConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (n_blocks, d, d_ff, quantum) = match cfg.arch {
            Architecture::ITransformer { blocks, d_model, d_ff } => (blocks, d_model, d_ff, None),
            Architecture::IQTransformer {
                blocks,
                d_model,
                d_ff,
                n_qubits,
                p_enc,
                p_vqc,
            } => (blocks, d_model, d_ff, Some((n_qubits, p_enc, p_vqc))),
            _ => unreachable!(),
        };
        let mut store = ParamStore::new();
        let input_norm = LayerNorm::new(&mut store, "input_norm", cfg.lookback);
        let tokenizer = Affine::new(&mut store, "tokenizer", cfg.lookback, d, rng);
        let mut blocks = Vec::with_capacity(n_blocks);
        for b in 0..n_blocks {
            let name = format!("block{b}");
            let norm_attn = LayerNorm::new(&mut store, &format!("{name}.norm_attn"), d);
            let attention = match quantum {
                None => Attention::Softmax {
                    w_q: store.add_uniform(format!("{name}.attn.w_q"), d, d, d, rng),
                    w_k: store.add_uniform(format!("{name}.attn.w_k"), d, d, d, rng),
                    w_v: store.add_uniform(format!("{name}.attn.w_v"), d, d, d, rng),
                },
                Some((n, pe, pv)) => Attention::Quantum(Qsal::new(&mut store, &format!("{name}.qsal"), n, pe, pv, rng)?),
            };
            let norm_ffn = LayerNorm::new(&mut store, &format!("{name}.norm_ffn"), d);
            let ffn = Mlp::new(&mut store, &format!("{name}.ffn"), d, d_ff, d, rng);
            blocks.push(Block {
                norm_attn,
                attention,
                norm_ffn,
                ffn,
            });
        }
        let projector = Affine::new(&mut store, "projector", d, cfg.horizon, rng);
        Ok(Self {
            cfg,
            store,
            input_norm,
            tokenizer,
            blocks,
            projector,
        })
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self.cfg.arch, Architecture::IQTransformer { .. })
    }

    pub fn qsal(&self, block: usize) -> Option<&Qsal> {
        match &self.blocks.get(block)?.attention {
            Attention::Quantum(q) => Some(q),
            Attention::Softmax { .. } => None,
        }
    }

    /// Full forward pass, keeping attention matrices.
    pub fn trace<'t>(&self, tape: &'t Tape, p: &[Var<'t>], window: Var<'t>) -> Result<TransformerTrace<'t>> {
        let stats = ChannelStats::of(&window.value());
        let c = self.cfg.channels;
        // C × T, standardised per channel
        let x = window.transpose().layer_norm_rows(LAYER_NORM_EPS)?;
        let x = x.mul_row(p[self.input_norm.gain.0])?.add_row(p[self.input_norm.offset.0])?;
        let mut h = self.tokenizer.apply(p, x)?;
        let mut attention = Vec::with_capacity(self.blocks.len());
        for block in &self.blocks {
            let z = block.norm_attn.apply(p, h)?;
            let (mixed, alpha) = match &block.attention {
                Attention::Softmax { w_q, w_k, w_v } => {
                    let q = z.matmul(p[w_q.0])?;
                    let k = z.matmul(p[w_k.0])?;
                    let v = z.matmul(p[w_v.0])?;
                    let d_k = z.shape().1 as f64;
                    let a = q.matmul(k.transpose())?.scale(1.0 / d_k.sqrt()).softmax_rows();
                    (a.matmul(v)?, a)
                }
                Attention::Quantum(qsal) => qsal.forward(p, z, self.cfg.grad_method)?,
            };
            attention.push(alpha);
            let h_tilde = h.add(mixed)?;
            let f = block.ffn.apply(p, block.norm_ffn.apply(p, h_tilde)?)?;
            h = h_tilde.add(f)?;
        }
        let y = self.projector.apply(p, h)?; // C × S
        // LN⁻¹: y σ_c + μ_c per channel row
        let mut diag = Tensor::zeros(c, c);
        for (ch, s) in stats.std.iter().enumerate() {
            diag.set(ch, ch, *s);
        }
        let shift = Tensor::new(c, 1, stats.mean.clone())?.matmul(&Tensor::filled(1, self.cfg.horizon, 1.0))?;
        let y = tape.constant(diag).matmul(y)?.add(tape.constant(shift))?;
        Ok(TransformerTrace {
            forecast: y.transpose(),
            attention,
        })
    }
}

impl Forecaster for InvertedTransformer {
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
        Ok(self.trace(tape, p, window)?.forecast)
    }
    fn attention_maps(&self, window: &Tensor) -> Result<Option<Vec<Tensor>>> {
        let tape = Tape::new();
        let p = self.store.leaves(&tape);
        let tr = self.trace(&tape, &p, tape.constant(window.clone()))?;
        Ok(Some(tr.attention.iter().map(|a| a.value()).collect()))
    }
}
