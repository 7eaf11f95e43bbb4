use rand_chacha::ChaCha8Rng;

use super::params::{ParamId, ParamKind, ParamStore};
use crate::diff::{affine, Tensor, Var, LAYER_NORM_EPS};
use crate::error::Result;

/// `x W + b`, applied row-wise.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub w: ParamId,
    pub b: ParamId,
}

impl Affine {
    pub fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = store.add_uniform(format!("{name}.weight"), fan_in, fan_out, fan_in, rng);
        let b = store.add_uniform(format!("{name}.bias"), 1, fan_out, fan_in, rng);
        Self { w, b }
    }

    pub fn apply<'t>(&self, p: &[Var<'t>], x: Var<'t>) -> Result<Var<'t>> {
        affine(x, p[self.w.0], p[self.b.0])
    }
}

/// Two affine layers with a ReLU between them.
#[derive(Debug, Clone, Copy)]
pub struct Mlp {
    pub first: Affine,
    pub second: Affine,
}

impl Mlp {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        hidden: usize,
        output: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self {
            first: Affine::new(store, &format!("{name}.0"), input, hidden, rng),
            second: Affine::new(store, &format!("{name}.1"), hidden, output, rng),
        }
    }

    pub fn apply<'t>(&self, p: &[Var<'t>], x: Var<'t>) -> Result<Var<'t>> {
        let h = self.first.apply(p, x)?.relu();
        self.second.apply(p, h)
    }
}

/// Row-wise layer normalisation with a trainable gain and offset per column.
#[derive(Debug, Clone, Copy)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub offset: ParamId,
}

impl LayerNorm {
    pub fn new(store: &mut ParamStore, name: &str, width: usize) -> Self {
        Self {
            gain: store.add(format!("{name}.gain"), ParamKind::Classical, Tensor::filled(1, width, 1.0)),
            offset: store.add(format!("{name}.offset"), ParamKind::Classical, Tensor::zeros(1, width)),
        }
    }

    pub fn apply<'t>(&self, p: &[Var<'t>], x: Var<'t>) -> Result<Var<'t>> {
        x.layer_norm_rows(LAYER_NORM_EPS)?
            .mul_row(p[self.gain.0])?
            .add_row(p[self.offset.0])
    }
}
