//! Reverse-mode differentiation: a tape for classical tensor operations,
//! circuit nodes with parameter-shift and adjoint gradients, and Adam.

mod adam;
mod quantum;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use quantum::{quantum, GradMethod, QuantumNode, SlotSource};
pub use tape::{affine, backward_calls, stack_rows, CustomOp, Gradients, Tape, Var};
pub use tensor::Tensor;

/// Layer-norm epsilon used throughout the models.
pub const LAYER_NORM_EPS: f64 = 1e-5;
