//! Shared fixtures for the criterion benchmarks.

use qforecast::diff::Tensor;
use qforecast::models::{Architecture, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lorenz-sized transformer pair: classical and quantum attention.
pub fn lorenz_transformers(horizon: usize) -> Vec<(&'static str, ModelConfig)> {
    let cfg = |arch| ModelConfig {
        lookback: 5,
        horizon,
        channels: 3,
        target_channel: None,
        grad_method: Default::default(),
        arch,
    };
    vec![
        (
            "itransformer",
            cfg(Architecture::ITransformer {
                blocks: 2,
                d_model: 9,
                d_ff: 12,
            }),
        ),
        (
            "iqtransformer",
            cfg(Architecture::IQTransformer {
                blocks: 2,
                d_model: 9,
                d_ff: 12,
                n_qubits: 3,
                p_enc: 1,
                p_vqc: 3,
            }),
        ),
    ]
}

/// Uniform random `rows × cols` tensor in [0, 1).
pub fn random_tensor(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen()).collect()).unwrap()
}

/// Angles in [-π, π).
pub fn random_angles(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}
