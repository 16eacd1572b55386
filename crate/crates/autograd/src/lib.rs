//! Dense fp64 reverse-mode automatic differentiation on a flat tape.
//!
//! The model zoo in this workspace runs at desk scale (a few thousand nodes,
//! feature widths in the tens), so everything is f64 and single-threaded by
//! design: gradient checks against central finite differences stay sharp and
//! every run is bitwise reproducible. Ops are recorded in creation order;
//! parents always precede children, so the backward pass is a single reverse
//! sweep with additive gradient accumulation.

mod gradcheck;
mod params;
mod sparse;
mod tape;

pub use gradcheck::{grad_check, GradCheckReport};
pub use params::{load_checkpoint, save_checkpoint, NamedTensor};
pub use sparse::SparseMatrix;
pub use tape::{softmax_rows, GruParams, SparseId, Tape, TensorId};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("{op}: non-finite value produced")]
    NonFinite { op: &'static str },
    #[error("{op}: mask selects no rows")]
    EmptyMask { op: &'static str },
    #[error("backward already run on this tape; reset_grads() first")]
    BackwardTwice,
    #[error("gradient queried before backward")]
    GradBeforeBackward,
    #[error("{op}: {detail}")]
    BadArgument { op: &'static str, detail: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Glorot (uniform) initialization for a `fan_in x fan_out` weight matrix.
pub fn glorot_uniform<R: rand::Rng>(fan_in: usize, fan_out: usize, rng: &mut R) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out)
        .map(|_| rng.gen_range(-limit..limit))
        .collect()
}
