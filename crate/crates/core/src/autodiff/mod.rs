//! Minimal dense tensors with reverse-mode automatic differentiation.

mod adam;
mod params;
mod tape;
mod tensor;

pub use adam::{adam_update, Adam, AdamConfig};
pub use params::{GradStore, ParamId, ParamStore};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("value was not recorded on a differentiable tape")]
    NoTape,
    #[error("backward already ran on this tape; reset it first")]
    AlreadyBackpropagated,
    #[error("{0}")]
    BadArgument(String),
    #[error("tensor `{0}` missing from checkpoint")]
    MissingTensor(String),
    #[error("malformed tensor container: {0}")]
    BadContainer(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
