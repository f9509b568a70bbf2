//! The scoring network: character CNN and word embeddings, a highway
//! BiLSTM encoder, predicate and argument MLPs, attention-headed span
//! representations, unary scorers and a biaffine role scorer, trained with a
//! per-pair softmax over roles.

mod candidates;
mod config;
mod encoder;
mod init;
mod layers;
mod model;
mod scorer;
mod token;

use thiserror::Error;

use crate::autodiff::TensorError;
use crate::decode::DecodeError;

pub use candidates::SpanEncoder;
pub use config::{width_bucket, ModelConfig, WIDTH_BUCKETS};
pub use encoder::{BiHighwayLstm, Lstm};
pub use init::{glorot_uniform, orthogonal};
pub use layers::Linear;
pub use model::{DropoutMasks, Forward, PredicateSource, PruneStats, SentenceInput, SrlModel};
pub use scorer::{role_loss, tuple_score, tuple_scores, Biaffine, UnaryScorer};
pub use token::TokenEmbedder;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("role `{0}` is not in the model's role inventory")]
    UnknownRole(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}
