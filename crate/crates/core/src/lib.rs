//! A uniform semantic role labeler for span-style and dependency-style
//! predicate-argument structure.
//!
//! One data model, one network and one decoder serve both annotation
//! styles: dependency arguments are spans of width one.
//!
//! * [`data`]: sentences, spans, roles, tuples and graphs.
//! * [`corpus`]: JSON-lines and column corpora, vocabularies, embeddings.
//! * [`autodiff`]: tensors, a reverse-mode tape and Adam.
//! * [`network`]: token representation, highway BiLSTM encoder, span
//!   representations, unary and biaffine scorers, the training loss.
//! * [`decode`]: beam pruning, score tables and constrained decoding.
//! * [`eval`]: precision/recall/F1 and span-to-dependency conversion.
//! * [`train`]: training, prediction and model checkpoints.
//! * [`cli`]: the command-line front end.

pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod data;
pub mod decode;
pub mod eval;
pub mod network;
pub mod train;

pub use data::{Sentence, SpanRef, SrlGraph, Style, Tuple};
