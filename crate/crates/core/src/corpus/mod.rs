//! Corpus formats, vocabularies and embedding files.
//!
//! Two corpus formats are supported:
//!
//! * JSON lines, one sentence per line:
//!   `{"tokens": [...], "heads": [...], "predicates": [...], "tuples": [[p, i, j, "role"], ...], "mode": "SPAN" | "DEP", "nominal": [...]}`.
//!   `heads`, `predicates` and `nominal` are optional; `predicates` defaults
//!   to the predicates of `tuples`.
//! * A tab-separated column subset of CoNLL-2009 for dependency-style data:
//!   `ID FORM HEAD FILLPRED PRED APRED1 .. APREDk`, one APRED column per row
//!   marked `Y` in FILLPRED, sentences separated by blank lines.

mod conll;
mod embeddings;
mod jsonl;
mod vocab;

use std::path::{Path, PathBuf};

pub use conll::{emit_conll, parse_conll};
pub use embeddings::{
    load_external, load_pretrained, parse_external, parse_pretrained, EmbeddingMatrix, EmbeddingSource,
    ExternalEmbeddings,
};
pub use jsonl::{emit_jsonl, parse_jsonl, sentence_to_json};
pub use vocab::{build_vocab, Vocabulary, PAD, UNK};

use thiserror::Error;

use crate::data::{DataError, Sentence};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: index {index} out of range for sentence of length {len}")]
    IndexOutOfRange { line: usize, index: usize, len: usize },
    #[error("line {line}: the null label may not appear in gold tuples")]
    EpsilonRoleInGold { line: usize },
    #[error("line {line}: expected {expected} columns, found {found}")]
    ColumnCountMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: {predicates} predicates marked but {columns} APRED columns")]
    DanglingApred {
        line: usize,
        predicates: usize,
        columns: usize,
    },
    #[error("line {line}: bad index `{value}`")]
    BadIndex { line: usize, value: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("line {line}: vector dimension {found} differs from {expected}")]
    DimensionDrift { line: usize, expected: usize, found: usize },
    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("sentence {sentence}: {found} vectors for {expected} tokens")]
    TokenCountMismatch {
        sentence: usize,
        expected: usize,
        found: usize,
    },
    #[error("cannot write a span-style sentence with multi-token arguments as columns")]
    NotDependencyStyle,
}

impl CorpusError {
    pub(crate) fn from_data(line: usize, e: DataError) -> Self {
        match e {
            DataError::IndexOutOfRange { index, len } => CorpusError::IndexOutOfRange { line, index, len },
            DataError::EpsilonRole => CorpusError::EpsilonRoleInGold { line },
            other => CorpusError::MalformedRecord {
                line,
                reason: other.to_string(),
            },
        }
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|e| CorpusError::UnreadableFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// True when the path names a JSON-lines file (by extension).
pub fn is_jsonl_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("jsonl") | Some("json") | Some("ndjson")
    )
}

/// Reads a corpus, choosing the format from the file extension
/// (`.jsonl`/`.json` for JSON lines, anything else for columns).
pub fn read_corpus(path: &Path) -> Result<Vec<Sentence>, CorpusError> {
    let text = read_text(path)?;
    if is_jsonl_path(path) {
        parse_jsonl(&text)
    } else {
        parse_conll(&text)
    }
}

/// Writes a corpus in the format implied by the extension.
pub fn write_corpus(path: &Path, sentences: &[Sentence]) -> Result<(), CorpusError> {
    let text = if is_jsonl_path(path) {
        emit_jsonl(sentences)
    } else {
        emit_conll(sentences)?
    };
    std::fs::write(path, text).map_err(|e| CorpusError::UnreadableFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
