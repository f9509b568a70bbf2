use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use super::{read_text, CorpusError, Vocabulary, PAD};
use crate::autodiff::Tensor;
use crate::data::Sentence;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingSource {
    Random,
    Pretrained,
}

/// One row per vocabulary entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub rows: Tensor,
    pub source: EmbeddingSource,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.rows.cols()
    }
}

pub fn load_pretrained<R: Rng>(path: &Path, vocab: &Vocabulary, rng: &mut R) -> Result<EmbeddingMatrix, CorpusError> {
    let text = read_text(path)?;
    parse_pretrained(&text, vocab, rng).map_err(|e| match e {
        CorpusError::MalformedRecord { reason, .. } if reason == "no vectors" => CorpusError::UnreadableFile {
            path: path.to_path_buf(),
            reason: "file contains no vectors".into(),
        },
        other => other,
    })
}

/// Reads `word v1 .. vd` lines. Vocabulary rows found in the text are copied
/// (an exact match beats a lowercase match); the rest are drawn from
/// uniform(−0.01, 0.01). The PAD row is zero.
pub fn parse_pretrained<R: Rng>(text: &str, vocab: &Vocabulary, rng: &mut R) -> Result<EmbeddingMatrix, CorpusError> {
    let mut lower: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, w) in vocab.words().iter().enumerate().skip(2) {
        lower.entry(w.to_lowercase()).or_default().push(i);
    }
    let mut dim: Option<usize> = None;
    // row -> (values, exact)
    let mut found: HashMap<usize, (Vec<f64>, bool)> = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let values: Vec<f64> = fields
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CorpusError::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(CorpusError::DimensionDrift {
                    line: line_no,
                    expected: d,
                    found: values.len(),
                })
            }
            _ => {}
        }
        let exact = vocab.word_id(word);
        if exact > 1 && vocab.words()[exact] == word {
            found.insert(exact, (values.clone(), true));
        }
        if let Some(rows) = lower.get(word) {
            for &r in rows {
                found.entry(r).or_insert_with(|| (values.clone(), false));
            }
        }
    }
    let d = match dim {
        Some(d) if d > 0 => d,
        _ => {
            return Err(CorpusError::MalformedRecord {
                line: 0,
                reason: "no vectors".into(),
            })
        }
    };
    let mut data = Vec::with_capacity(vocab.num_words() * d);
    for row in 0..vocab.num_words() {
        match found.get(&row) {
            Some((v, _)) => data.extend_from_slice(v),
            None if row == PAD => data.extend(std::iter::repeat_n(0.0, d)),
            None => data.extend((0..d).map(|_| rng.random_range(-0.01..0.01))),
        }
    }
    Ok(EmbeddingMatrix {
        rows: Tensor::matrix(vocab.num_words(), d, data),
        source: EmbeddingSource::Pretrained,
    })
}

/// Precomputed contextual vectors, one matrix (tokens × dim) per sentence
/// ordinal. Sentences without a record read as zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExternalEmbeddings {
    dim: usize,
    sentences: BTreeMap<usize, Tensor>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExternalRecord {
    sentence: usize,
    vectors: Vec<Vec<f64>>,
}

impl ExternalEmbeddings {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, ordinal: usize) -> Option<&Tensor> {
        self.sentences.get(&ordinal)
    }

    /// Vectors for sentence `ordinal` of length `n`, zeros when absent.
    pub fn for_sentence(&self, ordinal: usize, n: usize) -> Tensor {
        self.sentences
            .get(&ordinal)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(&[n, self.dim]))
    }

    /// Checks every record's token count against its sentence.
    pub fn check_against(&self, corpus: &[Sentence]) -> Result<(), CorpusError> {
        for (&k, t) in &self.sentences {
            let expected = corpus
                .get(k)
                .map(Sentence::len)
                .ok_or(CorpusError::TokenCountMismatch {
                    sentence: k,
                    expected: 0,
                    found: t.rows(),
                })?;
            if t.rows() != expected {
                return Err(CorpusError::TokenCountMismatch {
                    sentence: k,
                    expected,
                    found: t.rows(),
                });
            }
        }
        Ok(())
    }
}

/// Parses `{"sentence": k, "vectors": [[..], ..]}` lines.
pub fn parse_external(text: &str) -> Result<ExternalEmbeddings, CorpusError> {
    let mut out = ExternalEmbeddings::default();
    let mut dim = None;
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ExternalRecord = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        let mut data = Vec::new();
        for v in &rec.vectors {
            let d = *dim.get_or_insert(v.len());
            if v.len() != d {
                return Err(CorpusError::DimensionDrift {
                    line: line_no,
                    expected: d,
                    found: v.len(),
                });
            }
            data.extend_from_slice(v);
        }
        if rec.vectors.is_empty() {
            return Err(CorpusError::MalformedRecord {
                line: line_no,
                reason: "record without vectors".into(),
            });
        }
        let d = dim.expect("set above");
        out.sentences
            .insert(rec.sentence, Tensor::matrix(rec.vectors.len(), d, data));
    }
    out.dim = dim.unwrap_or(0);
    Ok(out)
}

pub fn load_external(path: &Path) -> Result<ExternalEmbeddings, CorpusError> {
    parse_external(&read_text(path)?)
}
