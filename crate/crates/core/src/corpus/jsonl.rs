use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::data::{Sentence, SpanRef, Style};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heads: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicates: Option<Vec<usize>>,
    #[serde(default)]
    tuples: Vec<(usize, usize, usize, String)>,
    mode: Style,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    nominal: Vec<usize>,
}

pub fn parse_jsonl(text: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push(record_to_sentence(rec, line_no)?);
    }
    Ok(out)
}

fn record_to_sentence(rec: Record, line: usize) -> Result<Sentence, CorpusError> {
    let n = rec.tokens.len();
    let mut b = Sentence::builder(rec.tokens, rec.mode);
    if let Some(h) = rec.heads {
        b = b.heads(h);
    }
    for p in rec.predicates.into_iter().flatten() {
        b = b.predicate(p);
    }
    for p in rec.nominal {
        b = b.nominal(p);
    }
    for (p, i, j, role) in rec.tuples {
        if i == 0 || j < i {
            return Err(CorpusError::IndexOutOfRange {
                line,
                index: if i == 0 { i } else { j },
                len: n,
            });
        }
        b = b.tuple(p, SpanRef { start: i, end: j }, role);
    }
    b.build().map_err(|e| CorpusError::from_data(line, e))
}

/// The canonical JSON value of one sentence.
pub fn sentence_to_json(s: &Sentence) -> String {
    let rec = Record {
        tokens: s.tokens().to_vec(),
        heads: s.heads().map(<[usize]>::to_vec),
        predicates: Some(s.predicates().iter().copied().collect()),
        tuples: s
            .tuples()
            .iter()
            .map(|t| (t.predicate, t.argument.start, t.argument.end, t.role.clone()))
            .collect(),
        mode: s.style(),
        nominal: s.nominal_predicates().iter().copied().collect(),
    };
    serde_json::to_string(&rec).expect("record serializes")
}

pub fn emit_jsonl(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&sentence_to_json(s));
        out.push('\n');
    }
    out
}
