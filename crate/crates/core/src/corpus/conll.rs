use super::CorpusError;
use crate::data::{Sentence, SpanRef, Style};

const FIXED_COLUMNS: usize = 5;

/// Parses the `ID FORM HEAD FILLPRED PRED APRED*` column subset. Every
/// sentence comes back dependency-style.
pub fn parse_conll(text: &str) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                sentences.push(parse_block(&block)?);
                block.clear();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        block.push((k + 1, line));
    }
    if !block.is_empty() {
        sentences.push(parse_block(&block)?);
    }
    Ok(sentences)
}

fn parse_block(rows: &[(usize, &str)]) -> Result<Sentence, CorpusError> {
    let n = rows.len();
    let split: Vec<(usize, Vec<&str>)> = rows
        .iter()
        .map(|&(line, text)| (line, text.split('\t').collect()))
        .collect();

    let arity = split[0].1.len();
    for (line, cols) in &split {
        if cols.len() != arity || cols.len() < FIXED_COLUMNS {
            return Err(CorpusError::ColumnCountMismatch {
                line: *line,
                expected: arity.max(FIXED_COLUMNS),
                found: cols.len(),
            });
        }
    }

    let mut tokens = Vec::with_capacity(n);
    let mut heads = Vec::with_capacity(n);
    let mut predicates = Vec::new();
    for (pos, (line, cols)) in split.iter().enumerate() {
        let id: usize = cols[0].parse().map_err(|_| bad_index(*line, cols[0]))?;
        if id != pos + 1 {
            return Err(bad_index(*line, cols[0]));
        }
        tokens.push(cols[1].to_string());
        heads.push(match cols[2] {
            "_" => None,
            h => {
                let h: usize = h.parse().map_err(|_| bad_index(*line, h))?;
                if h > n {
                    return Err(bad_index(*line, cols[2]));
                }
                Some(h)
            }
        });
        match cols[3] {
            "Y" => predicates.push(id),
            "_" => {}
            other => {
                return Err(CorpusError::MalformedRecord {
                    line: *line,
                    reason: format!("FILLPRED must be `Y` or `_`, found `{other}`"),
                })
            }
        }
    }

    let columns = arity - FIXED_COLUMNS;
    if columns != predicates.len() {
        return Err(CorpusError::DanglingApred {
            line: split[0].0,
            predicates: predicates.len(),
            columns,
        });
    }

    let mut b = Sentence::builder(tokens, Style::Dep);
    match heads.iter().filter(|h| h.is_some()).count() {
        0 => {}
        c if c == n => b = b.heads(heads.iter().map(|h| h.expect("all present")).collect()),
        _ => {
            return Err(CorpusError::MalformedRecord {
                line: split[0].0,
                reason: "HEAD must be given for every token or for none".into(),
            })
        }
    }
    for &p in &predicates {
        b = b.predicate(p);
    }
    for (pos, (_, cols)) in split.iter().enumerate() {
        for (k, label) in cols[FIXED_COLUMNS..].iter().enumerate() {
            if *label != "_" {
                b = b.tuple(predicates[k], SpanRef::token(pos + 1), *label);
            }
        }
    }
    b.build().map_err(|e| CorpusError::from_data(split[0].0, e))
}

fn bad_index(line: usize, value: &str) -> CorpusError {
    CorpusError::BadIndex {
        line,
        value: value.to_string(),
    }
}

/// Writes sentences in the column subset. The PRED column carries the
/// token form for predicate rows.
pub fn emit_conll(sentences: &[Sentence]) -> Result<String, CorpusError> {
    let mut out = String::new();
    for (k, s) in sentences.iter().enumerate() {
        if s.tuples().iter().any(|t| t.argument.width() != 1) {
            return Err(CorpusError::NotDependencyStyle);
        }
        if k > 0 {
            out.push('\n');
        }
        let preds: Vec<usize> = s.predicates().iter().copied().collect();
        for t in 1..=s.len() {
            let head = s.heads().map(|h| h[t - 1].to_string()).unwrap_or_else(|| "_".into());
            let is_pred = s.predicates().contains(&t);
            let mut row = vec![
                t.to_string(),
                s.token(t).to_string(),
                head,
                if is_pred { "Y".into() } else { "_".into() },
                if is_pred { s.token(t).to_string() } else { "_".into() },
            ];
            for &p in &preds {
                let role = s
                    .tuples()
                    .iter()
                    .find(|x| x.predicate == p && x.argument == SpanRef::token(t))
                    .map(|x| x.role.clone())
                    .unwrap_or_else(|| "_".into());
                row.push(role);
            }
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
    }
    Ok(out)
}
