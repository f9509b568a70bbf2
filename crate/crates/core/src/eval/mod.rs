//! Labeled precision, recall and F1 over predicate-argument tuples, and the
//! span-to-dependency head conversion.
//!
//! A predicted tuple matches a gold tuple when predicate, argument
//! boundaries and role are all identical. Percentages are rounded half-up
//! to two decimals; raw counts are reported alongside.

mod convert;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{SrlGraph, Style};

pub use convert::{compare_styles, convert_corpus, span_heads, span_to_dep, StyleComparison};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{predicted} predicted sentences but {gold} gold sentences")]
    LengthMismatch { predicted: usize, gold: usize },
    #[error("sentence {sentence} has no syntactic heads")]
    MissingSyntax { sentence: usize },
    #[error("syntactic heads contain a cycle through token {token}")]
    CyclicHeads { token: usize },
    #[error("syntactic heads have {roots} roots; exactly one is required")]
    MultipleRoots { roots: usize },
    #[error("token {index} outside a sentence of {len} heads")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sentence {sentence}: {reason}")]
    BadGraph { sentence: usize, reason: String },
}

/// Whether predicates are detected by the system or supplied from gold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum EvalMode {
    #[default]
    #[serde(rename = "end-to-end")]
    EndToEnd,
    #[serde(rename = "pre-identified")]
    PreIdentified,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::EndToEnd => "end-to-end",
            EvalMode::PreIdentified => "pre-identified",
        })
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "end-to-end" | "e2e" | "endtoend" => Ok(EvalMode::EndToEnd),
            "pre-identified" | "preidentified" | "gold-predicates" => Ok(EvalMode::PreIdentified),
            other => Err(format!("unknown evaluation mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
    pub mode: EvalMode,
    pub style: Style,
}

/// `100 · num / den` rounded half-up to two decimals; 0 when `den` is 0.
pub fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        return 0.0;
    }
    let (num, den) = (num as u128, den as u128);
    let hundredths = (2 * 10_000 * num + den) / (2 * den);
    hundredths as f64 / 100.0
}

impl EvalReport {
    pub fn from_counts(matched: usize, predicted: usize, gold: usize, mode: EvalMode, style: Style) -> Self {
        EvalReport {
            precision: percent(matched, predicted),
            recall: percent(matched, gold),
            f1: percent(2 * matched, predicted + gold),
            matched,
            predicted,
            gold,
            mode,
            style,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        format!(
            "style  mode            P       R       F1      matched  predicted  gold\n\
             {:<6} {:<15} {:>6.2}  {:>6.2}  {:>6.2}  {:>7}  {:>9}  {:>4}\n",
            self.style.to_string(),
            self.mode.to_string(),
            self.precision,
            self.recall,
            self.f1,
            self.matched,
            self.predicted,
            self.gold
        )
    }
}

/// Scores aligned lists of predicted and gold graphs.
///
/// In pre-identified mode, predicted tuples whose predicate is not a gold
/// predicate are discarded before counting.
pub fn evaluate(
    predicted: &[SrlGraph],
    gold: &[SrlGraph],
    mode: EvalMode,
    style: Style,
) -> Result<EvalReport, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let (mut matched, mut n_pred, mut n_gold) = (0, 0, 0);
    for (p, g) in predicted.iter().zip(gold) {
        let gold_preds: &BTreeSet<usize> = g.predicates();
        for t in p.tuples() {
            if mode == EvalMode::PreIdentified && !gold_preds.contains(&t.predicate) {
                continue;
            }
            n_pred += 1;
            if g.tuples().contains(t) {
                matched += 1;
            }
        }
        n_gold += g.len();
    }
    Ok(EvalReport::from_counts(matched, n_pred, n_gold, mode, style))
}
