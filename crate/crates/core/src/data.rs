//! Sentence, argument, role and predicate-argument tuple types shared by
//! every other module.
//!
//! Token indices are 1-based; index 0 is reserved for the syntactic root.
//! Dependency-style arguments are spans of width one, so both annotation
//! styles go through the same types.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decode::ConstraintSet;

/// The reserved null label. It encodes the absence of a relation and is
/// never stored in a tuple.
pub const EPSILON: &str = "ε";

/// Returns true for labels that denote "no relation" in input files.
pub fn is_null_label(label: &str) -> bool {
    label == EPSILON || label == "_"
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DataError {
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("index {index} out of range for sentence of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("span ({start}, {end}) is not a valid span")]
    BadSpan { start: usize, end: usize },
    #[error("argument ({start}, {end}) has width > 1 in a dependency-style sentence")]
    SpanInDepMode { start: usize, end: usize },
    #[error("the null label may not appear in a gold tuple")]
    EpsilonRole,
    #[error("duplicate predicate-argument pair ({predicate}, {start}, {end})")]
    DuplicatePair { predicate: usize, start: usize, end: usize },
    #[error("expected {expected} syntactic heads, found {found}")]
    HeadCount { expected: usize, found: usize },
}

/// Annotation style of a sentence or graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Style {
    #[serde(rename = "SPAN")]
    Span,
    #[serde(rename = "DEP")]
    Dep,
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Style::Span => f.write_str("SPAN"),
            Style::Dep => f.write_str("DEP"),
        }
    }
}

impl std::str::FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SPAN" => Ok(Style::Span),
            "DEP" | "DEPENDENCY" => Ok(Style::Dep),
            other => Err(format!("unknown style `{other}` (expected SPAN or DEP)")),
        }
    }
}

/// An inclusive token range `start..=end`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpanRef {
    pub start: usize,
    pub end: usize,
}

impl SpanRef {
    pub fn new(start: usize, end: usize) -> Result<Self, DataError> {
        if start == 0 || start > end {
            return Err(DataError::BadSpan { start, end });
        }
        Ok(SpanRef { start, end })
    }

    /// The degenerate single-token span used for dependency arguments.
    pub fn token(t: usize) -> Self {
        SpanRef { start: t, end: t }
    }

    pub fn width(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, t: usize) -> bool {
        self.start <= t && t <= self.end
    }

    pub fn overlaps(&self, other: &SpanRef) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for SpanRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.start, self.end)
    }
}

/// A labeled predicate-argument relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tuple {
    pub predicate: usize,
    pub argument: SpanRef,
    pub role: String,
}

impl Tuple {
    pub fn new(predicate: usize, argument: SpanRef, role: impl Into<String>) -> Self {
        Tuple {
            predicate,
            argument,
            role: role.into(),
        }
    }
}

/// Role labels observed in a corpus, with the null label at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct RoleInventory {
    labels: Vec<String>,
    core: Vec<bool>,
    index: HashMap<String, usize>,
}

/// Core labels under both the CoNLL-2005 (`A0`) and OntoNotes (`ARG0`) spellings.
const CORE_LABELS: &[&str] = &[
    "A0", "A1", "A2", "A3", "A4", "A5", "AA", "ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "ARG5", "ARGA",
];

pub fn is_core_label(label: &str) -> bool {
    CORE_LABELS.contains(&label)
}

impl RoleInventory {
    /// Builds an inventory from labels in first-seen order. Null labels and
    /// repeats are skipped; ε is always placed at index 0.
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut inv = RoleInventory {
            labels: vec![EPSILON.to_string()],
            core: vec![false],
            index: HashMap::from([(EPSILON.to_string(), 0)]),
        };
        for label in labels {
            inv.push(label.as_ref());
        }
        inv
    }

    fn push(&mut self, label: &str) {
        if is_null_label(label) || self.index.contains_key(label) {
            return;
        }
        self.index.insert(label.to_string(), self.labels.len());
        self.core.push(is_core_label(label));
        self.labels.push(label.to_string());
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        // ε is always present
        false
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_core(&self, index: usize) -> bool {
        self.core[index]
    }

    /// Indices of core labels, in inventory order.
    pub fn core_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.core[i]).collect()
    }
}

impl From<Vec<String>> for RoleInventory {
    fn from(labels: Vec<String>) -> Self {
        RoleInventory::new(labels)
    }
}

impl From<RoleInventory> for Vec<String> {
    fn from(inv: RoleInventory) -> Self {
        inv.labels
    }
}

/// A tokenized sentence with optional gold syntax and gold predicate-argument
/// structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    tokens: Vec<String>,
    heads: Option<Vec<usize>>,
    predicates: BTreeSet<usize>,
    tuples: BTreeSet<Tuple>,
    nominal: BTreeSet<usize>,
    style: Style,
}

impl Sentence {
    pub fn builder<I, S>(tokens: I, style: Style) -> SentenceBuilder
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SentenceBuilder {
            tokens: tokens.into_iter().map(Into::into).collect(),
            heads: None,
            predicates: BTreeSet::new(),
            tuples: Vec::new(),
            nominal: BTreeSet::new(),
            style,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Token at 1-based position `i`.
    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i - 1]
    }

    /// Character sequence of the token at 1-based position `i`.
    pub fn chars(&self, i: usize) -> Vec<char> {
        self.tokens[i - 1].chars().collect()
    }

    pub fn heads(&self) -> Option<&[usize]> {
        self.heads.as_deref()
    }

    /// Gold predicates, including those without any argument.
    pub fn predicates(&self) -> &BTreeSet<usize> {
        &self.predicates
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    /// Predicates flagged as nominal (used to filter style comparisons).
    pub fn nominal_predicates(&self) -> &BTreeSet<usize> {
        &self.nominal
    }

    pub fn style(&self) -> Style {
        self.style
    }

    pub fn gold_graph(&self) -> SrlGraph {
        SrlGraph {
            tuples: self.tuples.clone(),
            predicates: self.predicates.clone(),
            constraints: None,
        }
    }

    /// Returns a copy with the gold structure replaced by `graph`.
    pub fn with_graph(&self, graph: &SrlGraph, style: Style) -> Result<Sentence, DataError> {
        let mut b = Sentence::builder(self.tokens.clone(), style);
        b.heads = self.heads.clone();
        b.nominal = self.nominal.clone();
        b.predicates = graph.predicates().clone();
        b.tuples = graph.tuples().iter().cloned().collect();
        b.build()
    }
}

pub struct SentenceBuilder {
    tokens: Vec<String>,
    heads: Option<Vec<usize>>,
    predicates: BTreeSet<usize>,
    tuples: Vec<Tuple>,
    nominal: BTreeSet<usize>,
    style: Style,
}

impl SentenceBuilder {
    pub fn heads(mut self, heads: Vec<usize>) -> Self {
        self.heads = Some(heads);
        self
    }

    pub fn predicate(mut self, p: usize) -> Self {
        self.predicates.insert(p);
        self
    }

    pub fn nominal(mut self, p: usize) -> Self {
        self.nominal.insert(p);
        self
    }

    pub fn tuple(mut self, predicate: usize, argument: SpanRef, role: impl Into<String>) -> Self {
        self.tuples.push(Tuple::new(predicate, argument, role));
        self
    }

    pub fn build(self) -> Result<Sentence, DataError> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(DataError::EmptySentence);
        }
        let in_range = |index: usize| {
            if index == 0 || index > n {
                Err(DataError::IndexOutOfRange { index, len: n })
            } else {
                Ok(())
            }
        };
        if let Some(heads) = &self.heads {
            if heads.len() != n {
                return Err(DataError::HeadCount {
                    expected: n,
                    found: heads.len(),
                });
            }
            if let Some(&h) = heads.iter().find(|&&h| h > n) {
                return Err(DataError::IndexOutOfRange { index: h, len: n });
            }
        }
        let mut predicates = self.predicates;
        let mut tuples = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for t in self.tuples {
            in_range(t.predicate)?;
            let SpanRef { start, end } = t.argument;
            if start == 0 || start > end {
                return Err(DataError::BadSpan { start, end });
            }
            in_range(end)?;
            if self.style == Style::Dep && start != end {
                return Err(DataError::SpanInDepMode { start, end });
            }
            if is_null_label(&t.role) {
                return Err(DataError::EpsilonRole);
            }
            if !pairs.insert((t.predicate, t.argument)) {
                return Err(DataError::DuplicatePair {
                    predicate: t.predicate,
                    start,
                    end,
                });
            }
            predicates.insert(t.predicate);
            tuples.insert(t);
        }
        for &p in predicates.iter().chain(self.nominal.iter()) {
            in_range(p)?;
        }
        Ok(Sentence {
            tokens: self.tokens,
            heads: self.heads,
            predicates,
            tuples,
            nominal: self.nominal,
            style: self.style,
        })
    }
}

/// The decoded predicate-argument structure of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SrlGraph {
    tuples: BTreeSet<Tuple>,
    predicates: BTreeSet<usize>,
    constraints: Option<ConstraintSet>,
}

impl SrlGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_constraints(constraints: ConstraintSet) -> Self {
        SrlGraph {
            constraints: Some(constraints),
            ..Self::default()
        }
    }

    /// Adds a tuple; a second tuple for the same (predicate, argument) pair is rejected.
    pub fn insert(&mut self, tuple: Tuple) -> Result<(), DataError> {
        if is_null_label(&tuple.role) {
            return Err(DataError::EpsilonRole);
        }
        if self.role_of(tuple.predicate, tuple.argument).is_some() {
            return Err(DataError::DuplicatePair {
                predicate: tuple.predicate,
                start: tuple.argument.start,
                end: tuple.argument.end,
            });
        }
        self.predicates.insert(tuple.predicate);
        self.tuples.insert(tuple);
        Ok(())
    }

    /// Declares a predicate that may have no arguments.
    pub fn add_predicate(&mut self, p: usize) {
        self.predicates.insert(p);
    }

    pub fn role_of(&self, predicate: usize, argument: SpanRef) -> Option<&str> {
        let lo = Tuple::new(predicate, argument, String::new());
        self.tuples
            .range(lo..)
            .next()
            .filter(|t| t.predicate == predicate && t.argument == argument)
            .map(|t| t.role.as_str())
    }

    pub fn tuples(&self) -> &BTreeSet<Tuple> {
        &self.tuples
    }

    pub fn predicates(&self) -> &BTreeSet<usize> {
        &self.predicates
    }

    pub fn constraints(&self) -> Option<&ConstraintSet> {
        self.constraints.as_ref()
    }

    pub fn arguments_of(&self, predicate: usize) -> impl Iterator<Item = &Tuple> {
        self.tuples.iter().filter(move |t| t.predicate == predicate)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    /// Keeps only tuples (and declared predicates) whose predicate satisfies `keep`.
    pub fn retain_predicates(&mut self, mut keep: impl FnMut(usize) -> bool) {
        self.tuples.retain(|t| keep(t.predicate));
        self.predicates.retain(|&p| keep(p));
    }
}

impl FromIterator<Tuple> for SrlGraph {
    /// Collects tuples, keeping the first tuple seen for each (predicate, argument) pair.
    fn from_iter<T: IntoIterator<Item = Tuple>>(iter: T) -> Self {
        let mut g = SrlGraph::new();
        for t in iter {
            let _ = g.insert(t);
        }
        g
    }
}

/// Every candidate argument span of width at most `max_len`, in
/// lexicographic (start, end) order.
pub fn enumerate_arguments(n: usize, max_len: usize) -> Vec<SpanRef> {
    let mut out = Vec::new();
    for start in 1..=n {
        let last = (start + max_len).saturating_sub(1).min(n);
        for end in start..=last {
            out.push(SpanRef { start, end });
        }
    }
    out
}

/// Every token is a candidate predicate.
pub fn enumerate_predicates(n: usize) -> Result<Vec<usize>, DataError> {
    if n == 0 {
        return Err(DataError::EmptySentence);
    }
    Ok((1..=n).collect())
}
