use std::sync::Arc;

use super::DecodeError;
use crate::data::{RoleInventory, SpanRef, SrlGraph};

/// Tuple scores over surviving predicates × arguments × roles. The ε
/// column is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    predicates: Vec<usize>,
    arguments: Vec<SpanRef>,
    roles: Arc<RoleInventory>,
    scores: Vec<f64>,
}

impl ScoreTable {
    /// `scores` is row-major `[predicate][argument][role]`. Entries in the ε
    /// column are overwritten with zero.
    pub fn new(
        predicates: Vec<usize>,
        arguments: Vec<SpanRef>,
        roles: Arc<RoleInventory>,
        mut scores: Vec<f64>,
    ) -> Result<Self, DecodeError> {
        let r = roles.len();
        let expected = predicates.len() * arguments.len() * r;
        if scores.len() != expected {
            return Err(DecodeError::TableShape {
                expected,
                found: scores.len(),
            });
        }
        for row in scores.chunks_mut(r) {
            row[0] = 0.0;
        }
        Ok(ScoreTable {
            predicates,
            arguments,
            roles,
            scores,
        })
    }

    pub fn predicates(&self) -> &[usize] {
        &self.predicates
    }

    pub fn arguments(&self) -> &[SpanRef] {
        &self.arguments
    }

    pub fn roles(&self) -> &RoleInventory {
        &self.roles
    }

    pub fn num_roles(&self) -> usize {
        self.roles.len()
    }

    /// Number of candidate tuples, ε included.
    pub fn num_tuples(&self) -> usize {
        self.scores.len()
    }

    pub fn score(&self, pi: usize, ai: usize, r: usize) -> f64 {
        let a = self.arguments.len();
        self.scores[(pi * a + ai) * self.roles.len() + r]
    }

    pub fn role_scores(&self, pi: usize, ai: usize) -> &[f64] {
        let r = self.roles.len();
        let start = (pi * self.arguments.len() + ai) * r;
        &self.scores[start..start + r]
    }

    /// Sum of the scores of every tuple in `graph` that the table covers.
    pub fn total(&self, graph: &SrlGraph) -> f64 {
        let mut total = 0.0;
        for t in graph.tuples() {
            let pi = self.predicates.iter().position(|&p| p == t.predicate);
            let ai = self.arguments.iter().position(|&a| a == t.argument);
            let r = self.roles.index_of(&t.role);
            if let (Some(pi), Some(ai), Some(r)) = (pi, ai, r) {
                total += self.score(pi, ai, r);
            }
        }
        total
    }
}
