use std::cmp::Ordering;

use crate::data::SpanRef;

/// Candidates kept after pruning, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Beam {
    kept: Vec<usize>,
    capacity: usize,
}

impl Beam {
    /// Indices into the candidate list, in non-increasing score order.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }
}

/// `⌈β·n⌉`, tolerant of floating-point noise in the product.
pub fn beam_capacity(beta: f64, n: usize) -> usize {
    let raw = beta * n as f64;
    let rounded = raw.round();
    if (raw - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        raw.ceil() as usize
    }
}

/// Keeps the top `⌈β·n⌉` candidates by score. Ties go to the smaller start,
/// then the smaller end.
pub fn prune(candidates: &[SpanRef], scores: &[f64], n: usize, beta: f64) -> Beam {
    assert_eq!(candidates.len(), scores.len(), "one score per candidate");
    let capacity = beam_capacity(beta, n);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| candidates[a].cmp(&candidates[b]))
    });
    order.truncate(capacity);
    Beam { kept: order, capacity }
}
