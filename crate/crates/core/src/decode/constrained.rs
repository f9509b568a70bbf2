use std::collections::HashMap;

use super::{ConstraintSet, DecodeError, ScoreTable};
use crate::data::{SrlGraph, Tuple};

/// Largest number of core roles the bitmask decoder tracks.
pub const MAX_CORE_ROLES: usize = 12;

/// Independent per-pair argmax. ε wins ties because it has the lowest index.
pub fn decode_greedy(table: &ScoreTable) -> SrlGraph {
    let mut graph = SrlGraph::new();
    for (pi, &p) in table.predicates().iter().enumerate() {
        for (ai, &a) in table.arguments().iter().enumerate() {
            let r = argmax(table.role_scores(pi, ai));
            if r != 0 {
                graph
                    .insert(Tuple::new(p, a, table.roles().label(r)))
                    .expect("one role per pair");
            }
        }
    }
    graph
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Copy)]
struct State {
    mask: u16,
    last_end: usize,
    score: f64,
    parent: usize,
    role: usize,
}

/// Maximum-score role assignment per predicate subject to `constraints`.
///
/// For each predicate the arguments are visited in order of end index. A
/// state records the set of core roles already used (U) and the last
/// covered token (O); each argument either takes ε or a role compatible
/// with the state. C and R are applied afterwards as filters.
pub fn decode_constrained(table: &ScoreTable, constraints: ConstraintSet) -> Result<SrlGraph, DecodeError> {
    let roles = table.roles();
    let num_roles = roles.len();
    let mut core_bit = vec![None; num_roles];
    if constraints.unique_core {
        let core = roles.core_indices();
        if core.len() > MAX_CORE_ROLES {
            return Err(DecodeError::CoreMaskOverflow {
                count: core.len(),
                max: MAX_CORE_ROLES,
            });
        }
        for (bit, &r) in core.iter().enumerate() {
            core_bit[r] = Some(1u16 << bit);
        }
    }

    let mut order: Vec<usize> = (0..table.arguments().len()).collect();
    order.sort_by_key(|&ai| {
        let a = table.arguments()[ai];
        (a.end, a.start)
    });

    let mut graph = SrlGraph::with_constraints(constraints);
    for (pi, &p) in table.predicates().iter().enumerate() {
        let mut layers: Vec<Vec<State>> = vec![vec![State {
            mask: 0,
            last_end: 0,
            score: 0.0,
            parent: 0,
            role: 0,
        }]];
        for &ai in &order {
            let arg = table.arguments()[ai];
            let scores = table.role_scores(pi, ai);
            let prev = layers.last().expect("non-empty");
            let mut next: Vec<State> = Vec::new();
            let mut index: HashMap<(u16, usize), usize> = HashMap::new();
            for (si, s) in prev.iter().enumerate() {
                for (r, &score) in scores.iter().enumerate() {
                    let (mut mask, mut last_end) = (s.mask, s.last_end);
                    if r != 0 {
                        if constraints.non_overlap {
                            if arg.start <= s.last_end {
                                continue;
                            }
                            last_end = arg.end;
                        }
                        if let Some(bit) = core_bit[r] {
                            if mask & bit != 0 {
                                continue;
                            }
                            mask |= bit;
                        }
                    }
                    let cand = State {
                        mask,
                        last_end,
                        score: s.score + score,
                        parent: si,
                        role: r,
                    };
                    match index.get(&(mask, last_end)) {
                        Some(&k) => {
                            if cand.score > next[k].score {
                                next[k] = cand;
                            }
                        }
                        None => {
                            index.insert((mask, last_end), next.len());
                            next.push(cand);
                        }
                    }
                }
            }
            layers.push(next);
        }

        let last = layers.last().expect("non-empty");
        let mut best = 0;
        for (k, s) in last.iter().enumerate() {
            if s.score > last[best].score {
                best = k;
            }
        }
        let mut chosen = Vec::new();
        let mut k = best;
        for (step, &ai) in order.iter().enumerate().rev() {
            let s = layers[step + 1][k];
            if s.role != 0 {
                chosen.push(Tuple::new(p, table.arguments()[ai], roles.label(s.role)));
            }
            k = s.parent;
        }
        chosen.reverse();
        for t in filter_c_r(chosen, constraints) {
            graph.insert(t).expect("one role per pair");
        }
    }
    Ok(graph)
}

/// Drops `C-X` without an earlier `X` and `R-X` without any `X`.
fn filter_c_r(tuples: Vec<Tuple>, constraints: ConstraintSet) -> Vec<Tuple> {
    if !constraints.continuation && !constraints.reference {
        return tuples;
    }
    let keep = |t: &Tuple| {
        if constraints.continuation {
            if let Some(base) = t.role.strip_prefix("C-") {
                return tuples
                    .iter()
                    .any(|o| o.role == base && o.argument.start < t.argument.start);
            }
        }
        if constraints.reference {
            if let Some(base) = t.role.strip_prefix("R-") {
                return tuples.iter().any(|o| o.role == base);
            }
        }
        true
    };
    tuples.iter().filter(|t| keep(t)).cloned().collect()
}
