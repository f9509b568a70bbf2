use serde::{Deserialize, Serialize};

use super::{evaluate, EvalError, EvalMode, EvalReport};
use crate::data::{Sentence, SpanRef, SrlGraph, Style, Tuple};

/// Checks that `heads` (1-based tokens, 0 = root) form a tree.
fn check_tree(heads: &[usize]) -> Result<(), EvalError> {
    let n = heads.len();
    if let Some(&h) = heads.iter().find(|&&h| h > n) {
        return Err(EvalError::IndexOutOfRange { index: h, len: n });
    }
    let roots = heads.iter().filter(|&&h| h == 0).count();
    if roots != 1 {
        return Err(EvalError::MultipleRoots { roots });
    }
    for start in 1..=n {
        let mut t = start;
        let mut steps = 0;
        while t != 0 {
            t = heads[t - 1];
            steps += 1;
            if steps > n {
                return Err(EvalError::CyclicHeads { token: start });
            }
        }
    }
    Ok(())
}

/// Tokens of `span` whose syntactic head lies outside the span.
pub fn span_heads(span: SpanRef, heads: &[usize]) -> Vec<usize> {
    (span.start..=span.end)
        .filter(|&t| {
            let h = heads[t - 1];
            h < span.start || h > span.end
        })
        .collect()
}

/// Replaces every span argument by its head tokens under the gold tree
/// `heads`. A span with several heads yields one tuple per head; repeated
/// (predicate, head) pairs keep the first role in tuple order.
pub fn span_to_dep(graph: &SrlGraph, heads: &[usize]) -> Result<SrlGraph, EvalError> {
    if heads.is_empty() {
        return Err(EvalError::MissingSyntax { sentence: 0 });
    }
    check_tree(heads)?;
    let n = heads.len();
    let mut out = SrlGraph::new();
    for &p in graph.predicates() {
        out.add_predicate(p);
    }
    for t in graph.tuples() {
        if t.argument.end > n || t.predicate > n {
            return Err(EvalError::IndexOutOfRange {
                index: t.argument.end.max(t.predicate),
                len: n,
            });
        }
        for h in span_heads(t.argument, heads) {
            let _ = out.insert(Tuple::new(t.predicate, SpanRef::token(h), t.role.clone()));
        }
    }
    Ok(out)
}

/// Converts a span-style corpus to dependency style with its own gold heads.
pub fn convert_corpus(sentences: &[Sentence]) -> Result<Vec<Sentence>, EvalError> {
    sentences
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let heads = s.heads().ok_or(EvalError::MissingSyntax { sentence: k })?;
            let dep = span_to_dep(&s.gold_graph(), heads).map_err(|e| match e {
                EvalError::MissingSyntax { .. } => EvalError::MissingSyntax { sentence: k },
                other => other,
            })?;
            s.with_graph(&dep, Style::Dep).map_err(|e| EvalError::BadGraph {
                sentence: k,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Dependency-style scores of a dependency system and of a span system
/// after head conversion, against the same gold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleComparison {
    pub dependency: EvalReport,
    pub span_converted: EvalReport,
    /// `dependency.f1 − span_converted.f1`, in percentage points.
    pub delta_f1: f64,
}

impl StyleComparison {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("comparison serializes")
    }

    pub fn to_table(&self) -> String {
        format!(
            "system          P       R       F1\n\
             dependency      {:>6.2}  {:>6.2}  {:>6.2}\n\
             span-converted  {:>6.2}  {:>6.2}  {:>6.2}\n\
             delta F1        {:>+22.2}\n",
            self.dependency.precision,
            self.dependency.recall,
            self.dependency.f1,
            self.span_converted.precision,
            self.span_converted.recall,
            self.span_converted.f1,
            self.delta_f1
        )
    }
}

/// Compares span predictions (converted with the gold heads of `gold`) and
/// dependency predictions on the dependency gold in `gold`. Nominal
/// predicates are excluded from all three sides.
pub fn compare_styles(
    span_preds: &[SrlGraph],
    dep_preds: &[SrlGraph],
    gold: &[Sentence],
) -> Result<StyleComparison, EvalError> {
    for len in [span_preds.len(), dep_preds.len()] {
        if len != gold.len() {
            return Err(EvalError::LengthMismatch {
                predicted: len,
                gold: gold.len(),
            });
        }
    }
    let mut gold_graphs = Vec::with_capacity(gold.len());
    let mut converted = Vec::with_capacity(gold.len());
    let mut dep = Vec::with_capacity(gold.len());
    for (k, s) in gold.iter().enumerate() {
        let verbal = |p: usize| !s.nominal_predicates().contains(&p);
        let heads = s.heads().ok_or(EvalError::MissingSyntax { sentence: k })?;
        let mut g = s.gold_graph();
        g.retain_predicates(verbal);
        let mut c = span_to_dep(&span_preds[k], heads)?;
        c.retain_predicates(verbal);
        let mut d = dep_preds[k].clone();
        d.retain_predicates(verbal);
        gold_graphs.push(g);
        converted.push(c);
        dep.push(d);
    }
    let dependency = evaluate(&dep, &gold_graphs, EvalMode::EndToEnd, Style::Dep)?;
    let span_converted = evaluate(&converted, &gold_graphs, EvalMode::EndToEnd, Style::Dep)?;
    let hundredths = |x: f64| (x * 100.0).round() as i64;
    let delta_f1 = (hundredths(dependency.f1) - hundredths(span_converted.f1)) as f64 / 100.0;
    Ok(StyleComparison {
        dependency,
        span_converted,
        delta_f1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(p: usize, i: usize, j: usize, r: &str) -> SrlGraph {
        [Tuple::new(p, SpanRef { start: i, end: j }, r)].into_iter().collect()
    }

    #[test]
    fn single_outside_head() {
        // 1 -> 0, 2 -> 3, 3 -> 5, 4 -> 3, 5 -> 1
        let heads = [0, 3, 5, 3, 1];
        let d = span_to_dep(&one(1, 2, 4, "A1"), &heads).unwrap();
        assert_eq!(d.role_of(1, SpanRef::token(3)), Some("A1"));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn width_one_is_its_own_head() {
        let heads = [0, 1, 2];
        let d = span_to_dep(&one(1, 3, 3, "A0"), &heads).unwrap();
        assert_eq!(d, one(1, 3, 3, "A0"));
    }

    #[test]
    fn two_headed_span() {
        // 1 -> 3, 2 -> 4, 3 -> 0, 4 -> 3
        let heads = [3, 4, 0, 3];
        let d = span_to_dep(&one(3, 1, 2, "AM-TMP"), &heads).unwrap();
        let args: Vec<_> = d.tuples().iter().map(|t| t.argument).collect();
        assert_eq!(args, vec![SpanRef::token(1), SpanRef::token(2)]);
    }

    #[test]
    fn malformed_trees() {
        let g = one(1, 1, 1, "A0");
        assert_eq!(span_to_dep(&g, &[]), Err(EvalError::MissingSyntax { sentence: 0 }));
        assert_eq!(span_to_dep(&g, &[0, 0]), Err(EvalError::MultipleRoots { roots: 2 }));
        assert!(matches!(
            span_to_dep(&g, &[0, 3, 2]),
            Err(EvalError::CyclicHeads { .. })
        ));
    }

    #[test]
    fn identical_graphs_have_zero_delta() {
        let gold = Sentence::builder(["He", "left", "early"], Style::Dep)
            .heads(vec![2, 0, 2])
            .tuple(2, SpanRef::token(1), "A0")
            .tuple(2, SpanRef::token(3), "AM-TMP")
            .build()
            .unwrap();
        let g = gold.gold_graph();
        let c = compare_styles(std::slice::from_ref(&g), std::slice::from_ref(&g), &[gold]).unwrap();
        assert_eq!(c.delta_f1, 0.0);
        assert_eq!(c.dependency.f1, 100.0);
    }

    #[test]
    fn nominal_predicates_are_ignored() {
        let gold = Sentence::builder(["a", "b", "c"], Style::Dep)
            .heads(vec![2, 0, 2])
            .tuple(2, SpanRef::token(1), "A0")
            .tuple(3, SpanRef::token(1), "A0")
            .nominal(3)
            .build()
            .unwrap();
        let dep = one(2, 1, 1, "A0");
        let c = compare_styles(std::slice::from_ref(&dep), std::slice::from_ref(&dep), &[gold]).unwrap();
        assert_eq!(c.dependency.gold, 1);
        assert_eq!(c.dependency.f1, 100.0);
    }
}
