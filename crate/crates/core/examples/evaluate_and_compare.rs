//! Scores a prediction file in both evaluation modes, then compares a span
//! system and a dependency system on the dependency metric.
//!
//! ```text
//! cargo run --example evaluate_and_compare
//! ```

use std::path::Path;

use unisrl::corpus::read_corpus;
use unisrl::eval::{compare_styles, convert_corpus, evaluate, span_to_dep, EvalMode};
use unisrl::{Sentence, SrlGraph, Style};

fn graphs(corpus: &[Sentence]) -> Vec<SrlGraph> {
    corpus.iter().map(Sentence::gold_graph).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let gold = read_corpus(&fixtures.join("metrics/pair5.gold.jsonl"))?;
    let pred = read_corpus(&fixtures.join("metrics/pair5.pred.jsonl"))?;
    for mode in [EvalMode::EndToEnd, EvalMode::PreIdentified] {
        let report = evaluate(&graphs(&pred), &graphs(&gold), mode, Style::Span)?;
        print!("{}", report.to_table());
    }

    let span_gold = read_corpus(&fixtures.join("toy_span.jsonl"))?;
    let dep_gold = convert_corpus(&span_gold)?;
    // A span system that drops the last argument of every sentence, and a
    // dependency system that is perfect.
    let span_pred: Vec<SrlGraph> = span_gold
        .iter()
        .map(|s| {
            let mut tuples: Vec<_> = s.tuples().iter().cloned().collect();
            tuples.pop();
            tuples.into_iter().collect()
        })
        .collect();
    let dep_pred = graphs(&dep_gold);
    let heads = span_gold[0].heads().expect("fixture has heads");
    println!("\nfirst predicted sentence after head conversion:");
    for t in span_to_dep(&span_pred[0], heads)?.tuples() {
        println!("  predicate {} argument {} role {}", t.predicate, t.argument, t.role);
    }
    let cmp = compare_styles(&span_pred, &dep_pred, &dep_gold)?;
    print!("\n{}", cmp.to_table());
    Ok(())
}
