//! Decodes one hand-written score table with and without the
//! unique-core-role and non-overlap constraints.
//!
//! ```text
//! cargo run --example constrained_decoding
//! ```

use std::sync::Arc;

use unisrl::data::RoleInventory;
use unisrl::decode::{decode_constrained, decode_greedy, ConstraintSet, ScoreTable};
use unisrl::SpanRef;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let roles = Arc::new(RoleInventory::new(["A0", "A1", "AM-TMP"]));
    let arguments = vec![
        SpanRef::new(1, 1)?,
        SpanRef::new(1, 2)?,
        SpanRef::new(4, 5)?,
        SpanRef::new(6, 6)?,
    ];
    // columns: ε, A0, A1, AM-TMP
    #[rustfmt::skip]
    let scores = vec![
        0.0, 2.0, 0.5, -1.0,
        0.0, 2.5, 0.0, -1.0,
        0.0, 1.0, 3.0, -2.0,
        0.0, -1.0, 2.2, 0.8,
    ];
    let table = ScoreTable::new(vec![3], arguments, roles, scores)?;

    let greedy = decode_greedy(&table);
    println!("per-pair argmax (total {:.2}):", table.total(&greedy));
    for t in greedy.tuples() {
        println!("  predicate {} argument {} role {}", t.predicate, t.argument, t.role);
    }
    let uo: ConstraintSet = "UO".parse()?;
    let constrained = decode_constrained(&table, uo)?;
    println!("with {uo} (total {:.2}):", table.total(&constrained));
    for t in constrained.tuples() {
        println!("  predicate {} argument {} role {}", t.predicate, t.argument, t.role);
    }
    Ok(())
}
