//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::gradcheck::{model_check, primitive_checks};
use unisrl::decode::{decode_constrained, ConstraintSet};
use unisrl::Style;

type Outcome = Result<String, String>;

fn gradients() -> Outcome {
    let mut checked = 0;
    for seed in 1..=5 {
        for (name, result) in primitive_checks(seed, 4) {
            checked += result.map_err(|e| format!("{name}: {e}"))?;
        }
    }
    for style in [Style::Span, Style::Dep] {
        for seed in [1, 2] {
            let (name, result) = model_check(style, seed, 20);
            checked += result.map_err(|e| format!("{name}: {e}"))?;
        }
    }
    Ok(format!("{checked} coordinates within rtol 1e-4"))
}

fn decoder() -> Outcome {
    let uo = ConstraintSet {
        unique_core: true,
        non_overlap: true,
        ..ConstraintSet::none()
    };
    let mut r = common::rng(99);
    for k in 0..1000 {
        let table = common::random_table(&mut r);
        let graph = decode_constrained(&table, uo).map_err(|e| e.to_string())?;
        if !common::satisfies_u_and_o(&graph) {
            return Err(format!("table {k} violates U or O"));
        }
        let (got, best) = (table.total(&graph), common::brute_force_optimum(&table));
        if (got - best).abs() > 1e-9 {
            return Err(format!("table {k}: decoded {got}, optimum {best}"));
        }
    }
    Ok("1000 tables optimal".into())
}

fn pruning() -> Outcome {
    common::pruning_contract(7, 200)
}

fn overfit() -> Outcome {
    let mut parts = Vec::new();
    for style in [Style::Span, Style::Dep] {
        let (f1, epoch) = common::overfit(style, 7)?;
        if f1 < 99.0 {
            return Err(format!("{style} reached only {f1:.2} F1"));
        }
        parts.push(format!("{style} F1 {f1:.2} at epoch {epoch}"));
    }
    Ok(parts.join(", "))
}

fn metrics() -> Outcome {
    let checks = common::metric_fixture_checks();
    let count = checks.len();
    for (name, result) in checks {
        result.map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("{count} fixture evaluations exact"))
}

fn epsilon() -> Outcome {
    common::epsilon_checks(5, 40).map(|pairs| format!("{pairs} pairs"))
}

fn conversion() -> Outcome {
    common::conversion_properties(13, 500).map(|_| "500 trees".into())
}

fn determinism() -> Outcome {
    common::determinism(Style::Span)?;
    common::determinism(Style::Dep)?;
    Ok("identical loss and checkpoints in both styles".into())
}

fn round_trip() -> Outcome {
    common::round_trip(31, 1000).map(|_| "1000 sentences per format".into())
}

type Criterion = (&'static str, fn() -> Outcome, Option<Duration>);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 gradient correctness", gradients, Some(Duration::from_secs(120))),
        ("2 decoder optimality", decoder, Some(Duration::from_secs(60))),
        ("3 pruning contract", pruning, None),
        ("4 overfit sanity", overfit, Some(Duration::from_secs(600))),
        ("5 metric fixtures", metrics, None),
        ("6 epsilon enforcement", epsilon, None),
        ("7 conversion properties", conversion, None),
        ("8 determinism", determinism, None),
        ("9 round-trip I/O", round_trip, None),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.1?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.1}s)", elapsed.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail} ({:.1}s)", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
