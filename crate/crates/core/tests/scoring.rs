mod common;

use common::epsilon_checks;
use unisrl::autodiff::{Tape, Tensor};
use unisrl::network::{role_loss, tuple_score};

#[test]
fn epsilon_is_zero_and_distributions_normalize() {
    let pairs = epsilon_checks(21, 20).unwrap();
    assert!(pairs > 100, "only {pairs} pairs scored");
}

#[test]
fn scalar_epsilon_ignores_its_inputs() {
    for (p, a, r) in [(1e9, -3.0, 7.0), (-0.5, 0.25, 0.0), (f64::MAX, 0.0, 1.0)] {
        assert_eq!(tuple_score(p, a, r, 0), 0.0);
    }
}

#[test]
fn loss_picks_the_gold_role() {
    let mut tape = Tape::new();
    let s = tape.input(Tensor::matrix(2, 3, vec![0.0, 1.0, 2.0, 0.0, 0.0, 0.0]));
    let loss = role_loss(&mut tape, s, &[2, 0]).unwrap();
    let z = 1.0 + 1f64.exp() + 2f64.exp();
    let expected = -(2.0 - z.ln()) + 3f64.ln();
    assert!((tape.value(loss).item() - expected).abs() < 1e-12);
}
