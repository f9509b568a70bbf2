//! Builds a small expression on the tape, backpropagates, and compares every
//! gradient with a central finite difference.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use unisrl::autodiff::{Tape, Tensor, Var};

fn loss(tape: &mut Tape<'_>, x: Var, w: Var) -> Var {
    let h = tape.matmul(x, w).unwrap();
    let h = tape.tanh(h);
    let p = tape.log_softmax(h, 1).unwrap();
    let picked = tape.pick(p, &[1, 0]).unwrap();
    let total = tape.sum(picked);
    tape.scale(total, -1.0)
}

fn value(x: &Tensor, w: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let (xv, wv) = (tape.input(x.clone()), tape.input(w.clone()));
    let out = loss(&mut tape, xv, wv);
    tape.value(out).item()
}

fn main() {
    let x = Tensor::matrix(2, 3, vec![0.5, -1.0, 0.25, 1.5, 0.0, -0.75]);
    let w = Tensor::matrix(3, 2, vec![0.1, -0.2, 0.3, 0.4, -0.5, 0.6]);

    let mut tape = Tape::new();
    let (xv, wv) = (tape.input(x.clone()), tape.input(w.clone()));
    let out = loss(&mut tape, xv, wv);
    println!("loss {:.10}", tape.value(out).item());
    let grads = tape.backward(out).unwrap();
    let analytic = grads.get(wv).unwrap();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for j in 0..w.numel() {
        let (mut plus, mut minus) = (w.clone(), w.clone());
        plus.data_mut()[j] += h;
        minus.data_mut()[j] -= h;
        let numeric = (value(&x, &plus) - value(&x, &minus)) / (2.0 * h);
        let a = analytic.data()[j];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-12);
        worst = worst.max(rel);
        println!("dW[{j}]  analytic {a:+.10}  numeric {numeric:+.10}");
    }
    println!("largest relative error {worst:.2e}");
}
