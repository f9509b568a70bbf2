//! Finite-difference checks of every tape primitive and of the full model
//! loss.

use rand::Rng;

use unisrl::autodiff::{ParamStore, Tape, Tensor, Var};
use unisrl::corpus::build_vocab;
use unisrl::network::{DropoutMasks, ModelConfig, PredicateSource, SrlModel};
use unisrl::{Sentence, SpanRef, Style};

use super::{check_inputs, check_params, random_tensor, rng, sample_coords, weighted_sum};

/// One named check and its outcome.
pub type Check = (String, Result<usize, String>);

fn dims<R: Rng>(rng: &mut R) -> (usize, usize) {
    (rng.random_range(1..=8), rng.random_range(1..=8))
}

/// Every primitive on randomized shapes up to `8 × 8`, `rounds` times.
pub fn primitive_checks(seed: u64, rounds: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let mut r = rng(seed);
    for round in 0..rounds {
        let s = seed * 1000 + round as u64;
        let (m, n) = dims(&mut r);
        let k = r.random_range(1..=8);
        let a = random_tensor(&mut r, &[m, n]);
        let b = random_tensor(&mut r, &[m, n]);
        let c = random_tensor(&mut r, &[n, k]);
        let d = random_tensor(&mut r, &[m, k]);
        let bias = random_tensor(&mut r, &[n]);
        let scalar = random_tensor(&mut r, &[]);
        let mut push = |name: &str, inputs: &[Tensor], f: &dyn Fn(&mut Tape<'_>, &[Var]) -> Var| {
            out.push((format!("{name} {m}x{n}"), check_inputs(inputs, |t, v| f(t, v))));
        };

        push("matmul", &[a.clone(), c.clone()], &|t, v| {
            let y = t.matmul(v[0], v[1]).unwrap();
            weighted_sum(t, y, s)
        });
        push("add", &[a.clone(), b.clone()], &|t, v| {
            let y = t.add(v[0], v[1]).unwrap();
            weighted_sum(t, y, s)
        });
        push("sub", &[a.clone(), b.clone()], &|t, v| {
            let y = t.sub(v[0], v[1]).unwrap();
            weighted_sum(t, y, s)
        });
        push("mul", &[a.clone(), b.clone()], &|t, v| {
            let y = t.mul(v[0], v[1]).unwrap();
            weighted_sum(t, y, s)
        });
        push("mul scalar", &[a.clone(), scalar.clone()], &|t, v| {
            let y = t.mul(v[0], v[1]).unwrap();
            weighted_sum(t, y, s)
        });
        push("scale", std::slice::from_ref(&a), &|t, v| {
            let y = t.scale(v[0], -1.7);
            weighted_sum(t, y, s)
        });
        push("add_bias", &[a.clone(), bias.clone()], &|t, v| {
            let y = t.add_bias(v[0], v[1]).unwrap();
            weighted_sum(t, y, s)
        });
        push("concat rows", &[a.clone(), b.clone()], &|t, v| {
            let y = t.concat(&[v[0], v[1]], 0).unwrap();
            weighted_sum(t, y, s)
        });
        push("concat cols", &[a.clone(), d.clone()], &|t, v| {
            let y = t.concat(&[v[0], v[1]], 1).unwrap();
            weighted_sum(t, y, s)
        });
        let start = r.random_range(0..n);
        let len = r.random_range(1..=n - start);
        push("slice cols", std::slice::from_ref(&a), &|t, v| {
            let y = t.slice(v[0], 1, start, len).unwrap();
            weighted_sum(t, y, s)
        });
        let rstart = r.random_range(0..m);
        let rlen = r.random_range(1..=m - rstart);
        push("slice rows", std::slice::from_ref(&a), &|t, v| {
            let y = t.slice(v[0], 0, rstart, rlen).unwrap();
            weighted_sum(t, y, s)
        });
        push("sigmoid", std::slice::from_ref(&a), &|t, v| {
            let y = t.sigmoid(v[0]);
            weighted_sum(t, y, s)
        });
        push("tanh", std::slice::from_ref(&a), &|t, v| {
            let y = t.tanh(v[0]);
            weighted_sum(t, y, s)
        });
        push("relu", std::slice::from_ref(&a), &|t, v| {
            let y = t.relu(v[0]);
            weighted_sum(t, y, s)
        });
        for axis in 0..2 {
            push(&format!("softmax axis {axis}"), std::slice::from_ref(&a), &|t, v| {
                let y = t.softmax(v[0], axis).unwrap();
                weighted_sum(t, y, s)
            });
            push(
                &format!("log_softmax axis {axis}"),
                std::slice::from_ref(&a),
                &|t, v| {
                    let y = t.log_softmax(v[0], axis).unwrap();
                    weighted_sum(t, y, s)
                },
            );
        }
        push("sum", std::slice::from_ref(&a), &|t, v| t.sum(v[0]));
        let mask = Tensor::new(
            vec![m, n],
            (0..m * n)
                .map(|_| if r.random_bool(0.3) { 0.0 } else { 1.0 / 0.7 })
                .collect(),
        )
        .unwrap();
        push("dropout", std::slice::from_ref(&a), &|t, v| {
            let y = t.dropout(v[0], &mask).unwrap();
            weighted_sum(t, y, s)
        });
        let rows: Vec<usize> = (0..r.random_range(1..=8)).map(|_| r.random_range(0..m)).collect();
        push("gather_rows", std::slice::from_ref(&a), &|t, v| {
            let y = t.gather_rows(v[0], &rows).unwrap();
            weighted_sum(t, y, s)
        });
        let mut segments = Vec::new();
        let mut pos = 0;
        while pos < m {
            let len = r.random_range(1..=m - pos);
            segments.push((pos, len));
            pos += len;
        }
        push("segment_max", std::slice::from_ref(&a), &|t, v| {
            let y = t.segment_max(v[0], &segments).unwrap();
            weighted_sum(t, y, s)
        });
        push("transpose", std::slice::from_ref(&a), &|t, v| {
            let y = t.transpose(v[0]).unwrap();
            weighted_sum(t, y, s)
        });
        push("reshape", std::slice::from_ref(&a), &|t, v| {
            let y = t.reshape(v[0], &[n, m]).unwrap();
            weighted_sum(t, y, s)
        });
        let cols: Vec<usize> = (0..m).map(|_| r.random_range(0..n)).collect();
        push("pick", std::slice::from_ref(&a), &|t, v| {
            let y = t.pick(v[0], &cols).unwrap();
            weighted_sum(t, y, s)
        });

        let mut store = ParamStore::new();
        let table = store.add("table", random_tensor(&mut r, &[m, n]));
        let weight = store.add("weight", random_tensor(&mut r, &[n, k]));
        let ids: Vec<usize> = (0..r.random_range(1..=8)).map(|_| r.random_range(0..m)).collect();
        let coords: Vec<_> = store
            .ids()
            .flat_map(|id| (0..store.get(id).numel()).map(move |j| (id, j)))
            .collect();
        out.push((
            format!("lookup+param {m}x{n}"),
            check_params(&store, &coords, |t| {
                let e = t.lookup(table, &ids).unwrap();
                let w = t.param(weight);
                let y = t.matmul(e, w).unwrap();
                weighted_sum(t, y, s)
            }),
        ));
    }
    out
}

/// A tiny configuration whose loss can be differentiated numerically.
pub fn tiny_config(style: Style) -> ModelConfig {
    ModelConfig {
        word_dim: 5,
        char_dim: 3,
        char_filters: 2,
        lstm_layers: 2,
        lstm_hidden: 4,
        mlp_dim: 5,
        scorer_mlp_dim: 4,
        width_dim: 3,
        max_span_len: if style == Style::Span { 3 } else { 1 },
        beam_a: 1.0,
        ..ModelConfig::toy(style)
    }
}

fn gradcheck_sentence(style: Style) -> Sentence {
    let b = Sentence::builder(["Ann", "runs", "fast"], style).predicate(2);
    let b = match style {
        Style::Span => b
            .tuple(2, SpanRef::new(1, 1).unwrap(), "A0")
            .tuple(2, SpanRef::new(3, 3).unwrap(), "AM-MNR"),
        Style::Dep => b
            .tuple(2, SpanRef::token(1), "A0")
            .tuple(2, SpanRef::token(3), "AM-MNR"),
    };
    b.build().unwrap()
}

/// The full loss, dropout included with fixed masks, at `count` random
/// parameter coordinates.
pub fn model_check(style: Style, seed: u64, count: usize) -> Check {
    let sentence = gradcheck_sentence(style);
    let corpus = vec![sentence.clone()];
    let vocab = build_vocab(&corpus, 1).unwrap();
    let config = tiny_config(style);
    let mut r = rng(seed);
    let model = SrlModel::new(config.clone(), vocab, None, &mut r).unwrap();
    let input = model.input(&sentence, None);
    let masks = DropoutMasks::sample(&config, sentence.len(), &mut r);
    let gold = sentence.gold_graph();
    let preds: Vec<usize> = sentence.predicates().iter().copied().collect();
    let coords = sample_coords(model.params(), count, &mut r);
    let result = check_params(model.params(), &coords, |t| {
        let fwd = model
            .forward(t, &input, PredicateSource::Given(&preds), Some(&masks))
            .unwrap();
        model.loss(t, &fwd, &gold).unwrap().0.unwrap()
    });
    (format!("full model {style}"), result)
}
