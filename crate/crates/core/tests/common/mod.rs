//! Independent oracles and generators shared by the integration tests.

#![allow(dead_code)]

pub mod gradcheck;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unisrl::autodiff::{GradStore, ParamId, ParamStore, Tape, Tensor, Var};
use unisrl::data::{is_core_label, RoleInventory};
use unisrl::decode::ScoreTable;
use unisrl::{Sentence, SpanRef, SrlGraph, Style, Tuple};

pub const STEP: f64 = 1e-5;
pub const RTOL: f64 = 1e-4;
/// Absolute floor for gradients whose magnitude is near round-off.
pub const ATOL: f64 = 1e-8;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn grad_close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= RTOL * analytic.abs().max(numeric.abs()) + ATOL
}

/// Reduces any output to a scalar with fixed random weights so that every
/// element carries a distinct upstream gradient.
pub fn weighted_sum(tape: &mut Tape<'_>, out: Var, seed: u64) -> Var {
    let shape = tape.shape(out).to_vec();
    let w = random_tensor(&mut rng(seed), &shape);
    let w = tape.constant(w);
    let prod = tape.mul(out, w).unwrap();
    tape.sum(prod)
}

/// Central-difference check of `f` with respect to every element of every
/// input tensor. Returns the number of coordinates checked, or a message
/// describing the first mismatch.
pub fn check_inputs<F>(inputs: &[Tensor], f: F) -> Result<usize, String>
where
    F: Fn(&mut Tape<'_>, &[Var]) -> Var,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.input(t.clone())).collect();
    let out = f(&mut tape, &vars);
    let grads = tape.backward(out).map_err(|e| e.to_string())?;

    let eval = |values: &[Tensor]| {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|t| tape.input(t.clone())).collect();
        let out = f(&mut tape, &vars);
        tape.value(out).item()
    };

    let mut checked = 0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads
            .get(*v)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(inputs[i].shape()));
        for j in 0..inputs[i].numel() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += STEP;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= STEP;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * STEP);
            let a = analytic.data()[j];
            if !grad_close(a, numeric) {
                return Err(format!("input {i} element {j}: analytic {a:e}, numeric {numeric:e}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Central-difference check of a scalar function of parameters at the
/// given `(parameter, element)` coordinates.
pub fn check_params<F>(store: &ParamStore, coords: &[(ParamId, usize)], f: F) -> Result<usize, String>
where
    F: Fn(&mut Tape<'_>) -> Var,
{
    let mut grads = GradStore::zeros_like(store);
    {
        let mut tape = Tape::with_params(store);
        let out = f(&mut tape);
        let g = tape.backward(out).map_err(|e| e.to_string())?;
        tape.accumulate_param_grads(&g, &mut grads);
    }
    let eval = |s: &ParamStore| {
        let mut tape = Tape::with_params(s);
        let out = f(&mut tape);
        tape.value(out).item()
    };
    let mut work = store.clone();
    for &(id, j) in coords {
        let orig = store.get(id).data()[j];
        work.get_mut(id).data_mut()[j] = orig + STEP;
        let up = eval(&work);
        work.get_mut(id).data_mut()[j] = orig - STEP;
        let down = eval(&work);
        work.get_mut(id).data_mut()[j] = orig;
        let numeric = (up - down) / (2.0 * STEP);
        let a = grads.get(id).data()[j];
        if !grad_close(a, numeric) {
            return Err(format!("{}[{j}]: analytic {a:e}, numeric {numeric:e}", store.name(id)));
        }
    }
    Ok(coords.len())
}

/// Uniformly chosen `(parameter, element)` coordinates.
pub fn sample_coords<R: Rng>(store: &ParamStore, count: usize, rng: &mut R) -> Vec<(ParamId, usize)> {
    let all: Vec<(ParamId, usize)> = store
        .ids()
        .flat_map(|id| (0..store.get(id).numel()).map(move |j| (id, j)))
        .collect();
    all.choose_multiple(rng, count).copied().collect()
}

/// Whether a graph satisfies unique core roles and non-overlap for every
/// predicate.
pub fn satisfies_u_and_o(graph: &SrlGraph) -> bool {
    for &p in graph.predicates() {
        let args: Vec<&Tuple> = graph.arguments_of(p).collect();
        let mut core = BTreeSet::new();
        for t in &args {
            if is_core_label(&t.role) && !core.insert(t.role.clone()) {
                return false;
            }
        }
        for (i, a) in args.iter().enumerate() {
            for b in &args[i + 1..] {
                if a.argument.overlaps(&b.argument) {
                    return false;
                }
            }
        }
    }
    true
}

/// Exhaustive search over every role assignment of every predicate under
/// U and O. Returns the optimal total score.
pub fn brute_force_optimum(table: &ScoreTable) -> f64 {
    let roles = table.roles();
    let na = table.arguments().len();
    let r = roles.len();
    let mut total = 0.0;
    for pi in 0..table.predicates().len() {
        let mut best = f64::NEG_INFINITY;
        let mut assign = vec![0usize; na];
        loop {
            if feasible(table, &assign) {
                let s: f64 = assign.iter().enumerate().map(|(ai, &k)| table.score(pi, ai, k)).sum();
                best = best.max(s);
            }
            let mut k = 0;
            while k < na {
                assign[k] += 1;
                if assign[k] < r {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
            if k == na {
                break;
            }
        }
        total += best;
    }
    total
}

fn feasible(table: &ScoreTable, assign: &[usize]) -> bool {
    let roles = table.roles();
    let args = table.arguments();
    let chosen: Vec<usize> = (0..assign.len()).filter(|&i| assign[i] != 0).collect();
    for (x, &i) in chosen.iter().enumerate() {
        for &j in &chosen[x + 1..] {
            if args[i].overlaps(&args[j]) {
                return false;
            }
            if assign[i] == assign[j] && is_core_label(roles.label(assign[i])) {
                return false;
            }
        }
    }
    true
}

/// A random score table with `n ≤ 4`, spans of width at most 2 and at most
/// three roles (ε included).
pub fn random_table<R: Rng>(rng: &mut R) -> ScoreTable {
    let n = rng.random_range(1..=4);
    let max_len = rng.random_range(1..=2);
    let pool = ["A0", "A1", "AM-TMP"];
    let k = rng.random_range(1..=2);
    let labels: Vec<&str> = pool.choose_multiple(rng, k).copied().collect();
    let roles = Arc::new(RoleInventory::new(labels));
    let predicates: Vec<usize> = (1..=n).filter(|_| rng.random_bool(0.5)).collect();
    let predicates = if predicates.is_empty() { vec![1] } else { predicates };
    let arguments = unisrl::data::enumerate_arguments(n, max_len);
    let count = predicates.len() * arguments.len() * roles.len();
    let scores = (0..count)
        .map(|_| {
            if rng.random_bool(0.1) {
                rng.random_range(-2..=2) as f64
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect();
    ScoreTable::new(predicates, arguments, roles, scores).unwrap()
}

/// A uniformly shaped random projective tree over `n` tokens (1-based
/// heads, 0 = root).
pub fn random_projective_tree<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    fn build<R: Rng>(rng: &mut R, lo: usize, hi: usize, parent: usize, heads: &mut [usize]) {
        if lo > hi {
            return;
        }
        let r = rng.random_range(lo..=hi);
        heads[r - 1] = parent;
        build(rng, lo, r - 1, r, heads);
        build(rng, r + 1, hi, r, heads);
    }
    let mut heads = vec![0; n];
    build(rng, 1, n, 0, &mut heads);
    heads
}

const ALPHABET: &[char] = &[
    'a', 'b', 'k', 'z', 'Q', 'é', 'ß', 'ж', '中', '-', '.', '\'', '"', '\\', '_', '0', '7',
];
const ROLES: &[&str] = &["A0", "A1", "A2", "AM-TMP", "AM-LOC", "C-A1", "R-A0"];

pub fn random_token<R: Rng>(rng: &mut R) -> String {
    let len = rng.random_range(1..=6);
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

/// A random well-formed sentence. Dependency-style sentences have
/// single-token arguments and no nominal flags; both styles carry heads
/// from a random projective tree.
pub fn random_sentence<R: Rng>(rng: &mut R, style: Style, max_len: usize) -> Sentence {
    let n = rng.random_range(1..=max_len);
    random_sentence_of_len(rng, style, n)
}

pub fn random_sentence_of_len<R: Rng>(rng: &mut R, style: Style, n: usize) -> Sentence {
    let tokens: Vec<String> = (0..n).map(|_| random_token(rng)).collect();
    let heads = random_projective_tree(rng, n);
    let mut b = Sentence::builder(tokens, style).heads(heads);
    let mut pairs = BTreeSet::new();
    for p in 1..=n {
        if !rng.random_bool(0.3) {
            continue;
        }
        b = b.predicate(p);
        if style == Style::Span && rng.random_bool(0.2) {
            b = b.nominal(p);
        }
        for _ in 0..rng.random_range(0..=3) {
            let start = rng.random_range(1..=n);
            let end = match style {
                Style::Span => rng.random_range(start..=n.min(start + 3)),
                Style::Dep => start,
            };
            let arg = SpanRef::new(start, end).unwrap();
            if pairs.insert((p, arg)) {
                b = b.tuple(p, arg, *ROLES.choose(rng).unwrap());
            }
        }
    }
    b.build().unwrap()
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

/// Scores every shipped metric fixture pair in both modes and compares the
/// result with the hand-computed expectations.
pub fn metric_fixture_checks() -> Vec<(String, Result<(), String>)> {
    use unisrl::corpus::read_corpus;
    use unisrl::eval::{evaluate, EvalMode};

    let dir = fixture("metrics");
    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("expected.json")).unwrap()).unwrap();
    let mut out = Vec::new();
    for (pair, spec) in expected.as_object().unwrap() {
        let load = |key: &str| {
            let corpus = read_corpus(&dir.join(spec[key].as_str().unwrap())).unwrap();
            let style = corpus.first().map(|s| s.style()).unwrap_or(Style::Span);
            (corpus.iter().map(Sentence::gold_graph).collect::<Vec<_>>(), style)
        };
        let (gold, style) = load("gold");
        let (pred, _) = load("pred");
        for mode in [EvalMode::EndToEnd, EvalMode::PreIdentified] {
            let want = &spec[mode.to_string()];
            let got = evaluate(&pred, &gold, mode, style).unwrap();
            let got_json: serde_json::Value = serde_json::from_str(&got.to_json()).unwrap();
            let mut problems = Vec::new();
            for key in ["precision", "recall", "f1", "matched", "predicted", "gold"] {
                if got_json[key].as_f64() != want[key].as_f64() {
                    problems.push(format!("{key}: got {}, want {}", got_json[key], want[key]));
                }
            }
            let result = if problems.is_empty() {
                Ok(())
            } else {
                Err(problems.join("; "))
            };
            out.push((format!("{pair} {mode}"), result));
        }
    }
    out
}

/// Checks that `kept` holds the top `capacity` candidates, best first, with
/// ties broken by span order.
pub fn check_beam(candidates: &[SpanRef], scores: &[f64], kept: &[usize], capacity: usize) -> Result<(), String> {
    if kept.len() != capacity.min(candidates.len()) {
        return Err(format!("kept {} of capacity {capacity}", kept.len()));
    }
    for w in kept.windows(2) {
        let (a, b) = (w[0], w[1]);
        let ordered = scores[a] > scores[b] || (scores[a] == scores[b] && candidates[a] < candidates[b]);
        if !ordered {
            return Err(format!(
                "beam order broken between {} and {}",
                candidates[a], candidates[b]
            ));
        }
    }
    let in_beam: BTreeSet<usize> = kept.iter().copied().collect();
    if let Some(&last) = kept.last() {
        for i in (0..candidates.len()).filter(|i| !in_beam.contains(i)) {
            let beats = scores[i] > scores[last] || (scores[i] == scores[last] && candidates[i] < candidates[last]);
            if beats {
                return Err(format!("dropped {} outranks kept {}", candidates[i], candidates[last]));
            }
        }
    }
    Ok(())
}

/// The pruning contract on `count` random sentences of up to 50 tokens:
/// beam sizes, the tuple bound `⌈β_p n⌉ · ⌈β_a n⌉ · |R|`, beam order and
/// reproducibility.
pub fn pruning_contract(seed: u64, count: usize) -> Result<String, String> {
    use unisrl::corpus::build_vocab;
    use unisrl::decode::{beam_capacity, prune};
    use unisrl::network::{PredicateSource, SrlModel};

    let mut r = rng(seed);
    let mut corpus = Vec::new();
    for k in 0..count {
        let style = if k % 2 == 0 { Style::Span } else { Style::Dep };
        corpus.push(random_sentence(&mut r, style, 50));
    }
    let vocab = build_vocab(&corpus, 1).map_err(|e| e.to_string())?;
    let mut models = Vec::new();
    for style in [Style::Span, Style::Dep] {
        let mut config = gradcheck::tiny_config(style);
        config.beam_a = 0.8;
        config.beam_p = 0.4;
        config.max_span_len = if style == Style::Span { 30 } else { 1 };
        models.push(SrlModel::new(config, vocab.clone(), None, &mut r).map_err(|e| e.to_string())?);
    }
    let mut worst = 0.0f64;
    for (k, sentence) in corpus.iter().enumerate() {
        let model = &models[k % 2];
        let c = model.config();
        let n = sentence.len();
        let input = model.input(sentence, None);
        let mut tape = Tape::inference(model.params());
        let fwd = model
            .forward(&mut tape, &input, PredicateSource::All, None)
            .map_err(|e| e.to_string())?;
        let (cap_p, cap_a) = (beam_capacity(c.beam_p, n), beam_capacity(c.beam_a, n));
        let roles = model.roles().len();
        let tuples = fwd.scores.map(|s| tape.value(s).numel()).unwrap_or(0);
        let bound = cap_p * cap_a * roles;
        if fwd.predicates.len() > cap_p || fwd.arguments.len() > cap_a || tuples > bound {
            return Err(format!("sentence {k} (n = {n}): {tuples} tuples over bound {bound}"));
        }
        worst = worst.max(tuples as f64 / bound as f64);

        let tokens: Vec<SpanRef> = (1..=n).map(SpanRef::token).collect();
        let phi_p = tape.value(fwd.phi_p).data().to_vec();
        let phi_a = tape.value(fwd.phi_a).data().to_vec();
        let beam_p = prune(&tokens, &phi_p, n, c.beam_p);
        let beam_a = prune(&fwd.candidates, &phi_a, n, c.beam_a);
        check_beam(&tokens, &phi_p, beam_p.kept(), cap_p).map_err(|e| format!("sentence {k}: {e}"))?;
        check_beam(&fwd.candidates, &phi_a, beam_a.kept(), cap_a).map_err(|e| format!("sentence {k}: {e}"))?;
        let mut expect_p: Vec<usize> = beam_p.kept().iter().map(|&i| i + 1).collect();
        expect_p.sort_unstable();
        let mut expect_a: Vec<SpanRef> = beam_a.kept().iter().map(|&i| fwd.candidates[i]).collect();
        expect_a.sort_unstable();
        if fwd.predicates != expect_p || fwd.arguments != expect_a {
            return Err(format!("sentence {k}: model beams differ from the pruning rule"));
        }

        let mut again = Tape::inference(model.params());
        let fwd2 = model
            .forward(&mut again, &input, PredicateSource::All, None)
            .map_err(|e| e.to_string())?;
        if fwd2.predicates != fwd.predicates || fwd2.arguments != fwd.arguments {
            return Err(format!("sentence {k}: beams are not reproducible"));
        }
    }
    Ok(format!(
        "{count} sentences, fullest beam at {:.0}% of the bound",
        worst * 100.0
    ))
}

/// Parses what was emitted and compares. JSON lines cover both styles,
/// the column format covers dependency style.
pub fn round_trip(seed: u64, count: usize) -> Result<(), String> {
    use unisrl::corpus::{emit_conll, emit_jsonl, parse_conll, parse_jsonl};

    let mut r = rng(seed);
    let spans: Vec<Sentence> = (0..count).map(|_| random_sentence(&mut r, Style::Span, 20)).collect();
    let deps: Vec<Sentence> = (0..count).map(|_| random_sentence(&mut r, Style::Dep, 20)).collect();
    for corpus in [&spans, &deps] {
        let text = emit_jsonl(corpus);
        let back = parse_jsonl(&text).map_err(|e| e.to_string())?;
        if &back != corpus {
            return Err("JSON lines round trip changed the corpus".into());
        }
        if emit_jsonl(&back) != text {
            return Err("JSON lines re-emission differs".into());
        }
    }
    let text = emit_conll(&deps).map_err(|e| e.to_string())?;
    let back = parse_conll(&text).map_err(|e| e.to_string())?;
    if back != deps {
        let k = back.iter().zip(&deps).position(|(a, b)| a != b).unwrap_or(back.len());
        return Err(format!("column round trip changed sentence {k}"));
    }
    if emit_conll(&back).map_err(|e| e.to_string())? != text {
        return Err("column re-emission differs".into());
    }
    Ok(())
}

/// Conversion properties over `count` random projective trees: head sets
/// are nonempty and inside their span, width-1 graphs convert to
/// themselves, and aligned identical systems compare with a zero delta.
pub fn conversion_properties(seed: u64, count: usize) -> Result<(), String> {
    use unisrl::eval::{compare_styles, convert_corpus, span_heads, span_to_dep};

    let mut r = rng(seed);
    let mut span_gold = Vec::new();
    let mut preds = Vec::new();
    for k in 0..count {
        let n = r.random_range(1..=30);
        let s = random_sentence_of_len(&mut r, Style::Span, n);
        let heads = s.heads().unwrap().to_vec();
        for start in 1..=n {
            for end in start..=n {
                let hs = span_heads(SpanRef::new(start, end).unwrap(), &heads);
                if hs.is_empty() || hs.iter().any(|&h| h < start || h > end) {
                    return Err(format!("tree {k}: bad head set {hs:?} for [{start}, {end}]"));
                }
            }
        }
        let g = random_sentence_of_len(&mut r, Style::Dep, n).gold_graph();
        if span_to_dep(&g, &heads).map_err(|e| e.to_string())? != g {
            return Err(format!("tree {k}: width-1 conversion is not the identity"));
        }
        preds.push(random_sentence_of_len(&mut r, Style::Span, n).gold_graph());
        span_gold.push(s);
    }
    let dep_gold = convert_corpus(&span_gold).map_err(|e| e.to_string())?;
    let dep_preds: Vec<SrlGraph> = preds
        .iter()
        .zip(&span_gold)
        .map(|(p, g)| span_to_dep(p, g.heads().unwrap()).unwrap())
        .collect();
    let cmp = compare_styles(&preds, &dep_preds, &dep_gold).map_err(|e| e.to_string())?;
    if cmp.delta_f1 != 0.0 {
        return Err(format!("aligned systems differ by {}", cmp.delta_f1));
    }
    let gold_spans: Vec<SrlGraph> = span_gold.iter().map(Sentence::gold_graph).collect();
    let gold_deps: Vec<SrlGraph> = dep_gold.iter().map(Sentence::gold_graph).collect();
    let cmp = compare_styles(&gold_spans, &gold_deps, &dep_gold).map_err(|e| e.to_string())?;
    if cmp.delta_f1 != 0.0 || cmp.dependency.f1 != cmp.span_converted.f1 {
        return Err(format!("gold systems differ by {}", cmp.delta_f1));
    }
    Ok(())
}

/// ε scores are exactly zero and role distributions sum to one, for random
/// parameters and sentences in both styles.
pub fn epsilon_checks(seed: u64, models: usize) -> Result<usize, String> {
    use unisrl::corpus::build_vocab;
    use unisrl::network::{tuple_score, PredicateSource, SrlModel};

    let mut r = rng(seed);
    let mut pairs = 0;
    for k in 0..models {
        let style = if k % 2 == 0 { Style::Span } else { Style::Dep };
        let corpus: Vec<Sentence> = (0..4).map(|_| random_sentence(&mut r, style, 12)).collect();
        let vocab = build_vocab(&corpus, 1).map_err(|e| e.to_string())?;
        let mut config = gradcheck::tiny_config(style);
        config.beam_p = 1.0;
        let mut model = SrlModel::new(config, vocab, None, &mut r).map_err(|e| e.to_string())?;
        let ids: Vec<_> = model.params().ids().collect();
        for id in ids {
            let shape = model.params().get(id).shape().to_vec();
            *model.params_mut().get_mut(id) = random_tensor(&mut r, &shape);
        }
        for s in &corpus {
            let mut tape = Tape::inference(model.params());
            let fwd = model
                .forward(&mut tape, &model.input(s, None), PredicateSource::All, None)
                .map_err(|e| e.to_string())?;
            let (Some(scores), Some(relation)) = (fwd.scores, fwd.relation) else {
                continue;
            };
            let probs = tape.softmax(scores, 1).map_err(|e| e.to_string())?;
            let (sv, rel, pv) = (tape.value(scores), tape.value(relation), tape.value(probs));
            let na = fwd.arguments.len();
            let phi_p = tape.value(fwd.phi_p);
            let phi_a = tape.value(fwd.phi_a);
            for row in 0..sv.rows() {
                if sv.at(row, 0) != 0.0 {
                    return Err(format!("ε scored {} in model {k}", sv.at(row, 0)));
                }
                let total: f64 = pv.row(row).iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(format!("distribution sums to {total:.17} in model {k}"));
                }
                let p = fwd.predicates[row / na] - 1;
                let a = fwd
                    .candidates
                    .iter()
                    .position(|c| *c == fwd.arguments[row % na])
                    .unwrap();
                let (pp, pa) = (phi_p.at(p, 0), phi_a.at(a, 0));
                if tuple_score(pp, pa, rel.at(row, 0), 0) != 0.0 {
                    return Err("scalar ε score is not zero".into());
                }
                for role in 1..sv.cols() {
                    let expect = tuple_score(pp, pa, rel.at(row, role), role);
                    if (sv.at(row, role) - expect).abs() > 1e-12 {
                        return Err(format!("tuple score mismatch in model {k}"));
                    }
                }
                pairs += 1;
            }
            let table = model.score_table(&tape, &fwd).map_err(|e| e.to_string())?;
            for pi in 0..table.predicates().len() {
                for ai in 0..na {
                    if table.score(pi, ai, 0) != 0.0 {
                        return Err("score table holds a nonzero ε".into());
                    }
                }
            }
        }
    }
    Ok(pairs)
}

/// Trains the toy configuration on the shipped fixture of `style` and
/// returns the best train-set F1 and the epoch it was reached.
pub fn overfit(style: Style, seed: u64) -> Result<(f64, usize), String> {
    use unisrl::corpus::read_corpus;
    use unisrl::eval::EvalMode;
    use unisrl::network::ModelConfig;
    use unisrl::network::PredicateSource;
    use unisrl::train::{evaluate_model, read_checkpoint, train, write_checkpoint, Dataset, TrainOptions};

    let file = match style {
        Style::Span => "toy_span.jsonl",
        Style::Dep => "toy_dep.conll",
    };
    let data = Dataset::new(read_corpus(&fixture(file)).map_err(|e| e.to_string())?);
    let config = ModelConfig::toy(style);
    let mut options = TrainOptions::new(seed, &config);
    options.epochs = 300;
    options.target_f1 = Some(100.0);
    options.eval_every = 5;
    let outcome = train(config, &data, Some(&data), None, &options, None).map_err(|e| e.to_string())?;
    let report =
        evaluate_model(&outcome.best, &data, EvalMode::EndToEnd, options.constraints).map_err(|e| e.to_string())?;
    if report.f1 == 100.0 {
        let mut bytes = Vec::new();
        write_checkpoint(&outcome.best, &mut bytes).map_err(|e| e.to_string())?;
        let reloaded = read_checkpoint(bytes.as_slice()).map_err(|e| e.to_string())?;
        let first = &data.sentences[0];
        let graph = reloaded
            .predict(&reloaded.input(first, None), PredicateSource::All, options.constraints)
            .map_err(|e| e.to_string())?;
        if graph.tuples() != first.tuples() {
            return Err("reloaded checkpoint does not reproduce the gold tuples".into());
        }
    }
    Ok((report.f1, outcome.best_epoch))
}

/// Two short runs with the same seed: bit-identical first-epoch loss and
/// identical best checkpoint files. A third run with another seed must
/// differ.
pub fn determinism(style: Style) -> Result<(), String> {
    use unisrl::corpus::read_corpus;
    use unisrl::network::ModelConfig;
    use unisrl::train::{train, Dataset, TrainOptions};

    let data = Dataset::new(read_corpus(&fixture("toy_span.jsonl")).map_err(|e| e.to_string())?);
    let data = match style {
        Style::Span => data,
        Style::Dep => Dataset::new(unisrl::eval::convert_corpus(&data.sentences).map_err(|e| e.to_string())?),
    };
    let run = |seed: u64| -> Result<(f64, Vec<u8>), String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = ModelConfig::toy(style);
        let mut options = TrainOptions::new(seed, &config);
        options.epochs = 3;
        let outcome = train(config, &data, Some(&data), None, &options, Some(dir.path())).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(dir.path().join("best.ckpt")).map_err(|e| e.to_string())?;
        Ok((outcome.log[0].loss, bytes))
    };
    let (a, b, c) = (run(42)?, run(42)?, run(43)?);
    if a.0.to_bits() != b.0.to_bits() {
        return Err(format!("epoch-1 loss differs: {} vs {}", a.0, b.0));
    }
    if a.1 != b.1 {
        return Err("best checkpoints differ".into());
    }
    if a.0.to_bits() == c.0.to_bits() {
        return Err("a different seed reproduced the same loss".into());
    }
    Ok(())
}
