use std::sync::Arc;

use rand::{Rng, SeedableRng};

use super::candidates::SpanEncoder;
use super::encoder::BiHighwayLstm;
use super::layers::Linear;
use super::scorer::{role_loss, tuple_scores, Biaffine, UnaryScorer};
use super::token::TokenEmbedder;
use super::{ModelConfig, NetworkError};
use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::corpus::{EmbeddingMatrix, Vocabulary};
use crate::data::{enumerate_arguments, RoleInventory, Sentence, SpanRef, SrlGraph};
use crate::decode::{decode_constrained, prune, ConstraintSet, ScoreTable};

/// A sentence mapped to vocabulary indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceInput {
    pub words: Vec<usize>,
    pub chars: Vec<Vec<usize>>,
    pub external: Option<Tensor>,
}

impl SentenceInput {
    pub fn new(sentence: &Sentence, vocab: &Vocabulary, external: Option<Tensor>) -> Self {
        SentenceInput {
            words: sentence.tokens().iter().map(|w| vocab.word_id(w)).collect(),
            chars: sentence
                .tokens()
                .iter()
                .map(|w| w.chars().map(|c| vocab.char_id(c)).collect())
                .collect(),
            external,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Dropout masks for one sentence, entries 0 or `1 / (1 − p)`.
///
/// Recurrent masks are `1 × hidden` and shared by every time step of a
/// layer direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DropoutMasks {
    pub chars: Option<Tensor>,
    pub words: Option<Tensor>,
    pub recurrent: Vec<Option<Tensor>>,
    pub predicates: Option<Tensor>,
    pub arguments: Option<Tensor>,
    pub widths: Option<Tensor>,
    pub pred_scorer: Option<Tensor>,
    pub arg_scorer: Option<Tensor>,
}

fn bernoulli_mask<R: Rng>(rng: &mut R, shape: &[usize], p: f64) -> Option<Tensor> {
    if p <= 0.0 {
        return None;
    }
    let keep = 1.0 / (1.0 - p);
    let numel = shape.iter().product();
    let data = (0..numel)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect();
    Some(Tensor::new(shape.to_vec(), data).expect("shape matches"))
}

impl DropoutMasks {
    /// Draws every mask a sentence of `n` tokens needs. Token and encoder
    /// masks are drawn first, so they do not depend on the argument style.
    pub fn sample<R: Rng>(config: &ModelConfig, n: usize, rng: &mut R) -> Self {
        let c = config;
        let chars = bernoulli_mask(rng, &[n, c.char_windows.len() * c.char_filters], c.dropout_embed);
        let words = bernoulli_mask(rng, &[n, c.word_dim], c.dropout_embed);
        let recurrent = (0..2 * c.lstm_layers)
            .map(|_| bernoulli_mask(rng, &[1, c.lstm_hidden], c.dropout_recurrent))
            .collect();
        let predicates = bernoulli_mask(rng, &[n, c.mlp_dim], c.dropout_hidden);
        let arguments = bernoulli_mask(rng, &[n, c.mlp_dim], c.dropout_hidden);
        let num_args = enumerate_arguments(n, c.max_span_len).len();
        let widths = if c.uses_spans() {
            bernoulli_mask(rng, &[num_args, c.width_dim], c.dropout_hidden)
        } else {
            None
        };
        let pred_scorer = bernoulli_mask(rng, &[n, c.scorer_mlp_dim], c.dropout_hidden);
        let arg_scorer = bernoulli_mask(rng, &[num_args, c.scorer_mlp_dim], c.dropout_hidden);
        DropoutMasks {
            chars,
            words,
            recurrent,
            predicates,
            arguments,
            widths,
            pred_scorer,
            arg_scorer,
        }
    }
}

/// Which tokens may serve as predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateSource<'a> {
    /// Every token is a candidate; the predicate beam decides.
    All,
    /// Exactly these (gold) predicates, without pruning.
    Given(&'a [usize]),
}

/// Gold tuples seen by the loss versus gold tuples in the sentence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneStats {
    pub kept: usize,
    pub gold: usize,
}

impl PruneStats {
    pub fn add(&mut self, other: PruneStats) {
        self.kept += other.kept;
        self.gold += other.gold;
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            1.0
        } else {
            self.kept as f64 / self.gold as f64
        }
    }
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub tokens: Var,
    pub context: Var,
    pub pred_reps: Var,
    pub arg_reps: Var,
    pub final_arg_reps: Var,
    /// `φ_p` for every token (`n × 1`).
    pub phi_p: Var,
    /// `φ_a` for every candidate argument (`candidates × 1`).
    pub phi_a: Var,
    pub candidates: Vec<SpanRef>,
    /// Surviving predicates, in token order.
    pub predicates: Vec<usize>,
    /// Surviving arguments, in candidate order.
    pub arguments: Vec<SpanRef>,
    /// `(P · A) × R` biaffine scores, when both beams are nonempty.
    pub relation: Option<Var>,
    /// `(P · A) × R` tuple scores with a zero ε column.
    pub scores: Option<Var>,
}

#[derive(Debug, Clone)]
struct Parts {
    token: TokenEmbedder,
    encoder: BiHighwayLstm,
    pred_mlp: Linear,
    arg_mlp: Linear,
    span: Option<SpanEncoder>,
    pred_scorer: UnaryScorer,
    arg_scorer: UnaryScorer,
    biaffine: Biaffine,
}

/// The full model: parameters, configuration and vocabulary.
#[derive(Debug, Clone)]
pub struct SrlModel {
    config: ModelConfig,
    vocab: Vocabulary,
    roles: Arc<RoleInventory>,
    params: ParamStore,
    parts: Parts,
}

impl SrlModel {
    /// Initializes a model. Token and encoder parameters are created first,
    /// so models of either style built from one seed share them exactly.
    pub fn new<R: Rng>(
        config: ModelConfig,
        vocab: Vocabulary,
        pretrained: Option<&EmbeddingMatrix>,
        rng: &mut R,
    ) -> Result<Self, NetworkError> {
        config.validate()?;
        let c = &config;
        let mut store = ParamStore::new();
        let token = TokenEmbedder::new(&mut store, c, vocab.num_words(), vocab.num_chars(), pretrained, rng)?;
        let encoder = BiHighwayLstm::new(&mut store, c.token_dim(), c.lstm_hidden, c.lstm_layers, rng);
        let pred_mlp = Linear::new(&mut store, "pred_mlp", c.context_dim(), c.mlp_dim, true, rng);
        let arg_mlp = Linear::new(&mut store, "arg_mlp", c.context_dim(), c.mlp_dim, true, rng);
        let span = c
            .uses_spans()
            .then(|| SpanEncoder::new(&mut store, c.mlp_dim, c.scorer_mlp_dim, c.width_dim, rng));
        let pred_scorer = UnaryScorer::new(&mut store, "pred_score", c.mlp_dim, c.scorer_mlp_dim, rng);
        let arg_scorer = UnaryScorer::new(&mut store, "arg_score", c.argument_dim(), c.scorer_mlp_dim, rng);
        let roles = Arc::new(vocab.roles().clone());
        let biaffine = Biaffine::new(&mut store, c.mlp_dim, c.argument_dim(), roles.len(), rng);
        Ok(SrlModel {
            config,
            vocab,
            roles,
            params: store,
            parts: Parts {
                token,
                encoder,
                pred_mlp,
                arg_mlp,
                span,
                pred_scorer,
                arg_scorer,
                biaffine,
            },
        })
    }

    /// Rebuilds a model around saved parameters. Names and shapes must match
    /// the layout implied by `config` and `vocab`.
    pub fn from_params(config: ModelConfig, vocab: Vocabulary, params: &ParamStore) -> Result<Self, NetworkError> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut model = SrlModel::new(config, vocab, None, &mut rng)?;
        if model.params.len() != params.len() {
            return Err(NetworkError::InvalidConfig(format!(
                "checkpoint holds {} tensors, model expects {}",
                params.len(),
                model.params.len()
            )));
        }
        model.params.load_from(params)?;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn roles(&self) -> &Arc<RoleInventory> {
        &self.roles
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn input(&self, sentence: &Sentence, external: Option<Tensor>) -> SentenceInput {
        SentenceInput::new(sentence, &self.vocab, external)
    }

    /// Token representations and encoder output (`n × 2·hidden`).
    pub fn encode(
        &self,
        tape: &mut Tape<'_>,
        input: &SentenceInput,
        masks: Option<&DropoutMasks>,
    ) -> Result<(Var, Var), NetworkError> {
        let tokens = self.parts.token.forward(tape, input, masks)?;
        let recurrent = masks.map(|m| m.recurrent.as_slice()).unwrap_or(&[]);
        let context = self.parts.encoder.forward(tape, tokens, recurrent)?;
        Ok((tokens, context))
    }

    pub fn forward(
        &self,
        tape: &mut Tape<'_>,
        input: &SentenceInput,
        predicates: PredicateSource<'_>,
        masks: Option<&DropoutMasks>,
    ) -> Result<Forward, NetworkError> {
        let n = input.len();
        let c = &self.config;
        let m = |f: fn(&DropoutMasks) -> &Option<Tensor>| masks.and_then(|x| f(x).as_ref());
        let (tokens, context) = self.encode(tape, input, masks)?;

        let gp = self.parts.pred_mlp.forward(tape, context)?;
        let mut gp = tape.relu(gp);
        if let Some(mask) = m(|x| &x.predicates) {
            gp = tape.dropout(gp, mask)?;
        }
        let ga = self.parts.arg_mlp.forward(tape, context)?;
        let mut ga = tape.relu(ga);
        if let Some(mask) = m(|x| &x.arguments) {
            ga = tape.dropout(ga, mask)?;
        }

        let candidates = enumerate_arguments(n, c.max_span_len);
        let gaf = match &self.parts.span {
            Some(span) => span.forward(tape, ga, &candidates, m(|x| &x.widths))?,
            None => ga,
        };

        let phi_p = self.parts.pred_scorer.forward(tape, gp, m(|x| &x.pred_scorer))?;
        let phi_a = self.parts.arg_scorer.forward(tape, gaf, m(|x| &x.arg_scorer))?;

        let kept_preds: Vec<usize> = match predicates {
            PredicateSource::All => {
                let tokens: Vec<SpanRef> = (1..=n).map(SpanRef::token).collect();
                let beam = prune(&tokens, tape.value(phi_p).data(), n, c.beam_p);
                let mut kept: Vec<usize> = beam.kept().to_vec();
                kept.sort_unstable();
                kept
            }
            PredicateSource::Given(ps) => {
                let mut kept: Vec<usize> = ps.iter().filter(|&&p| p >= 1 && p <= n).map(|&p| p - 1).collect();
                kept.sort_unstable();
                kept.dedup();
                kept
            }
        };
        let beam = prune(&candidates, tape.value(phi_a).data(), n, c.beam_a);
        let mut kept_args: Vec<usize> = beam.kept().to_vec();
        kept_args.sort_unstable();

        let pred_positions: Vec<usize> = kept_preds.iter().map(|&i| i + 1).collect();
        let arguments: Vec<SpanRef> = kept_args.iter().map(|&i| candidates[i]).collect();
        let (relation, scores) = if kept_preds.is_empty() || kept_args.is_empty() {
            (None, None)
        } else {
            let gp_sel = tape.gather_rows(gp, &kept_preds)?;
            let ga_sel = tape.gather_rows(gaf, &kept_args)?;
            let pp_sel = tape.gather_rows(phi_p, &kept_preds)?;
            let pa_sel = tape.gather_rows(phi_a, &kept_args)?;
            let relation = self.parts.biaffine.forward(tape, gp_sel, ga_sel)?;
            let scores = tuple_scores(tape, pp_sel, pa_sel, relation)?;
            (Some(relation), Some(scores))
        };
        Ok(Forward {
            tokens,
            context,
            pred_reps: gp,
            arg_reps: ga,
            final_arg_reps: gaf,
            phi_p,
            phi_a,
            candidates,
            predicates: pred_positions,
            arguments,
            relation,
            scores,
        })
    }

    /// The decoded-ready score table of a forward pass.
    pub fn score_table(&self, tape: &Tape<'_>, fwd: &Forward) -> Result<ScoreTable, NetworkError> {
        let scores = match fwd.scores {
            Some(s) => tape.value(s).data().to_vec(),
            None => Vec::new(),
        };
        let (predicates, arguments) = if fwd.scores.is_some() {
            (fwd.predicates.clone(), fwd.arguments.clone())
        } else {
            (Vec::new(), Vec::new())
        };
        Ok(ScoreTable::new(predicates, arguments, self.roles.clone(), scores)?)
    }

    /// Cross-entropy of the gold role (ε when absent) over every surviving
    /// pair. Gold tuples removed by pruning do not contribute and are
    /// counted in the returned statistics. `None` when nothing survived.
    pub fn loss(
        &self,
        tape: &mut Tape<'_>,
        fwd: &Forward,
        gold: &SrlGraph,
    ) -> Result<(Option<Var>, PruneStats), NetworkError> {
        let mut stats = PruneStats {
            kept: 0,
            gold: gold.len(),
        };
        let Some(scores) = fwd.scores else {
            return Ok((None, stats));
        };
        let mut targets = Vec::with_capacity(fwd.predicates.len() * fwd.arguments.len());
        for &p in &fwd.predicates {
            for &a in &fwd.arguments {
                let r = match gold.role_of(p, a) {
                    Some(label) => {
                        stats.kept += 1;
                        self.roles
                            .index_of(label)
                            .ok_or_else(|| NetworkError::UnknownRole(label.to_string()))?
                    }
                    None => 0,
                };
                targets.push(r);
            }
        }
        Ok((Some(role_loss(tape, scores, &targets)?), stats))
    }

    /// Decodes one sentence with the given constraints.
    pub fn predict(
        &self,
        input: &SentenceInput,
        predicates: PredicateSource<'_>,
        constraints: ConstraintSet,
    ) -> Result<SrlGraph, NetworkError> {
        let mut tape = Tape::inference(&self.params);
        let fwd = self.forward(&mut tape, input, predicates, None)?;
        let table = self.score_table(&tape, &fwd)?;
        Ok(decode_constrained(&table, constraints)?)
    }
}
