//! Training, prediction and model checkpoints.
//!
//! All randomness derives from one root seed: parameter initialization,
//! pretrained-miss vectors, dropout masks and batch shuffling each read
//! their own ChaCha stream of that seed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Adam, AdamConfig, GradStore, ParamStore, Tape, TensorError};
use crate::corpus::{build_vocab, CorpusError, EmbeddingMatrix, ExternalEmbeddings, Vocabulary};
use crate::data::{Sentence, SrlGraph, Style};
use crate::decode::ConstraintSet;
use crate::eval::{evaluate, EvalError, EvalMode, EvalReport};
use crate::network::{DropoutMasks, ModelConfig, NetworkError, PredicateSource, PruneStats, SrlModel};

const CHECKPOINT_MAGIC: &[u8; 8] = b"USRLMODL";
const CHECKPOINT_VERSION: u32 = 1;

const STREAM_INIT: u64 = 0;
const STREAM_DROPOUT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_PRETRAINED: u64 = 3;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TrainError + '_ {
    move |source| TrainError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// The ChaCha stream `stream` of the root `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A corpus with its optional per-sentence external vectors.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub sentences: Vec<Sentence>,
    pub external: Option<ExternalEmbeddings>,
}

impl Dataset {
    pub fn new(sentences: Vec<Sentence>) -> Self {
        Dataset {
            sentences,
            external: None,
        }
    }

    fn external_for(&self, k: usize) -> Option<crate::autodiff::Tensor> {
        self.external
            .as_ref()
            .map(|e| e.for_sentence(k, self.sentences[k].len()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub seed: u64,
    pub epochs: usize,
    pub min_freq: u64,
    pub mode: EvalMode,
    pub constraints: ConstraintSet,
    /// Stop once the dev F1 reaches this value.
    pub target_f1: Option<f64>,
    /// Evaluate on the dev set every this many epochs (and at the end).
    pub eval_every: usize,
}

impl TrainOptions {
    pub fn new(seed: u64, config: &ModelConfig) -> Self {
        TrainOptions {
            seed,
            epochs: config.max_epochs,
            min_freq: 1,
            mode: EvalMode::EndToEnd,
            constraints: ConstraintSet::for_style(config.style),
            target_f1: None,
            eval_every: 1,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub pruning_recall: f64,
    pub dev: Option<EvalReport>,
}

pub struct TrainOutcome {
    pub best: SrlModel,
    pub last: SrlModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

fn predicate_source(mode: EvalMode, sentence: &Sentence) -> Vec<usize> {
    match mode {
        EvalMode::EndToEnd => Vec::new(),
        EvalMode::PreIdentified => sentence.predicates().iter().copied().collect(),
    }
}

/// Builds the pretrained embedding matrix for a vocabulary.
pub type PretrainedLoader = dyn Fn(&Vocabulary, &mut ChaCha8Rng) -> Result<EmbeddingMatrix, CorpusError>;

/// Trains a model from scratch. With `out_dir`, the log is written as JSON
/// lines to `train_log.jsonl` and the checkpoints to `last.ckpt` (every
/// epoch) and `best.ckpt` (best dev F1, or lowest loss without a dev set).
pub fn train(
    config: ModelConfig,
    train_set: &Dataset,
    dev_set: Option<&Dataset>,
    pretrained: Option<&PretrainedLoader>,
    options: &TrainOptions,
    out_dir: Option<&Path>,
) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if let Some(s) = train_set.sentences.iter().find(|s| s.style() != config.style) {
        return Err(TrainError::IncompatibleCheckpoint(format!(
            "training corpus holds {} sentences but the model is configured for {}",
            s.style(),
            config.style
        )));
    }
    let vocab = build_vocab(&train_set.sentences, options.min_freq)?;
    let pretrained = match pretrained {
        Some(load) => Some(load(&vocab, &mut rng_stream(options.seed, STREAM_PRETRAINED))?),
        None => None,
    };
    let mut model = SrlModel::new(
        config.clone(),
        vocab,
        pretrained.as_ref(),
        &mut rng_stream(options.seed, STREAM_INIT),
    )?;
    let mut dropout_rng = rng_stream(options.seed, STREAM_DROPOUT);
    let mut shuffle_rng = rng_stream(options.seed, STREAM_SHUFFLE);
    let mut adam = Adam::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        model.params(),
    );

    let mut log_file = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join("train_log.jsonl");
            Some((BufWriter::new(File::create(&path).map_err(io_err(&path))?), path))
        }
        None => None,
    };

    let mut log = Vec::new();
    let mut best: Option<(SrlModel, usize, f64)> = None;
    let mut order: Vec<usize> = (0..train_set.sentences.len()).collect();
    for epoch in 1..=options.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        let mut stats = PruneStats::default();
        for batch in order.chunks(config.batch_size) {
            let mut grads = GradStore::zeros_like(model.params());
            for &k in batch {
                let sentence = &train_set.sentences[k];
                let input = model.input(sentence, train_set.external_for(k));
                let masks = DropoutMasks::sample(&config, sentence.len(), &mut dropout_rng);
                let preds = predicate_source(options.mode, sentence);
                let source = match options.mode {
                    EvalMode::EndToEnd => PredicateSource::All,
                    EvalMode::PreIdentified => PredicateSource::Given(&preds),
                };
                let mut tape = Tape::with_params(model.params());
                let fwd = model.forward(&mut tape, &input, source, Some(&masks))?;
                let (loss, s) = model.loss(&mut tape, &fwd, &sentence.gold_graph())?;
                stats.add(s);
                if let Some(loss) = loss {
                    epoch_loss += tape.value(loss).item();
                    let g = tape.backward(loss)?;
                    tape.accumulate_param_grads(&g, &mut grads);
                }
            }
            adam.step(model.params_mut(), &grads)?;
        }

        let evaluate_now = epoch % options.eval_every.max(1) == 0 || epoch == options.epochs;
        let dev = match dev_set {
            Some(d) if evaluate_now => Some(evaluate_model(&model, d, options.mode, options.constraints)?),
            _ => None,
        };
        let entry = EpochLog {
            epoch,
            loss: epoch_loss,
            pruning_recall: stats.recall(),
            dev: dev.clone(),
        };
        if let Some((w, path)) = log_file.as_mut() {
            writeln!(w, "{}", serde_json::to_string(&entry).expect("log serializes")).map_err(io_err(path))?;
            w.flush().map_err(io_err(path))?;
        }
        log.push(entry);

        // Higher is better: dev F1 when available, otherwise negated loss.
        let merit = match (&dev, dev_set) {
            (Some(r), _) => Some(r.f1),
            (None, None) => Some(-epoch_loss),
            (None, Some(_)) => None,
        };
        if let Some(merit) = merit {
            if best.as_ref().is_none_or(|(_, _, m)| merit > *m) {
                best = Some((model.clone(), epoch, merit));
                if let Some(dir) = out_dir {
                    save_checkpoint(&model, &dir.join("best.ckpt"))?;
                }
            }
        }
        if let Some(dir) = out_dir {
            save_checkpoint(&model, &dir.join("last.ckpt"))?;
        }
        if let (Some(target), Some(r)) = (options.target_f1, &dev) {
            if r.f1 >= target {
                break;
            }
        }
    }
    let (best, best_epoch, _) = best.unwrap_or_else(|| (model.clone(), log.len(), 0.0));
    Ok(TrainOutcome {
        best,
        last: model,
        best_epoch,
        log,
    })
}

/// Decodes every sentence of `data`. Sentences must have the model's style.
pub fn predict_corpus(
    model: &SrlModel,
    data: &Dataset,
    mode: EvalMode,
    constraints: ConstraintSet,
) -> Result<Vec<SrlGraph>, TrainError> {
    let style = model.config().style;
    data.sentences
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if s.style() != style {
                return Err(TrainError::IncompatibleCheckpoint(format!(
                    "sentence {k} is {} but the model was trained for {style}",
                    s.style()
                )));
            }
            let input = model.input(s, data.external_for(k));
            let preds = predicate_source(mode, s);
            let source = match mode {
                EvalMode::EndToEnd => PredicateSource::All,
                EvalMode::PreIdentified => PredicateSource::Given(&preds),
            };
            Ok(model.predict(&input, source, constraints)?)
        })
        .collect()
}

pub fn evaluate_model(
    model: &SrlModel,
    data: &Dataset,
    mode: EvalMode,
    constraints: ConstraintSet,
) -> Result<EvalReport, TrainError> {
    let predicted = predict_corpus(model, data, mode, constraints)?;
    let gold: Vec<SrlGraph> = data.sentences.iter().map(Sentence::gold_graph).collect();
    Ok(evaluate(&predicted, &gold, mode, model.config().style)?)
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    config: ModelConfig,
    vocab: Vocabulary,
    vocab_sha256: String,
    style: Style,
}

/// Writes magic, version, a JSON header (configuration, vocabulary and its
/// hash) and the named-tensor container of the parameters.
pub fn write_checkpoint<W: Write>(model: &SrlModel, mut w: W) -> std::io::Result<()> {
    let header = CheckpointHeader {
        config: model.config().clone(),
        vocab: model.vocab().clone(),
        vocab_sha256: model.vocab().fingerprint(),
        style: model.config().style,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    model.params().write_to(&mut w)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<SrlModel, TrainError> {
    let bad = |m: &str| TrainError::IncompatibleCheckpoint(m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("file too short"))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("not a model checkpoint"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(TrainError::IncompatibleCheckpoint(format!(
            "unsupported version {version}"
        )));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| bad("truncated header"))?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| TrainError::IncompatibleCheckpoint(e.to_string()))?;
    if header.vocab.fingerprint() != header.vocab_sha256 {
        return Err(bad("vocabulary hash does not match"));
    }
    if header.style != header.config.style {
        return Err(bad("style does not match configuration"));
    }
    let params = ParamStore::read_from(&mut r)?;
    SrlModel::from_params(header.config, header.vocab, &params)
        .map_err(|e| TrainError::IncompatibleCheckpoint(e.to_string()))
}

pub fn save_checkpoint(model: &SrlModel, path: &Path) -> Result<(), TrainError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(model, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn load_checkpoint(path: &Path) -> Result<SrlModel, TrainError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_checkpoint(BufReader::new(file))
}
