//! Command-line front end: `train`, `predict`, `evaluate`, `convert` and
//! `compare`.
//!
//! Exit codes: 0 on success, 1 when a run or metric computation fails, 2 on
//! usage errors (bad flags, missing files, invalid configuration).
//!
//! `train` reads an optional TOML file whose top-level keys mirror the
//! flags and whose `[model]` table mirrors the model configuration; flags
//! override the file. The resolved configuration is written to
//! `run_config.toml` in the output directory and can be passed back with
//! `--config` to repeat the run. Progress is logged as JSON lines on
//! stderr.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{load_external, load_pretrained, read_corpus, write_corpus, CorpusError};
use crate::data::{SrlGraph, Style};
use crate::decode::ConstraintSet;
use crate::eval::{compare_styles, convert_corpus, evaluate, EvalError, EvalMode};
use crate::network::{ModelConfig, NetworkError};
use crate::train::{load_checkpoint, predict_corpus, train, Dataset, TrainError, TrainOptions};

#[derive(Debug, Parser)]
#[command(
    name = "unisrl",
    version,
    about = "Uniform span and dependency semantic role labeling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write checkpoints and a JSON-lines log.
    Train(TrainArgs),
    /// Label a corpus with a trained model.
    Predict(PredictArgs),
    /// Score predictions against gold annotations.
    Evaluate(EvaluateArgs),
    /// Convert span arguments to their syntactic heads.
    Convert(ConvertArgs),
    /// Compare span and dependency systems on a dependency metric.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training corpus (`.jsonl` or column format).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Development corpus used to select the best checkpoint.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Output directory for checkpoints and logs.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub style: Option<Style>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Pretrained word vectors (`word v1 .. vd` per line).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// External per-token vectors for the training corpus.
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long)]
    pub mode: Option<EvalMode>,
    /// Decoding constraints, e.g. `UO` or `none`.
    #[arg(long)]
    pub constraints: Option<ConstraintSet>,
    /// Start from the small 64-dimensional configuration.
    #[arg(long)]
    pub toy: bool,
    /// Stop once the dev F1 reaches this value.
    #[arg(long)]
    pub target_f1: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long, default_value = "end-to-end")]
    pub mode: EvalMode,
    #[arg(long)]
    pub constraints: Option<ConstraintSet>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long, default_value = "end-to-end")]
    pub mode: EvalMode,
    /// Defaults to the style of the gold corpus.
    #[arg(long)]
    pub style: Option<Style>,
    /// Print a JSON record instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Span-style corpus with syntactic heads.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Span-style predictions.
    #[arg(long)]
    pub span_pred: PathBuf,
    /// Dependency-style predictions.
    #[arg(long)]
    pub dep_pred: PathBuf,
    /// Dependency-style gold with syntactic heads.
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub json: bool,
}

/// The fully resolved settings of a training run, written next to the
/// checkpoints so the run can be repeated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub embeddings: Option<PathBuf>,
    pub external: Option<PathBuf>,
    pub mode: Option<EvalMode>,
    pub constraints: Option<String>,
    pub target_f1: Option<f64>,
    pub model: Option<ModelConfig>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("no such file: {0}")]
    MissingPath(PathBuf),
    #[error(transparent)]
    Metric(#[from] EvalError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::MissingPath(_) => 2,
            CliError::Train(TrainError::Network(NetworkError::InvalidConfig(_))) => 2,
            _ => 1,
        }
    }
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingPath(path.to_path_buf()))
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train(a) => train_cmd(a, out, err),
        Command::Predict(a) => predict_cmd(a, err),
        Command::Evaluate(a) => evaluate_cmd(a, out),
        Command::Convert(a) => convert_cmd(a, err),
        Command::Compare(a) => compare_cmd(a, out),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

/// Merges the optional config file with flags (flags win).
pub fn resolve_train_config(a: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut rc = match &a.config {
        Some(path) => {
            require(path)?;
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            toml::from_str::<RunConfig>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    macro_rules! flag {
        ($field:ident) => {
            if a.$field.is_some() {
                rc.$field = a.$field.clone();
            }
        };
    }
    flag!(train);
    flag!(dev);
    flag!(out);
    flag!(seed);
    flag!(epochs);
    flag!(embeddings);
    flag!(external);
    flag!(mode);
    flag!(target_f1);
    if let Some(c) = a.constraints {
        rc.constraints = Some(c.to_string());
    }
    let mut model = match (&rc.model, a.toy) {
        (_, true) => ModelConfig::toy(a.style.or(rc.model.as_ref().map(|m| m.style)).unwrap_or(Style::Span)),
        (Some(m), false) => m.clone(),
        (None, false) => ModelConfig::for_style(a.style.unwrap_or(Style::Span)),
    };
    if let Some(style) = a.style {
        if model.style != style {
            let base = if a.toy {
                ModelConfig::toy(style)
            } else {
                ModelConfig::for_style(style)
            };
            model.style = style;
            model.max_span_len = base.max_span_len;
        }
    }
    if let Some(e) = rc.epochs {
        model.max_epochs = e;
    }
    rc.model = Some(model);
    Ok(rc)
}

fn train_cmd(a: TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let rc = resolve_train_config(&a)?;
    let train_path = rc
        .train
        .clone()
        .ok_or_else(|| CliError::Usage("a training corpus is required (--train)".into()))?;
    let seed = rc
        .seed
        .ok_or_else(|| CliError::Usage("a seed is required for training (--seed)".into()))?;
    let out_dir = rc
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("an output directory is required (--out)".into()))?;
    for p in [
        Some(&train_path),
        rc.dev.as_ref(),
        rc.embeddings.as_ref(),
        rc.external.as_ref(),
    ]
    .into_iter()
    .flatten()
    {
        require(p)?;
    }
    let model = rc.model.clone().expect("resolved");
    model.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let constraints = match &rc.constraints {
        Some(c) => c.parse().map_err(CliError::Usage)?,
        None => ConstraintSet::for_style(model.style),
    };

    let mut train_set = Dataset::new(read_corpus(&train_path)?);
    if let Some(ext) = &rc.external {
        let e = load_external(ext)?;
        e.check_against(&train_set.sentences)?;
        train_set.external = Some(e);
    }
    let dev_set = match &rc.dev {
        Some(p) => Some(Dataset::new(read_corpus(p)?)),
        None => None,
    };
    let mut options = TrainOptions::new(seed, &model);
    options.epochs = model.max_epochs;
    options.constraints = constraints;
    options.mode = rc.mode.unwrap_or_default();
    options.target_f1 = rc.target_f1;

    std::fs::create_dir_all(&out_dir).map_err(|source| CliError::Io {
        path: out_dir.clone(),
        source,
    })?;
    let rc_path = out_dir.join("run_config.toml");
    let rc_text = toml::to_string(&rc).map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(&rc_path, rc_text).map_err(|source| CliError::Io {
        path: rc_path.clone(),
        source,
    })?;

    let embeddings = rc.embeddings.clone();
    let loader = move |vocab: &crate::corpus::Vocabulary, rng: &mut rand_chacha::ChaCha8Rng| {
        load_pretrained(embeddings.as_deref().expect("checked"), vocab, rng)
    };
    let pretrained: Option<&dyn Fn(&_, &mut _) -> _> = if rc.embeddings.is_some() { Some(&loader) } else { None };
    let outcome = train(
        model,
        &train_set,
        dev_set.as_ref(),
        pretrained,
        &options,
        Some(&out_dir),
    )?;
    for entry in &outcome.log {
        let _ = writeln!(err, "{}", serde_json::to_string(entry).expect("log serializes"));
    }
    let summary = serde_json::json!({
        "event": "trained",
        "best_epoch": outcome.best_epoch,
        "epochs": outcome.log.len(),
        "checkpoint": out_dir.join("best.ckpt"),
        "run_config": rc_path,
    });
    write_out(out, &format!("{summary}\n"))
}

fn predict_cmd(a: PredictArgs, err: &mut dyn Write) -> Result<(), CliError> {
    require(&a.checkpoint)?;
    require(&a.input)?;
    if let Some(p) = &a.external {
        require(p)?;
    }
    let model = load_checkpoint(&a.checkpoint)?;
    let style = model.config().style;
    let mut data = Dataset::new(read_corpus(&a.input)?);
    if let Some(p) = &a.external {
        let e = load_external(p)?;
        e.check_against(&data.sentences)?;
        data.external = Some(e);
    }
    let constraints = a.constraints.unwrap_or(ConstraintSet::for_style(style));
    let graphs = predict_corpus(&model, &data, a.mode, constraints)?;
    let labeled = data
        .sentences
        .iter()
        .zip(&graphs)
        .map(|(s, g)| s.with_graph(g, style))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    write_corpus(&a.output, &labeled)?;
    let event = serde_json::json!({"event": "predicted", "sentences": labeled.len(), "output": a.output});
    let _ = writeln!(err, "{event}");
    Ok(())
}

fn graphs(path: &Path) -> Result<(Vec<SrlGraph>, Option<Style>), CliError> {
    require(path)?;
    let corpus = read_corpus(path)?;
    let style = corpus.first().map(|s| s.style());
    Ok((corpus.iter().map(|s| s.gold_graph()).collect(), style))
}

fn evaluate_cmd(a: EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    require(&a.gold)?;
    require(&a.pred)?;
    let (gold, gold_style) = graphs(&a.gold)?;
    let (pred, _) = graphs(&a.pred)?;
    let style = a.style.or(gold_style).unwrap_or(Style::Span);
    let report = evaluate(&pred, &gold, a.mode, style)?;
    let text = if a.json {
        format!("{}\n", report.to_json())
    } else {
        report.to_table()
    };
    write_out(out, &text)
}

fn convert_cmd(a: ConvertArgs, err: &mut dyn Write) -> Result<(), CliError> {
    require(&a.input)?;
    let corpus = read_corpus(&a.input)?;
    let converted = convert_corpus(&corpus)?;
    write_corpus(&a.output, &converted)?;
    let event = serde_json::json!({"event": "converted", "sentences": converted.len(), "output": a.output});
    let _ = writeln!(err, "{event}");
    Ok(())
}

fn compare_cmd(a: CompareArgs, out: &mut dyn Write) -> Result<(), CliError> {
    for p in [&a.span_pred, &a.dep_pred, &a.gold] {
        require(p)?;
    }
    let (span, _) = graphs(&a.span_pred)?;
    let (dep, _) = graphs(&a.dep_pred)?;
    let gold = read_corpus(&a.gold)?;
    let cmp = compare_styles(&span, &dep, &gold)?;
    let text = if a.json {
        format!("{}\n", cmp.to_json())
    } else {
        cmp.to_table()
    };
    write_out(out, &text)
}
