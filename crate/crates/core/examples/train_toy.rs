//! Overfits the bundled 20-sentence toy corpus in span or dependency style.
//!
//! ```text
//! cargo run --release --example train_toy -- span
//! cargo run --release --example train_toy -- dep
//! ```

use std::path::Path;
use std::time::Instant;

use unisrl::corpus::read_corpus;
use unisrl::data::Style;
use unisrl::network::ModelConfig;
use unisrl::train::{train, Dataset, TrainOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let style = match std::env::args().nth(1).as_deref() {
        Some("dep") => Style::Dep,
        _ => Style::Span,
    };
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let file = match style {
        Style::Span => "toy_span.jsonl",
        Style::Dep => "toy_dep.conll",
    };
    let data = Dataset::new(read_corpus(&fixtures.join(file))?);
    let config = ModelConfig::toy(style);
    let mut options = TrainOptions::new(7, &config);
    options.target_f1 = Some(100.0);
    options.eval_every = 5;

    let start = Instant::now();
    let outcome = train(config, &data, Some(&data), None, &options, None)?;
    for entry in &outcome.log {
        if let Some(dev) = &entry.dev {
            println!(
                "epoch {:>3}  loss {:>9.4}  pruning recall {:.3}  train F1 {:>6.2}",
                entry.epoch, entry.loss, entry.pruning_recall, dev.f1
            );
        }
    }
    println!(
        "best epoch {} after {:.1}s",
        outcome.best_epoch,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
