//! Builds an untrained span model, runs one sentence through the encoder,
//! the unary scorers and the biaffine role scorer, and decodes the result.
//!
//! ```text
//! cargo run --example score_sentence
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unisrl::autodiff::Tape;
use unisrl::corpus::build_vocab;
use unisrl::decode::{decode_constrained, ConstraintSet};
use unisrl::network::{ModelConfig, PredicateSource, SrlModel};
use unisrl::{Sentence, SpanRef, Style};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sentence = Sentence::builder(["The", "cat", "chased", "the", "mouse", "."], Style::Span)
        .tuple(3, SpanRef::new(1, 2)?, "A0")
        .tuple(3, SpanRef::new(4, 5)?, "A1")
        .build()?;
    let vocab = build_vocab(std::slice::from_ref(&sentence), 1)?;
    let config = ModelConfig::toy(Style::Span);
    let model = SrlModel::new(config, vocab, None, &mut ChaCha8Rng::seed_from_u64(1))?;
    println!("{} parameters", model.params().num_scalars());

    let input = model.input(&sentence, None);
    let mut tape = Tape::inference(model.params());
    let fwd = model.forward(&mut tape, &input, PredicateSource::All, None)?;
    println!("token representations {:?}", tape.value(fwd.tokens).shape());
    println!("encoder output        {:?}", tape.value(fwd.context).shape());
    println!("argument candidates   {}", fwd.candidates.len());
    println!("kept predicates       {:?}", fwd.predicates);
    println!("kept arguments        {}", fwd.arguments.len());
    if let Some(scores) = fwd.scores {
        println!(
            "tuple scores          {:?} (roles {:?})",
            tape.value(scores).shape(),
            model.roles().labels()
        );
    }

    let (loss, stats) = {
        let mut train_tape = Tape::with_params(model.params());
        let fwd = model.forward(&mut train_tape, &input, PredicateSource::All, None)?;
        let (loss, stats) = model.loss(&mut train_tape, &fwd, &sentence.gold_graph())?;
        (loss.map(|l| train_tape.value(l).item()), stats)
    };
    println!(
        "loss {loss:?}, gold tuples surviving pruning {}/{}",
        stats.kept, stats.gold
    );

    let table = model.score_table(&tape, &fwd)?;
    let graph = decode_constrained(&table, ConstraintSet::for_style(Style::Span))?;
    println!("untrained prediction: {} tuples", graph.len());
    Ok(())
}
