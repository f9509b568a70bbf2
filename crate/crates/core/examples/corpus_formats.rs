//! Reads the bundled span corpus, builds a vocabulary, converts arguments to
//! their syntactic heads and writes both supported formats.
//!
//! ```text
//! cargo run --example corpus_formats
//! ```

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use unisrl::corpus::{build_vocab, emit_conll, emit_jsonl, parse_jsonl, parse_pretrained, read_corpus};
use unisrl::eval::convert_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let span = read_corpus(&fixtures.join("toy_span.jsonl"))?;
    let vocab = build_vocab(&span, 1)?;
    println!(
        "{} sentences, {} words, {} characters, roles {:?}",
        span.len(),
        vocab.num_words(),
        vocab.num_chars(),
        vocab.roles().labels()
    );
    println!("vocabulary fingerprint {}", vocab.fingerprint());

    let first = &span[..2];
    let jsonl = emit_jsonl(first);
    print!("\n{jsonl}");
    assert_eq!(parse_jsonl(&jsonl)?, first);

    let dep = convert_corpus(first)?;
    print!("\n{}", emit_conll(&dep)?);

    let vectors = "the 0.1 0.2 0.3\nThe 0.4 0.5 0.6\ncat -0.1 0.0 0.2\n";
    let table = parse_pretrained(vectors, &vocab, &mut ChaCha8Rng::seed_from_u64(0))?;
    println!("\npretrained table {:?}", table.rows.shape());
    for word in ["the", "The", "cat", "dog"] {
        let id = vocab.word_id(word);
        println!("{word:>4} -> row {id:>2}: {:?}", table.rows.row(id));
    }
    Ok(())
}
