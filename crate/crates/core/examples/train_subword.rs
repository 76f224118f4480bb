//! Subword skip-gram: words are the mean of a whole-word vector and their
//! hashed character n-grams, so unseen words still get vectors.
//!
//! cargo run --release --example train_subword

use xlex::corpus::{build_vocabulary, encode, RawCorpus};
use xlex::embedding::{cosine, TrainingConfig, TrainingMode};
use xlex::subword::{self, extract_ngrams};

fn main() -> xlex::Result<()> {
    // noun-class prefixes and a shared stem, Sotho-Tswana style
    let mut text = String::new();
    for i in 0..400 {
        let verb = ["bona", "rata", "thusa", "bitsa"][i % 4];
        text.push_str(&format!("motho o {verb} ngwana\nbatho ba {verb} bana\n"));
        text.push_str(&format!("pula e na kajeno\nmaru a {verb} pula\n"));
    }
    let config = TrainingConfig {
        mode: TrainingMode::SubwordSkipgram,
        dim: 30,
        epochs: 5,
        buckets: 50_000,
        ..TrainingConfig::default()
    };
    let vocab = build_vocabulary(RawCorpus::from_text(&text), 1)?;
    let stream = encode(RawCorpus::from_text(&text), &vocab)?;
    let model = subword::train_model(&stream, &vocab, &config)?;

    println!("n-grams of 'batho': {:?}", extract_ngrams("batho", 3, 6)?);
    let oov = model.word_vector("mothonyana")?;
    let known = model.word_vector("motho")?;
    let other = model.word_vector("pula")?;
    println!(
        "cos(mothonyana, motho) = {:.3}, cos(mothonyana, pula) = {:.3}",
        cosine(oov.view(), known.view()),
        cosine(oov.view(), other.view())
    );
    match model.word_vector("xyz") {
        Ok(_) => println!("xyz composed"),
        Err(e) => println!("xyz: {e}"),
    }
    Ok(())
}
