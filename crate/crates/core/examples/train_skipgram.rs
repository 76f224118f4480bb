//! Skip-gram with negative sampling on a synthetic corpus, then nearest
//! neighbors of a few frequent words.
//!
//! cargo run --release --example train_skipgram

use xlex::embedding::TrainingConfig;
use xlex::pipeline::{self, CorpusSource};
use xlex::synthetic::{DeskCorpus, SyntheticConfig};

fn main() -> xlex::Result<()> {
    let desk = DeskCorpus::generate(&SyntheticConfig {
        bytes_per_half: 300_000,
        ..SyntheticConfig::default()
    });
    let config = TrainingConfig {
        dim: 50,
        epochs: 5,
        ..TrainingConfig::default()
    };
    let m = pipeline::train(&[CorpusSource::Text(desk.source_text)], &config)?.embedding()?;
    println!("{} words, dim {}", m.len(), m.dim());
    let lang = &desk.language;
    for word in &m.vocab().words()[..5] {
        let id = lang.words.iter().position(|w| w == word).unwrap();
        print!("{word}:");
        for (n, cos) in m.nearest_neighbors(word, 5)? {
            let other = lang.words.iter().position(|w| *w == n).unwrap();
            let same = if lang.cluster[id] == lang.cluster[other] { "*" } else { "" };
            print!(" {n}{same} ({cos:.2})");
        }
        println!();
    }
    println!("(* marks a neighbor from the same latent cluster)");
    Ok(())
}
