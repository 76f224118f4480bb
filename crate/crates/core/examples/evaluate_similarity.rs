//! Coverage and Spearman correlation on a word-similarity file, printed in
//! the usual "Coverage Spearman" table.
//!
//! cargo run --release --example evaluate_similarity [-- <model.vec> <dataset.tsv>...]

use std::io::Cursor;

use xlex::embedding::{EmbeddingMatrix, TrainingConfig};
use xlex::eval::{self, evaluate, format_table, load_dataset};
use xlex::pipeline::{self, CorpusSource};
use xlex::synthetic::{DeskCorpus, SyntheticConfig};

fn main() -> xlex::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let reports = if let [model, datasets @ ..] = &args[..] {
        let m = EmbeddingMatrix::load(model)?;
        datasets
            .iter()
            .map(|d| Ok(evaluate(model, &m, &eval::load_dataset_file(d)?)))
            .collect::<xlex::Result<Vec<_>>>()?
    } else {
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
        let d = load_dataset("synthetic", Cursor::new(desk.similarity_tsv))?;
        vec![evaluate("skipgram", &m, &d)]
    };
    print!("{}", format_table(&reports));
    for r in &reports {
        println!("{}", r.machine_line());
    }
    Ok(())
}
