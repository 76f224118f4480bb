//! Whole pipeline on a synthetic two-language corpus: train both halves,
//! align them without supervision, score the alignment against the cipher
//! table and evaluate on a 50-pair similarity file.
//!
//! cargo run --release --example desk_pipeline [-- <seed> [bytes per half]]

use std::io::Cursor;
use std::time::Instant;

use xlex::align::{self, mapped_embeddings, precision_at_1, AlignmentConfig};
use xlex::embedding::TrainingConfig;
use xlex::eval::{evaluate, evaluate_cross, format_table, load_dataset};
use xlex::pipeline::{self, CorpusSource};
use xlex::synthetic::{DeskCorpus, SyntheticConfig};

fn main() -> xlex::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let mut synthetic = SyntheticConfig::default();
    if let Some(seed) = args.next() {
        synthetic.seed = seed.parse().expect("seed");
    }
    if let Some(bytes) = args.next() {
        synthetic.bytes_per_half = bytes.parse().expect("bytes per half");
    }
    let t0 = Instant::now();
    let desk = DeskCorpus::generate(&synthetic);

    let config = TrainingConfig {
        dim: 50,
        epochs: 5,
        ..TrainingConfig::default()
    };
    let src = pipeline::train(&[CorpusSource::Text(desk.source_text.clone())], &config)?.embedding()?;
    let trg = pipeline::train(&[CorpusSource::Text(desk.target_text.clone())], &config)?.embedding()?;
    println!("trained {} + {} words in {:.1?}", src.len(), trg.len(), t0.elapsed());

    let model = align::align(&src, &trg, &AlignmentConfig::default())?;
    println!(
        "aligned: {} iterations, converged={}, objective {:.4}",
        model.iterations, model.converged, model.objective
    );

    let (msrc, mtrg) = mapped_embeddings(&src, &trg, &model)?;
    let gold: Vec<(usize, usize)> = desk
        .dictionary()
        .iter()
        .filter_map(|(s, t)| Some((src.vocab().id(s)?, trg.vocab().id(t)?)))
        .collect();
    let p1 = precision_at_1(
        align::to_f64(&msrc).view(),
        align::to_f64(&mtrg).view(),
        &gold,
    );
    println!("P@1 on the cipher table ({} pairs): {:.2}%", gold.len(), 100.0 * p1);

    let mono = load_dataset("synthetic", Cursor::new(desk.similarity_tsv.clone()))?;
    let cross = load_dataset("synthetic-cross", Cursor::new(desk.cross_similarity_tsv.clone()))?;
    let reports = [
        evaluate("source", &src, &mono),
        evaluate("target-cipher", &trg, &mono),
        evaluate_cross("source-target", &msrc, &mtrg, &cross),
    ];
    print!("{}", format_table(&reports));
    println!("total {:.1?}", t0.elapsed());
    Ok(())
}
