//! Preprocessing, corpus statistics and the frequency-ordered vocabulary.
//!
//! cargo run --example corpus_stats [-- <corpus file>...]

use xlex::corpus::{self, preprocess, RawCorpus};

const SAMPLE: &str = "Motho ke motho ka batho.\nBatho ba 2 ba tsamaya, ba bina!\nKe a leboga.";

fn main() -> xlex::Result<()> {
    let paths: Vec<String> = std::env::args().skip(1).collect();
    if paths.is_empty() {
        println!("{:?}", preprocess("Batho ba 2 ba tsamaya, ba bina!"));
        let vocab = corpus::build_vocabulary(RawCorpus::from_text(SAMPLE), 1)?;
        for (id, word) in vocab.words().iter().enumerate() {
            println!("{id:>3} {word:<10} {}", vocab.count(id).unwrap_or(0));
        }
        let s = corpus::stats(RawCorpus::from_text(SAMPLE))?;
        println!("sample tokens={} unique={}", s.tokens, s.unique);
    }
    for p in paths {
        let s = corpus::stats(RawCorpus::open(&p)?)?;
        println!("{p} tokens={} unique={}", s.tokens, s.unique);
    }
    Ok(())
}
