//! Writes the synthetic two-language corpus to a directory so the `xlex`
//! binary can run the pipeline on it.
//!
//! cargo run --release --example write_desk_corpus -- <dir>
//! xlex train <dir>/source.txt --dim 50 --epochs 5 --out <dir>/src
//! xlex train <dir>/target.txt --dim 50 --epochs 5 --out <dir>/trg
//! xlex align <dir>/src/embeddings.vec <dir>/trg/embeddings.vec --gold <dir>/cipher.tsv --out <dir>/aligned
//! xlex eval --cross-lingual --embeddings <dir>/aligned/source.mapped.vec <dir>/aligned/target.mapped.vec --dataset <dir>/cross.tsv

use std::fs;
use std::path::PathBuf;

use xlex::synthetic::{DeskCorpus, SyntheticConfig};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "desk".into()));
    fs::create_dir_all(&dir)?;
    let desk = DeskCorpus::generate(&SyntheticConfig::default());
    fs::write(dir.join("source.txt"), &desk.source_text)?;
    fs::write(dir.join("target.txt"), &desk.target_text)?;
    let table: String = desk.dictionary().iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
    fs::write(dir.join("cipher.tsv"), table)?;
    fs::write(dir.join("similarity.tsv"), &desk.similarity_tsv)?;
    fs::write(dir.join("cross.tsv"), &desk.cross_similarity_tsv)?;
    println!("wrote {}", dir.display());
    Ok(())
}
