//! Corpus-to-embedding plumbing shared by the command line and the examples.

use std::path::PathBuf;

use crate::corpus::{count_words, encode, RawCorpus, TokenStream, Vocabulary, WordCounts};
use crate::embedding::{EmbeddingMatrix, TrainingConfig, TrainingMode};
use crate::error::Result;
use crate::subword::{self, SubwordModel};
use crate::sgns;

/// Where sentences come from. Files may be gzip-compressed.
#[derive(Clone, Debug)]
pub enum CorpusSource {
    File(PathBuf),
    Text(String),
}

impl CorpusSource {
    pub fn open(&self) -> Result<RawCorpus> {
        match self {
            CorpusSource::File(p) => RawCorpus::open(p),
            CorpusSource::Text(t) => Ok(RawCorpus::from_text(t)),
        }
    }
}

impl From<PathBuf> for CorpusSource {
    fn from(p: PathBuf) -> Self {
        CorpusSource::File(p)
    }
}

/// Counts over the concatenation of `sources`, in order.
pub fn word_counts(sources: &[CorpusSource]) -> Result<WordCounts> {
    let mut counts = WordCounts::default();
    for s in sources {
        counts.merge(count_words(s.open()?)?);
    }
    Ok(counts)
}

pub fn token_stream(sources: &[CorpusSource], vocab: &Vocabulary) -> Result<TokenStream> {
    let mut stream = TokenStream::default();
    for s in sources {
        stream.append(&encode(s.open()?, vocab)?);
    }
    Ok(stream)
}

pub enum Trained {
    Skipgram(EmbeddingMatrix),
    Subword(SubwordModel),
}

impl Trained {
    /// Vectors of the training vocabulary.
    pub fn embedding(&self) -> Result<EmbeddingMatrix> {
        match self {
            Trained::Skipgram(m) => Ok(m.clone()),
            Trained::Subword(m) => m.embedding(),
        }
    }

    pub fn subword(&self) -> Option<&SubwordModel> {
        match self {
            Trained::Subword(m) => Some(m),
            Trained::Skipgram(_) => None,
        }
    }
}

/// Builds the vocabulary, encodes the corpus and runs the trainer picked by
/// `config.mode`.
pub fn train(sources: &[CorpusSource], config: &TrainingConfig) -> Result<Trained> {
    config.validate()?;
    let vocab = word_counts(sources)?.into_vocabulary(config.min_count)?;
    let stream = token_stream(sources, &vocab)?;
    log::info!("vocabulary {} words, {} tokens", vocab.len(), stream.len());
    Ok(match config.mode {
        TrainingMode::Skipgram => Trained::Skipgram(sgns::train(&stream, &vocab, config)?),
        TrainingMode::SubwordSkipgram => Trained::Subword(subword::train_model(&stream, &vocab, config)?),
    })
}
