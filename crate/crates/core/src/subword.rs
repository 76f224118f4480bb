//! Subword skip-gram: a word is the mean of its whole-word vector and the
//! vectors of its hashed character n-grams.
//!
//! Unit ids follow one layout everywhere: whole-word units occupy
//! `[0, |V|)` and n-gram buckets occupy `[|V|, |V| + buckets)`. Training only
//! materialises the buckets the vocabulary actually touches.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1};

use crate::corpus::{TokenStream, Vocabulary};
use crate::embedding::{EmbeddingMatrix, TrainingConfig, TrainingMode};
use crate::error::{Error, Result};
use crate::sgns::{self, pair_loss, UnitLookup};

/// Character n-grams of `<word>`, shortest first, left to right. The full
/// bracketed form is left out; it is the whole-word unit.
pub fn extract_ngrams(word: &str, nmin: usize, nmax: usize) -> Result<Vec<String>> {
    if word.is_empty() {
        return Err(Error::parameter("cannot extract n-grams of an empty word"));
    }
    if word.chars().any(char::is_whitespace) {
        return Err(Error::parameter(format!("word '{word}' contains whitespace")));
    }
    let chars: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let len = chars.len();
    let mut out = Vec::new();
    for n in nmin.max(1)..=nmax.min(len) {
        if n == len {
            continue;
        }
        out.extend(chars.windows(n).map(|w| w.iter().collect::<String>()));
    }
    Ok(out)
}

/// FNV-1a, 32 bit.
pub fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

pub fn hash_ngram(ngram: &str, buckets: usize) -> usize {
    assert!(buckets >= 1, "bucket count must be positive");
    fnv1a(ngram.as_bytes()) as usize % buckets
}

/// Per-word unit ids for a vocabulary.
#[derive(Clone, Debug)]
pub struct NgramIndex {
    nmin: usize,
    nmax: usize,
    buckets: usize,
    vocab: Vocabulary,
    cache: Vec<Vec<usize>>,
}

impl NgramIndex {
    pub fn new(vocab: &Vocabulary, nmin: usize, nmax: usize, buckets: usize) -> Result<Self> {
        if nmin == 0 || nmin > nmax {
            return Err(Error::parameter(format!("invalid n-gram range [{nmin}, {nmax}]")));
        }
        if buckets == 0 {
            return Err(Error::parameter("bucket count must be positive"));
        }
        let mut index = NgramIndex {
            nmin,
            nmax,
            buckets,
            vocab: vocab.clone(),
            cache: Vec::with_capacity(vocab.len()),
        };
        for (id, word) in vocab.words().iter().enumerate() {
            let mut units = vec![id];
            units.extend(index.ngram_units(word)?);
            index.cache.push(units);
        }
        Ok(index)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn total_units(&self) -> usize {
        self.vocab.len() + self.buckets
    }

    fn ngram_units(&self, word: &str) -> Result<Vec<usize>> {
        Ok(extract_ngrams(word, self.nmin, self.nmax)?
            .iter()
            .map(|g| self.vocab.len() + hash_ngram(g, self.buckets))
            .collect())
    }

    /// Unit ids of an in-vocabulary word, whole-word id first.
    pub fn units(&self, id: usize) -> &[usize] {
        &self.cache[id]
    }

    /// Unit ids of any word: the cached list when in vocabulary, otherwise
    /// n-gram buckets only.
    pub fn word_units(&self, word: &str) -> Result<Vec<usize>> {
        match self.vocab.id(word) {
            Some(id) => Ok(self.cache[id].clone()),
            None => self.ngram_units(word),
        }
    }
}

/// Source of unit vectors by global unit id.
pub trait UnitVectors {
    fn unit(&self, id: usize) -> Option<ArrayView1<'_, f32>>;
}

impl UnitVectors for Array2<f32> {
    fn unit(&self, id: usize) -> Option<ArrayView1<'_, f32>> {
        (id < self.nrows()).then(|| self.row(id))
    }
}

/// Mean of the word's available unit vectors.
pub fn word_vector<U: UnitVectors>(word: &str, index: &NgramIndex, units: &U) -> Result<Array1<f32>> {
    let ids = index.word_units(word)?;
    let mut sum: Option<Array1<f32>> = None;
    let mut n = 0usize;
    for v in ids.iter().filter_map(|&id| units.unit(id)) {
        match &mut sum {
            Some(s) => *s += &v,
            None => sum = Some(v.to_owned()),
        }
        n += 1;
    }
    match sum {
        Some(s) => Ok(s / n as f32),
        None => Err(Error::RepresentationUnavailable(word.to_string())),
    }
}

/// Loss and gradients of one step when the center vector is the mean of
/// `units`. Each unit receives `1/|units|` of the center gradient.
#[derive(Clone, Debug)]
pub struct ComposedLoss {
    pub loss: f64,
    pub d_units: Vec<Vec<f64>>,
    pub d_context: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

pub fn composed_pair_loss(units: &[&[f64]], context: &[f64], negatives: &[&[f64]]) -> ComposedLoss {
    assert!(!units.is_empty(), "at least one unit vector is required");
    let d = context.len();
    let scale = 1.0 / units.len() as f64;
    let mut center = vec![0.0; d];
    for u in units {
        for (c, x) in center.iter_mut().zip(u.iter()) {
            *c += x;
        }
    }
    center.iter_mut().for_each(|c| *c *= scale);
    let inner = pair_loss(&center, context, negatives);
    let share: Vec<f64> = inner.d_center.iter().map(|g| g * scale).collect();
    ComposedLoss {
        loss: inner.loss,
        d_units: vec![share; units.len()],
        d_context: inner.d_context,
        d_negatives: inner.d_negatives,
    }
}

/// Trained subword parameters. Only units touched by the vocabulary are
/// stored; `rows` maps a global unit id to its row in `units`.
#[derive(Clone, Debug)]
pub struct SubwordModel {
    pub index: NgramIndex,
    rows: HashMap<usize, u32>,
    pub units: Array2<f32>,
    pub output: Array2<f32>,
}

impl UnitVectors for SubwordModel {
    fn unit(&self, id: usize) -> Option<ArrayView1<'_, f32>> {
        self.rows.get(&id).map(|&r| self.units.row(r as usize))
    }
}

impl SubwordModel {
    /// Composed vector of any word. Out-of-vocabulary words use the trained
    /// buckets they share with the vocabulary.
    pub fn word_vector(&self, word: &str) -> Result<Array1<f32>> {
        word_vector(word, &self.index, self)
    }

    /// Composed vectors of the vocabulary, in id order.
    pub fn embedding(&self) -> Result<EmbeddingMatrix> {
        let vocab = self.index.vocab();
        let mut m = Array2::zeros((vocab.len(), self.units.ncols()));
        for (id, mut row) in m.rows_mut().into_iter().enumerate() {
            row.assign(&self.word_vector(vocab.word(id))?);
        }
        EmbeddingMatrix::new(vocab.clone(), m)
    }
}

struct CompactUnits(Vec<Vec<u32>>);

impl UnitLookup for CompactUnits {
    fn units(&self, word: u32) -> &[u32] {
        &self.0[word as usize]
    }
}

pub fn train(stream: &TokenStream, vocab: &Vocabulary, config: &TrainingConfig) -> Result<EmbeddingMatrix> {
    train_model(stream, vocab, config)?.embedding()
}

pub fn train_model(stream: &TokenStream, vocab: &Vocabulary, config: &TrainingConfig) -> Result<SubwordModel> {
    if config.mode != TrainingMode::SubwordSkipgram {
        return Err(Error::parameter(format!(
            "subword trainer called with mode {}",
            config.mode
        )));
    }
    config.validate()?;
    let index = NgramIndex::new(vocab, config.nmin, config.nmax, config.buckets)?;

    // whole words keep their ids; buckets get rows in order of first use
    let mut rows: HashMap<usize, u32> = (0..vocab.len()).map(|i| (i, i as u32)).collect();
    let mut compact = Vec::with_capacity(vocab.len());
    for id in 0..vocab.len() {
        let list = index
            .units(id)
            .iter()
            .map(|&u| {
                let next = rows.len() as u32;
                *rows.entry(u).or_insert(next)
            })
            .collect();
        compact.push(list);
    }
    log::info!(
        "subword model: {} words, {} active buckets",
        vocab.len(),
        rows.len() - vocab.len()
    );

    let (units, output) = sgns::run(stream, vocab, config, rows.len(), &CompactUnits(compact))?;
    Ok(SubwordModel {
        index,
        rows,
        units,
        output,
    })
}
