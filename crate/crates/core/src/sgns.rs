//! Skip-gram with negative sampling.
//!
//! The center word's input vector predicts each context word's output vector
//! against `negatives` noise words drawn from the unigram distribution raised
//! to `NOISE_EXPONENT`. The same loop drives the subword trainer, where the
//! input vector of a word is the mean of several unit vectors.

use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{TokenStream, Vocabulary};
use crate::embedding::{EmbeddingMatrix, TrainingConfig, TrainingMode};
use crate::error::{Error, Result};

pub const NOISE_EXPONENT: f64 = 0.75;
/// Dot products are clamped to this magnitude before the sigmoid.
pub const MAX_SCORE: f64 = 30.0;
pub const MIN_LR: f64 = 1e-4;

/// `p(w) = count(w)^alpha / Σ_v count(v)^alpha`.
pub fn noise_distribution(vocab: &Vocabulary, alpha: f64) -> Result<Vec<f64>> {
    let counts = vocab
        .counts()
        .ok_or_else(|| Error::parameter("vocabulary has no counts"))?;
    noise_from_counts(counts, alpha)
}

pub fn noise_from_counts(counts: &[u64], alpha: f64) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::parameter(format!("alpha must be >= 0, got {alpha}")));
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(alpha)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Samples word ids from a noise distribution.
#[derive(Clone, Debug)]
pub struct NoiseTable {
    probs: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl NoiseTable {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let index = WeightedIndex::new(&probs).map_err(|e| Error::parameter(e.to_string()))?;
        Ok(NoiseTable { probs, index })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.index.sample(rng) as u32
    }

    /// Draws a noise word different from `avoid` when the vocabulary allows it.
    fn sample_excluding<R: Rng + ?Sized>(&self, rng: &mut R, avoid: u32) -> Option<u32> {
        if self.probs.len() < 2 || self.probs[avoid as usize] >= 1.0 {
            return None;
        }
        loop {
            let w = self.sample(rng);
            if w != avoid {
                return Some(w);
            }
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// -ln σ(s), stable for |s| <= MAX_SCORE
fn neg_log_sigmoid(s: f64) -> f64 {
    (-s).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss of one positive pair plus its negatives, and its exact gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    pub d_center: Vec<f64>,
    pub d_context: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

/// `−ln σ(c·x) − Σ ln σ(−c·n)` with every dot product clamped to
/// `±MAX_SCORE`. Where the clamp is active the term is constant and its
/// gradient is zero.
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> PairLoss {
    let d = center.len();
    let mut d_center = vec![0.0; d];

    let raw = dot(center, context);
    let s = raw.clamp(-MAX_SCORE, MAX_SCORE);
    let mut loss = neg_log_sigmoid(s);
    let g = if raw == s { sigmoid(s) - 1.0 } else { 0.0 };
    let d_context: Vec<f64> = center.iter().map(|c| g * c).collect();
    for (dc, x) in d_center.iter_mut().zip(context) {
        *dc += g * x;
    }

    let mut d_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let raw = dot(center, neg);
        let s = raw.clamp(-MAX_SCORE, MAX_SCORE);
        loss += neg_log_sigmoid(-s);
        let g = if raw == s { sigmoid(s) } else { 0.0 };
        d_negatives.push(center.iter().map(|c| g * c).collect());
        for (dc, x) in d_center.iter_mut().zip(neg.iter()) {
            *dc += g * x;
        }
    }

    PairLoss {
        loss,
        d_center,
        d_context,
        d_negatives,
    }
}

/// Trained skip-gram parameters. `input` is the published embedding.
#[derive(Clone, Debug)]
pub struct SgnsModel {
    pub vocab: Vocabulary,
    pub input: Array2<f32>,
    pub output: Array2<f32>,
}

impl SgnsModel {
    pub fn into_embedding(self) -> Result<EmbeddingMatrix> {
        EmbeddingMatrix::new(self.vocab, self.input)
    }
}

pub fn train(
    stream: &TokenStream,
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<EmbeddingMatrix> {
    train_model(stream, vocab, config)?.into_embedding()
}

pub fn train_model(
    stream: &TokenStream,
    vocab: &Vocabulary,
    config: &TrainingConfig,
) -> Result<SgnsModel> {
    if config.mode != TrainingMode::Skipgram {
        return Err(Error::parameter(format!(
            "skip-gram trainer called with mode {}",
            config.mode
        )));
    }
    let units = SingleUnits::new(vocab.len());
    let (input, output) = run(stream, vocab, config, vocab.len(), &units)?;
    Ok(SgnsModel {
        vocab: vocab.clone(),
        input,
        output,
    })
}

/// Maps a word id to the input rows whose mean represents it.
pub(crate) trait UnitLookup: Sync {
    fn units(&self, word: u32) -> &[u32];
}

struct SingleUnits(Vec<u32>);

impl SingleUnits {
    fn new(n: usize) -> Self {
        SingleUnits((0..n as u32).collect())
    }
}

impl UnitLookup for SingleUnits {
    fn units(&self, word: u32) -> &[u32] {
        let w = word as usize;
        &self.0[w..w + 1]
    }
}

/// Row-major `f32` matrix shared between Hogwild workers. Reads and writes are
/// relaxed atomics: workers may overwrite each other's updates, but never
/// observe torn values.
pub(crate) struct SharedMatrix {
    data: Vec<AtomicU32>,
    cols: usize,
}

impl SharedMatrix {
    pub(crate) fn from_array(m: &Array2<f32>) -> Self {
        SharedMatrix {
            data: m.iter().map(|v| AtomicU32::new(v.to_bits())).collect(),
            cols: m.ncols(),
        }
    }

    pub(crate) fn into_array(self) -> Array2<f32> {
        let rows = self.data.len() / self.cols;
        let data = self
            .data
            .into_iter()
            .map(|a| f32::from_bits(a.into_inner()))
            .collect();
        Array2::from_shape_vec((rows, self.cols), data).unwrap()
    }

    #[inline]
    fn row(&self, r: usize) -> &[AtomicU32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    fn load_into(&self, r: usize, buf: &mut [f32]) {
        for (b, a) in buf.iter_mut().zip(self.row(r)) {
            *b = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    #[inline]
    fn add_into(&self, r: usize, buf: &mut [f32]) {
        for (b, a) in buf.iter_mut().zip(self.row(r)) {
            *b += f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    /// row += scale * delta
    #[inline]
    fn axpy(&self, r: usize, scale: f32, delta: &[f32]) {
        for (a, d) in self.row(r).iter().zip(delta) {
            let v = f32::from_bits(a.load(Ordering::Relaxed)) + scale * d;
            a.store(v.to_bits(), Ordering::Relaxed);
        }
    }
}

pub(crate) fn init_input(rows: usize, dim: usize, seed: u64) -> Array2<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f32;
    Array2::from_shape_simple_fn((rows, dim), || rng.random_range(-bound..=bound))
}

/// Shared training loop. Returns the input-unit and output matrices.
pub(crate) fn run<U: UnitLookup>(
    stream: &TokenStream,
    vocab: &Vocabulary,
    config: &TrainingConfig,
    input_rows: usize,
    units: &U,
) -> Result<(Array2<f32>, Array2<f32>)> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let counts = vocab
        .counts()
        .ok_or_else(|| Error::parameter("vocabulary has no counts"))?;
    if let Some(&bad) = stream.tokens().iter().find(|&&t| t as usize >= vocab.len()) {
        return Err(Error::parameter(format!(
            "token id {bad} outside vocabulary of {}",
            vocab.len()
        )));
    }
    let noise = NoiseTable::new(noise_from_counts(counts, NOISE_EXPONENT)?)?;
    let keep = keep_probabilities(counts, config.subsample);

    let input = SharedMatrix::from_array(&init_input(input_rows, config.dim, config.seed));
    let output = SharedMatrix::from_array(&Array2::zeros((vocab.len(), config.dim)));

    let total = (config.epochs as u64) * (stream.len() as u64);
    let progress = AtomicU64::new(0);
    let threads = config.threads.min(stream.num_sentences()).max(1);
    let shard = stream.num_sentences().div_ceil(threads);

    let worker = |tid: usize| {
        let lo = (tid * shard).min(stream.num_sentences());
        let hi = ((tid + 1) * shard).min(stream.num_sentences());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(tid as u64 + 1);
        let mut w = Worker::new(config, &input, &output, &noise, units);
        let mut kept = Vec::new();
        for epoch in 0..config.epochs {
            for s in lo..hi {
                let sentence = stream.sentence(s);
                let done = progress.fetch_add(sentence.len() as u64, Ordering::Relaxed);
                let lr = learning_rate(config.initial_lr, done, total);
                kept.clear();
                match &keep {
                    Some(p) => kept.extend(
                        sentence
                            .iter()
                            .copied()
                            .filter(|&t| rng.random::<f64>() < p[t as usize]),
                    ),
                    None => kept.extend_from_slice(sentence),
                }
                w.sentence(&kept, lr as f32, &mut rng);
            }
            log::debug!("worker {tid} finished epoch {}", epoch + 1);
        }
    };

    if threads == 1 {
        worker(0);
    } else {
        std::thread::scope(|scope| {
            for tid in 0..threads {
                let worker = &worker;
                scope.spawn(move || worker(tid));
            }
        });
    }

    Ok((input.into_array(), output.into_array()))
}

/// Linear decay from `initial` to `MIN_LR` over `total` processed tokens.
pub fn learning_rate(initial: f64, done: u64, total: u64) -> f64 {
    let floor = MIN_LR.min(initial);
    let progress = (done as f64 / total.max(1) as f64).min(1.0);
    initial - (initial - floor) * progress
}

// word2vec's subsampling rule
fn keep_probabilities(counts: &[u64], threshold: f64) -> Option<Vec<f64>> {
    if threshold <= 0.0 {
        return None;
    }
    let total: u64 = counts.iter().sum();
    let t = threshold * total as f64;
    Some(
        counts
            .iter()
            .map(|&c| {
                let c = c as f64;
                ((c / t).sqrt() + 1.0) * t / c
            })
            .collect(),
    )
}

struct Worker<'a, U> {
    config: &'a TrainingConfig,
    input: &'a SharedMatrix,
    output: &'a SharedMatrix,
    noise: &'a NoiseTable,
    units: &'a U,
    hidden: Vec<f32>,
    grad: Vec<f32>,
    out_row: Vec<f32>,
}

impl<'a, U: UnitLookup> Worker<'a, U> {
    fn new(
        config: &'a TrainingConfig,
        input: &'a SharedMatrix,
        output: &'a SharedMatrix,
        noise: &'a NoiseTable,
        units: &'a U,
    ) -> Self {
        let d = config.dim;
        Worker {
            config,
            input,
            output,
            noise,
            units,
            hidden: vec![0.0; d],
            grad: vec![0.0; d],
            out_row: vec![0.0; d],
        }
    }

    fn sentence(&mut self, tokens: &[u32], lr: f32, rng: &mut ChaCha8Rng) {
        for t in 0..tokens.len() {
            let b = rng.random_range(1..=self.config.window);
            let lo = t.saturating_sub(b);
            let hi = (t + b).min(tokens.len() - 1);
            for c in lo..=hi {
                if c != t {
                    self.pair(tokens[t], tokens[c], lr, rng);
                }
            }
        }
    }

    fn pair(&mut self, center: u32, context: u32, lr: f32, rng: &mut ChaCha8Rng) {
        let units = self.units.units(center);
        self.hidden.iter_mut().for_each(|h| *h = 0.0);
        for &u in units {
            self.input.add_into(u as usize, &mut self.hidden);
        }
        if units.len() > 1 {
            let inv = 1.0 / units.len() as f32;
            self.hidden.iter_mut().for_each(|h| *h *= inv);
        }
        self.grad.iter_mut().for_each(|g| *g = 0.0);

        self.update_output(context, 1.0, lr);
        for _ in 0..self.config.negatives {
            if let Some(neg) = self.noise.sample_excluding(rng, context) {
                self.update_output(neg, 0.0, lr);
            }
        }

        let scale = 1.0 / units.len() as f32;
        for &u in units {
            self.input.axpy(u as usize, scale, &self.grad);
        }
    }

    fn update_output(&mut self, target: u32, label: f32, lr: f32) {
        self.output.load_into(target as usize, &mut self.out_row);
        let score: f32 = self.hidden.iter().zip(&self.out_row).map(|(h, o)| h * o).sum();
        let s = (score as f64).clamp(-MAX_SCORE, MAX_SCORE);
        let g = (label - sigmoid(s) as f32) * lr;
        for (acc, o) in self.grad.iter_mut().zip(&self.out_row) {
            *acc += g * o;
        }
        self.output.axpy(target as usize, g, &self.hidden);
    }
}
