//! Embedding matrices, training hyperparameters, and the shared text format.
//!
//! The text format is the word2vec one: a `rows dims` header, then one
//! `word v1 … vd` line per row in vocabulary id order. Values are written with
//! the shortest representation that parses back to the same `f32`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vocabulary,
    matrix: Array2<f32>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vocabulary, matrix: Array2<f32>) -> Result<Self> {
        if matrix.nrows() != vocab.len() {
            return Err(Error::DimensionMismatch(matrix.nrows(), vocab.len()));
        }
        if matrix.ncols() == 0 {
            return Err(Error::parameter("embedding dimension must be positive"));
        }
        if let Some(pos) = matrix.iter().position(|v| !v.is_finite()) {
            let row = pos / matrix.ncols();
            return Err(Error::parameter(format!(
                "non-finite entry in the vector of '{}'",
                vocab.word(row)
            )));
        }
        Ok(EmbeddingMatrix { vocab, matrix })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn matrix(&self) -> &Array2<f32> {
        &self.matrix
    }

    pub fn into_parts(self) -> (Vocabulary, Array2<f32>) {
        (self.vocab, self.matrix)
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn vector(&self, word: &str) -> Option<ArrayView1<'_, f32>> {
        self.vocab.id(word).map(|i| self.matrix.row(i))
    }

    /// The `k` nearest words to `word` by cosine, excluding `word` itself.
    /// Ties are broken by ascending id.
    pub fn nearest_neighbors(&self, word: &str, k: usize) -> Result<Vec<(String, f32)>> {
        let query = self
            .vocab
            .id(word)
            .ok_or_else(|| Error::UnknownWord(word.to_string()))?;
        if k == 0 || k >= self.len() {
            return Err(Error::parameter(format!(
                "k must be in [1, {}), got {k}",
                self.len()
            )));
        }
        let q = self.matrix.row(query);
        let mut scored: Vec<(usize, f32)> = (0..self.len())
            .filter(|&i| i != query)
            .map(|i| (i, cosine(q, self.matrix.row(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(i, c)| (self.vocab.word(i).to_string(), c))
            .collect())
    }

    pub fn write_text<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        writeln!(out, "{} {}", self.len(), self.dim())?;
        for (word, row) in self.vocab.words().iter().zip(self.matrix.rows()) {
            out.write_all(word.as_bytes())?;
            for v in row {
                write!(out, " {v:?}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = match lines.next() {
            Some(line) => line?,
            None => return Err(Error::format(1, "missing header")),
        };
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(usize::from_str)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(1, format!("bad header: {e}")))?;
        let [rows, dim] = dims[..] else {
            return Err(Error::format(1, "header must be 'rows dims'"));
        };
        if dim == 0 {
            return Err(Error::format(1, "dimension must be positive"));
        }

        let mut words = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        for r in 0..rows {
            let lineno = r + 2;
            let line = match lines.next() {
                Some(line) => line?,
                None => {
                    return Err(Error::format(
                        lineno,
                        format!("expected {rows} rows, found {r}"),
                    ))
                }
            };
            let mut fields = line.split_whitespace();
            let word = fields
                .next()
                .ok_or_else(|| Error::format(lineno, "empty row"))?;
            let before = data.len();
            for f in fields {
                let v: f32 = f
                    .parse()
                    .map_err(|e| Error::format(lineno, format!("bad value '{f}': {e}")))?;
                if !v.is_finite() {
                    return Err(Error::format(lineno, format!("non-finite value '{f}'")));
                }
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::format(
                    lineno,
                    format!("expected {dim} values, found {}", data.len() - before),
                ));
            }
            words.push(word.to_string());
        }
        if let Some((i, line)) = lines.enumerate().find_map(|(i, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((i, other)),
        }) {
            line?;
            return Err(Error::format(rows + 2 + i, "more rows than the header declares"));
        }

        let vocab = Vocabulary::from_words(words).map_err(|e| match e {
            // from_words counts entries from 1; the file has a header line
            Error::DuplicateEntry { word, line } => Error::DuplicateEntry {
                word,
                line: line + 1,
            },
            other => other,
        })?;
        let matrix = Array2::from_shape_vec((rows, dim), data)
            .map_err(|e| Error::format(1, e.to_string()))?;
        Ok(EmbeddingMatrix { vocab, matrix })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_text(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_text(BufReader::new(file))
    }
}

/// Cosine similarity; zero when either vector has zero norm.
pub fn cosine(a: ArrayView1<f32>, b: ArrayView1<f32>) -> f32 {
    let (mut dot, mut na, mut nb) = (0f64, 0f64, 0f64);
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na.sqrt() * nb.sqrt())) as f32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainingMode {
    Skipgram,
    SubwordSkipgram,
}

impl fmt::Display for TrainingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainingMode::Skipgram => "skipgram",
            TrainingMode::SubwordSkipgram => "subword",
        })
    }
}

impl FromStr for TrainingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skipgram" => Ok(TrainingMode::Skipgram),
            "subword" | "subword-skipgram" => Ok(TrainingMode::SubwordSkipgram),
            other => Err(Error::parameter(format!(
                "unknown mode '{other}' (expected skipgram or subword)"
            ))),
        }
    }
}

/// Hyperparameters shared by both trainers.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub mode: TrainingMode,
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negatives: usize,
    pub initial_lr: f64,
    pub seed: u64,
    pub nmin: usize,
    pub nmax: usize,
    pub buckets: usize,
    /// Frequent-word subsampling threshold; 0 disables it.
    pub subsample: f64,
    /// Worker threads. One thread gives bit-reproducible training.
    pub threads: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            mode: TrainingMode::Skipgram,
            dim: 300,
            window: 4,
            min_count: 1,
            epochs: 100,
            negatives: 5,
            initial_lr: 0.025,
            seed: 1,
            nmin: 3,
            nmax: 6,
            buckets: 2_000_000,
            subsample: 0.0,
            threads: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("epochs", self.epochs),
            ("negatives", self.negatives),
            ("nmin", self.nmin),
            ("nmax", self.nmax),
            ("buckets", self.buckets),
            ("threads", self.threads),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::parameter(format!("{name} must be positive")));
            }
        }
        if self.min_count == 0 {
            return Err(Error::parameter("min_count must be positive"));
        }
        if self.nmin > self.nmax {
            return Err(Error::parameter(format!(
                "nmin ({}) must not exceed nmax ({})",
                self.nmin, self.nmax
            )));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::parameter("initial_lr must be a positive number"));
        }
        if !(self.subsample >= 0.0 && self.subsample.is_finite()) {
            return Err(Error::parameter("subsample must be non-negative"));
        }
        Ok(())
    }
}
