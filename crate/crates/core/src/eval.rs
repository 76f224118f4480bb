//! Intrinsic evaluation against human word-similarity judgements.
//!
//! Each covered pair is scored with the cosine of its two word vectors, and
//! the model scores are compared with the human scores by Spearman rank
//! correlation. Coverage is the share of pairs whose two words are both in
//! the model.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::preprocess;
use crate::embedding::{cosine, EmbeddingMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityPair {
    pub word1: String,
    pub word2: String,
    pub human_score: f64,
}

/// A row the loader skipped, with its 1-based line number.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectedRow {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<SimilarityPair>,
    pub rejected: Vec<RejectedRow>,
}

fn single_token(word: &str) -> Option<String> {
    let mut tokens = preprocess(word);
    (tokens.len() == 1).then(|| tokens.pop().unwrap())
}

const HEADER_WORDS: [&str; 8] = ["word", "score", "sim", "mean", "rating", "human", "assoc", "value"];

/// A non-numeric score alone is not enough: `a<TAB>b<TAB>x` is a broken
/// row, not a header. Headers name their columns.
fn looks_like_header(fields: &[&str]) -> bool {
    fields.iter().any(|f| {
        let f = f.to_lowercase();
        HEADER_WORDS.iter().any(|h| f.contains(h))
    })
}

/// Parses three-column rows `word1, word2, score` separated by tabs or
/// commas. A first row with a non-numeric score and column-like labels is a
/// header.
pub fn load_dataset<R: BufRead>(name: &str, input: R) -> Result<SimilarityDataset> {
    let mut pairs = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = HashSet::new();
    let mut first = true;
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let sep = if line.contains('\t') { '\t' } else { ',' };
        let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::format(
                lineno,
                format!("expected 3 fields, found {}", fields.len()),
            ));
        }
        let score = match fields[2].parse::<f64>() {
            Ok(s) if s.is_finite() => s,
            Ok(_) => return Err(Error::format(lineno, "score is not finite")),
            Err(_) if first && looks_like_header(&fields) => {
                first = false;
                continue;
            }
            Err(_) => {
                return Err(Error::format(
                    lineno,
                    format!("score '{}' is not a number", fields[2]),
                ))
            }
        };
        first = false;

        let (Some(w1), Some(w2)) = (single_token(fields[0]), single_token(fields[1])) else {
            rejected.push(RejectedRow {
                line: lineno,
                reason: "word does not preprocess to a single token".into(),
            });
            continue;
        };
        let key = if w1 <= w2 {
            (w1.clone(), w2.clone())
        } else {
            (w2.clone(), w1.clone())
        };
        if !seen.insert(key) {
            rejected.push(RejectedRow {
                line: lineno,
                reason: format!("duplicate pair {w1}/{w2}"),
            });
            continue;
        }
        pairs.push(SimilarityPair {
            word1: w1,
            word2: w2,
            human_score: score,
        });
    }
    if !rejected.is_empty() {
        log::warn!("{name}: rejected {} rows", rejected.len());
    }
    Ok(SimilarityDataset {
        name: name.to_string(),
        pairs,
        rejected,
    })
}

pub fn load_dataset_file(path: impl AsRef<Path>) -> Result<SimilarityDataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_dataset(&name, BufReader::new(file))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPair {
    pub pair: SimilarityPair,
    pub model_cosine: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairScores {
    pub scored: Vec<ScoredPair>,
    pub pairs_total: usize,
    /// Distinct dataset words, and how many of them were found.
    pub words_total: usize,
    pub words_covered: usize,
}

/// Cosines of the covered pairs; `first` looks up `word1`, `second` looks up
/// `word2`. Pass the same matrix twice for a monolingual dataset.
pub fn pair_scores(first: &EmbeddingMatrix, second: &EmbeddingMatrix, dataset: &SimilarityDataset) -> PairScores {
    let mut scored = Vec::new();
    for pair in &dataset.pairs {
        if let (Some(a), Some(b)) = (first.vector(&pair.word1), second.vector(&pair.word2)) {
            scored.push(ScoredPair {
                pair: pair.clone(),
                model_cosine: cosine(a, b) as f64,
            });
        }
    }
    let same_space = std::ptr::eq(first, second);
    let mut words: HashSet<(bool, &str)> = HashSet::new();
    for p in &dataset.pairs {
        words.insert((false, &p.word1));
        words.insert((!same_space, &p.word2));
    }
    let words_covered = words
        .iter()
        .filter(|(side, w)| if *side { second.vocab().contains(w) } else { first.vocab().contains(w) })
        .count();
    PairScores {
        scored,
        pairs_total: dataset.pairs.len(),
        words_total: words.len(),
        words_covered,
    }
}

/// Average (fractional) ranks, 1-based.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j share the mean of ranks i+1..=j+1
        let rank = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation, or `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::UndefinedCorrelation(format!(
            "length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!(
            "need at least 2 pairs, got {}",
            xs.len()
        )));
    }
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
        .ok_or_else(|| Error::UndefinedCorrelation("ranks have zero variance".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub model_id: String,
    pub dataset: String,
    pub pairs_total: usize,
    pub pairs_covered: usize,
    pub coverage_percent: f64,
    pub word_coverage_percent: f64,
    pub spearman_rho_percent: Option<f64>,
    pub rejected_rows: usize,
    /// Why the row has no correlation (or no numbers at all).
    pub error: Option<String>,
}

impl EvalReport {
    /// A row for a dataset that could not be evaluated at all.
    pub fn failed(model_id: &str, dataset: &str, error: impl ToString) -> Self {
        EvalReport {
            model_id: model_id.to_string(),
            dataset: dataset.to_string(),
            pairs_total: 0,
            pairs_covered: 0,
            coverage_percent: 0.0,
            word_coverage_percent: 0.0,
            spearman_rho_percent: None,
            rejected_rows: 0,
            error: Some(error.to_string()),
        }
    }

    /// `model<TAB>dataset<TAB>coverage<TAB>spearman`
    pub fn machine_line(&self) -> String {
        let rho = match (self.spearman_rho_percent, &self.error) {
            (Some(r), _) => format!("{r:.2}"),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "NA".into(),
        };
        format!("{}\t{}\t{:.2}\t{}", self.model_id, self.dataset, self.coverage_percent, rho)
    }
}

fn percent(part: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * part as f64 / total as f64
    }
}

fn report(model_id: &str, dataset: &SimilarityDataset, scores: PairScores) -> EvalReport {
    let human: Vec<f64> = scores.scored.iter().map(|s| s.pair.human_score).collect();
    let model: Vec<f64> = scores.scored.iter().map(|s| s.model_cosine).collect();
    let (rho, error) = match spearman(&model, &human) {
        Ok(r) => (Some(100.0 * r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    EvalReport {
        model_id: model_id.to_string(),
        dataset: dataset.name.clone(),
        pairs_total: scores.pairs_total,
        pairs_covered: scores.scored.len(),
        coverage_percent: percent(scores.scored.len(), scores.pairs_total),
        word_coverage_percent: percent(scores.words_covered, scores.words_total),
        spearman_rho_percent: rho,
        rejected_rows: dataset.rejected.len(),
        error,
    }
}

/// Monolingual evaluation in a single space.
pub fn evaluate(model_id: &str, m: &EmbeddingMatrix, dataset: &SimilarityDataset) -> EvalReport {
    report(model_id, dataset, pair_scores(m, m, dataset))
}

/// Cross-lingual evaluation: `word1` in the mapped source space, `word2` in
/// the mapped target space.
pub fn evaluate_cross(
    model_id: &str,
    source: &EmbeddingMatrix,
    target: &EmbeddingMatrix,
    dataset: &SimilarityDataset,
) -> EvalReport {
    report(model_id, dataset, pair_scores(source, target, dataset))
}

/// Aligned plain-text table: one row per report, coverage and Spearman with
/// two decimals.
pub fn format_table(reports: &[EvalReport]) -> String {
    let labels: Vec<String> = reports
        .iter()
        .map(|r| format!("{}({})", r.model_id, r.dataset))
        .collect();
    let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}", "Model", "Coverage", "Spearman");
    for (label, r) in labels.iter().zip(reports) {
        let rho = match (r.spearman_rho_percent, &r.error) {
            (Some(v), _) => format!("{v:>8.2}"),
            (None, Some(_)) => format!("{:>8}", "error"),
            (None, None) => format!("{:>8}", "NA"),
        };
        let _ = write!(out, "{label:<width$}  {:>8.2}  {rho}", r.coverage_percent);
        if let Some(e) = &r.error {
            let _ = write!(out, "  # {e}");
        }
        out.push('\n');
    }
    out
}
