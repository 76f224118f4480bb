//! Flat `key = value` run configuration, shared by config files and the
//! manifests written next to every output.
//!
//! Lines starting with `#` are comments. Unknown keys are errors so typos do
//! not silently fall back to defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::align::AlignmentConfig;
use crate::embedding::TrainingConfig;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub alignment: AlignmentConfig,
    /// Training corpora (one model is trained on their concatenation).
    pub corpus: Vec<PathBuf>,
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    /// Forces a single training thread.
    pub deterministic: bool,
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::format(line, format!("bad value '{value}' for {key}")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::format(line, format!("bad value '{value}' for {key}"))),
    }
}

impl RunConfig {
    /// Sets one key; `line` is only used for error messages.
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let t = &mut self.training;
        let a = &mut self.alignment;
        match key {
            "mode" => t.mode = value.parse().map_err(|e| Error::format(line, format!("{e}")))?,
            "dim" => t.dim = parse(line, key, value)?,
            "window" => t.window = parse(line, key, value)?,
            "min_count" => t.min_count = parse(line, key, value)?,
            "epochs" => t.epochs = parse(line, key, value)?,
            "negatives" => t.negatives = parse(line, key, value)?,
            "initial_lr" => t.initial_lr = parse(line, key, value)?,
            "seed" => {
                t.seed = parse(line, key, value)?;
                a.seed = t.seed;
            }
            "nmin" => t.nmin = parse(line, key, value)?,
            "nmax" => t.nmax = parse(line, key, value)?,
            "buckets" => t.buckets = parse(line, key, value)?,
            "subsample" => t.subsample = parse(line, key, value)?,
            "threads" => t.threads = parse(line, key, value)?,
            "csls_k" => a.csls_k = parse(line, key, value)?,
            "vocab_cutoff" => a.vocab_cutoff = parse(line, key, value)?,
            "init_vocab" => a.init_vocab = parse(line, key, value)?,
            "max_iterations" => a.max_iterations = parse(line, key, value)?,
            "convergence_tol" => a.convergence_tol = parse(line, key, value)?,
            "keep_prob" => a.keep_prob = parse(line, key, value)?,
            "keep_prob_multiplier" => a.keep_prob_multiplier = parse(line, key, value)?,
            "stagnation_window" => a.stagnation_window = parse(line, key, value)?,
            "orthogonal" => a.orthogonal = parse_bool(line, key, value)?,
            "deterministic" => self.deterministic = parse_bool(line, key, value)?,
            "corpus" => self.corpus.push(PathBuf::from(value)),
            "source" => self.source = Some(PathBuf::from(value)),
            "target" => self.target = Some(PathBuf::from(value)),
            _ => return Err(Error::format(line, format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.merge_str(text)?;
        Ok(config)
    }

    /// Applies the keys of `text` on top of the current values.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::format(i + 1, "expected 'key = value'"));
            };
            self.set(i + 1, key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    /// Training parameters with `deterministic` applied.
    pub fn effective_training(&self) -> TrainingConfig {
        let mut t = self.training.clone();
        if self.deterministic {
            t.threads = 1;
        }
        t
    }

    /// Every key, in a fixed order. Feeding the result back through
    /// [`RunConfig::parse_str`] reproduces `self`.
    pub fn to_manifest(&self) -> String {
        let t = &self.training;
        let a = &self.alignment;
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("mode", &t.mode);
        kv("dim", &t.dim);
        kv("window", &t.window);
        kv("min_count", &t.min_count);
        kv("epochs", &t.epochs);
        kv("negatives", &t.negatives);
        kv("initial_lr", &t.initial_lr);
        kv("seed", &t.seed);
        kv("nmin", &t.nmin);
        kv("nmax", &t.nmax);
        kv("buckets", &t.buckets);
        kv("subsample", &t.subsample);
        kv("threads", &t.threads);
        kv("deterministic", &self.deterministic);
        kv("csls_k", &a.csls_k);
        kv("vocab_cutoff", &a.vocab_cutoff);
        kv("init_vocab", &a.init_vocab);
        kv("max_iterations", &a.max_iterations);
        kv("convergence_tol", &a.convergence_tol);
        kv("keep_prob", &a.keep_prob);
        kv("keep_prob_multiplier", &a.keep_prob_multiplier);
        kv("stagnation_window", &a.stagnation_window);
        kv("orthogonal", &a.orthogonal);
        for c in &self.corpus {
            kv("corpus", &c.display());
        }
        if let Some(s) = &self.source {
            kv("source", &s.display());
        }
        if let Some(t) = &self.target {
            kv("target", &t.display());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::TrainingMode;

    #[test]
    fn manifest_round_trip() {
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse_str(&d.to_manifest()).unwrap(), d);
        let mut c = RunConfig::default();
        c.training.mode = TrainingMode::SubwordSkipgram;
        c.training.dim = 50;
        c.training.initial_lr = 0.05;
        c.training.seed = 9;
        c.alignment.seed = 9;
        c.alignment.orthogonal = false;
        c.corpus = vec!["a.txt".into(), "b.txt.gz".into()];
        c.target = Some("t.vec".into());
        let back = RunConfig::parse_str(&c.to_manifest()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_and_errors() {
        let c = RunConfig::parse_str("# x\n\ndim = 20\nwindow=2\n").unwrap();
        assert_eq!((c.training.dim, c.training.window), (20, 2));
        let e = RunConfig::parse_str("dim = 20\ndimm = 3\n").unwrap_err();
        assert!(matches!(e, Error::Format { line: 2, .. }), "{e}");
        let e = RunConfig::parse_str("dim = many\n").unwrap_err();
        assert!(matches!(e, Error::Format { line: 1, .. }), "{e}");
        assert!(RunConfig::parse_str("dim 20\n").is_err());
    }

    #[test]
    fn deterministic_forces_one_thread() {
        let c = RunConfig::parse_str("threads = 8\ndeterministic = true\n").unwrap();
        assert_eq!(c.effective_training().threads, 1);
    }
}
