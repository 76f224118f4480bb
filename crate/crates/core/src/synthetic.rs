//! Seeded toy languages for desk-scale runs.
//!
//! A language is a word-level Markov chain. Every word has a few personal
//! successors, so each word's contexts are distinctive, and a cluster-level
//! component gives words of the same cluster overlapping contexts. A
//! [`DeskCorpus`] renders one long text, keeps the first half as the source
//! language and passes the second half through a word substitution cipher.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub types: usize,
    pub clusters: usize,
    /// Personal successors per word.
    pub successors: usize,
    /// Probability of drawing from the personal successors rather than the
    /// cluster-level distribution.
    pub personal_weight: f64,
    pub zipf_exponent: f64,
    /// Rendered size of each half, in bytes.
    pub bytes_per_half: usize,
    pub similarity_pairs: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            types: 800,
            clusters: 160,
            successors: 6,
            personal_weight: 0.5,
            zipf_exponent: 1.0,
            bytes_per_half: 1_000_000,
            similarity_pairs: 50,
            seed: 2024,
        }
    }
}

const SOURCE_CONSONANTS: &[u8] = b"bdfgklmnprst";
const SOURCE_VOWELS: &[u8] = b"aeiou";
const CIPHER_CONSONANTS: &[u8] = b"cjqvwxzh";
const CIPHER_VOWELS: &[u8] = b"aeiouy";

/// Distinct pronounceable words of 2 to 4 syllables.
fn make_words(n: usize, consonants: &[u8], vowels: &[u8], rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let syllables = rng.random_range(2..=4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(consonants[rng.random_range(0..consonants.len())] as char);
            w.push(vowels[rng.random_range(0..vowels.len())] as char);
        }
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

pub struct SyntheticLanguage {
    pub words: Vec<String>,
    pub cluster: Vec<usize>,
    personal: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    cluster_next: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    emission: Vec<(Vec<usize>, WeightedIndex<f64>)>,
    start: WeightedIndex<f64>,
    personal_weight: f64,
    /// Dense successor distribution of every word.
    successor_probs: Vec<Vec<f64>>,
}

fn weighted(items: Vec<(usize, f64)>) -> (Vec<usize>, WeightedIndex<f64>) {
    let (ids, w): (Vec<usize>, Vec<f64>) = items.into_iter().unzip();
    let index = WeightedIndex::new(&w).expect("positive weights");
    (ids, index)
}

impl SyntheticLanguage {
    pub fn generate(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Self {
        let n = config.types;
        let c = config.clusters.max(1);
        let words = make_words(n, SOURCE_CONSONANTS, SOURCE_VOWELS, rng);
        // word i has Zipf weight 1/(i+1)^s; clusters get a shuffled round robin
        let zipf: Vec<f64> = (0..n).map(|i| 1.0 / ((i + 1) as f64).powf(config.zipf_exponent)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut cluster = vec![0; n];
        let mut members = vec![Vec::new(); c];
        for (k, &w) in order.iter().enumerate() {
            cluster[w] = k % c;
            members[k % c].push(w);
        }
        for m in &mut members {
            m.sort_unstable();
        }
        let emission: Vec<_> = members
            .iter()
            .map(|m| weighted(m.iter().map(|&w| (w, zipf[w])).collect()))
            .collect();
        let cluster_next: Vec<_> = (0..c)
            .map(|_| {
                let mut targets: Vec<usize> = (0..c).collect();
                targets.shuffle(rng);
                weighted(targets[..4.min(c)].iter().map(|&t| (t, rng.random_range(0.5..1.5))).collect())
            })
            .collect();
        let global = WeightedIndex::new(&zipf).expect("positive weights");
        let personal: Vec<_> = (0..n)
            .map(|_| {
                let mut chosen = Vec::new();
                while chosen.len() < config.successors.min(n) {
                    let w = global.sample(rng);
                    if !chosen.iter().any(|&(x, _)| x == w) {
                        chosen.push((w, rng.random_range(0.2..1.0)));
                    }
                }
                weighted(chosen)
            })
            .collect();

        let mut lang = SyntheticLanguage {
            words,
            cluster,
            personal,
            cluster_next,
            emission,
            start: global,
            personal_weight: config.personal_weight,
            successor_probs: Vec::new(),
        };
        lang.successor_probs = (0..n).map(|w| lang.dense_successors(w)).collect();
        lang
    }

    fn dense_successors(&self, w: usize) -> Vec<f64> {
        fn probs(table: &(Vec<usize>, WeightedIndex<f64>)) -> impl Iterator<Item = (usize, f64)> + '_ {
            let total = table.1.total_weight();
            table.0.iter().zip(table.1.weights()).map(move |(&i, p)| (i, p / total))
        }
        let mut out = vec![0.0; self.words.len()];
        for (v, p) in probs(&self.personal[w]) {
            out[v] += self.personal_weight * p;
        }
        for (c, pc) in probs(&self.cluster_next[self.cluster[w]]) {
            for (v, pv) in probs(&self.emission[c]) {
                out[v] += (1.0 - self.personal_weight) * pc * pv;
            }
        }
        out
    }

    fn next(&self, w: usize, rng: &mut ChaCha8Rng) -> usize {
        if rng.random::<f64>() < self.personal_weight {
            let (ids, index) = &self.personal[w];
            ids[index.sample(rng)]
        } else {
            let (cs, ci) = &self.cluster_next[self.cluster[w]];
            let (ids, index) = &self.emission[cs[ci.sample(rng)]];
            ids[index.sample(rng)]
        }
    }

    /// Sentences of word ids, 6 to 18 words long.
    pub fn sentence(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let len = rng.random_range(6..=18);
        let mut s = vec![self.start.sample(rng)];
        while s.len() < len {
            s.push(self.next(*s.last().unwrap(), rng));
        }
        s
    }

    /// Ground-truth relatedness: cosine of the two successor distributions.
    pub fn similarity(&self, a: usize, b: usize) -> f64 {
        let (x, y) = (&self.successor_probs[a], &self.successor_probs[b]);
        let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        let nx: f64 = x.iter().map(|p| p * p).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|p| p * p).sum::<f64>().sqrt();
        dot / (nx * ny)
    }
}

/// Renders sentences with a capital letter, commas now and then, and a full
/// stop, so preprocessing has something to strip.
pub fn render(sentences: &[Vec<usize>], words: &[String], rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    for s in sentences {
        for (i, &w) in s.iter().enumerate() {
            let word = &words[w];
            if i == 0 {
                let mut chars = word.chars();
                let first = chars.next().unwrap().to_uppercase();
                let _ = write!(out, "{first}{}", chars.as_str());
            } else {
                out.push(' ');
                out.push_str(word);
            }
            if i + 1 < s.len() && rng.random::<f64>() < 0.05 {
                out.push(',');
            }
        }
        out.push_str(".\n");
    }
    out
}

fn rendered_len(s: &[usize], words: &[String]) -> usize {
    s.iter().map(|&w| words[w].len() + 1).sum::<usize>() + 1
}

pub struct DeskCorpus {
    pub language: SyntheticLanguage,
    /// Cipher word for every source word id.
    pub cipher: Vec<String>,
    pub source_text: String,
    pub target_text: String,
    /// Monolingual source-language pairs, TSV with a header.
    pub similarity_tsv: String,
    /// The same pairs with the second word enciphered.
    pub cross_similarity_tsv: String,
}

impl DeskCorpus {
    pub fn generate(config: &SyntheticConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let language = SyntheticLanguage::generate(config, &mut rng);
        let cipher = make_words(config.types, CIPHER_CONSONANTS, CIPHER_VOWELS, &mut rng);

        let mut halves = [Vec::new(), Vec::new()];
        for half in &mut halves {
            let mut bytes = 0;
            while bytes < config.bytes_per_half {
                let s = language.sentence(&mut rng);
                bytes += rendered_len(&s, &language.words);
                half.push(s);
            }
        }
        let source_text = render(&halves[0], &language.words, &mut rng);
        let target_text = render(&halves[1], &cipher, &mut rng);

        // pairs among frequent words: half from one cluster, half at random
        let pool = (config.types / 3).max(2);
        let mut seen = HashSet::new();
        let mut pairs = Vec::new();
        while pairs.len() < config.similarity_pairs {
            let a = rng.random_range(0..pool);
            let b = if pairs.len() % 2 == 0 {
                let same: Vec<usize> = (0..pool)
                    .filter(|&w| w != a && language.cluster[w] == language.cluster[a])
                    .collect();
                match same.choose(&mut rng) {
                    Some(&b) => b,
                    None => continue,
                }
            } else {
                rng.random_range(0..pool)
            };
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue;
            }
            pairs.push((a, b, 10.0 * language.similarity(a, b)));
        }
        let mut similarity_tsv = String::from("word1\tword2\tscore\n");
        let mut cross_similarity_tsv = String::from("word1\tword2\tscore\n");
        for &(a, b, s) in &pairs {
            let _ = writeln!(similarity_tsv, "{}\t{}\t{s:.2}", language.words[a], language.words[b]);
            let _ = writeln!(cross_similarity_tsv, "{}\t{}\t{s:.2}", language.words[a], cipher[b]);
        }

        DeskCorpus {
            language,
            cipher,
            source_text,
            target_text,
            similarity_tsv,
            cross_similarity_tsv,
        }
    }

    /// `(source word, cipher word)` for every word type.
    pub fn dictionary(&self) -> Vec<(String, String)> {
        self.language
            .words
            .iter()
            .cloned()
            .zip(self.cipher.iter().cloned())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::preprocess;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            types: 200,
            clusters: 8,
            bytes_per_half: 20_000,
            similarity_pairs: 20,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let a = DeskCorpus::generate(&small());
        let b = DeskCorpus::generate(&small());
        assert_eq!(a.source_text, b.source_text);
        assert_eq!(a.target_text, b.target_text);
        assert_eq!(a.similarity_tsv, b.similarity_tsv);
    }

    #[test]
    fn halves_use_disjoint_alphabets() {
        let d = DeskCorpus::generate(&small());
        assert!(d.source_text.len() >= 20_000);
        let src: HashSet<String> = preprocess(&d.source_text).into_iter().collect();
        let trg: HashSet<String> = preprocess(&d.target_text).into_iter().collect();
        assert!(src.iter().all(|w| d.language.words.contains(w)));
        assert!(trg.iter().all(|w| d.cipher.contains(w)));
        assert!(src.is_disjoint(&trg));
    }

    #[test]
    fn successor_rows_are_distributions() {
        let d = DeskCorpus::generate(&small());
        for row in &d.language.successor_probs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!((d.language.similarity(3, 3) - 1.0).abs() < 1e-12);
        assert_eq!(d.similarity_tsv.lines().count(), 21);
    }
}
