//! Corpus ingestion: the preprocessing rule, frequency-ordered vocabularies
//! and integer-encoded token streams.
//!
//! A corpus is read line by line; every line is one sentence. Preprocessing
//! removes every character in the Unicode punctuation categories (`P*`, which
//! includes all brackets) and decimal digits (`Nd`), lowercases what is left,
//! and splits on whitespace.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Cursor, Read, Write};
use std::path::Path;
use std::sync::LazyLock;

use flate2::read::MultiGzDecoder;
use regex::Regex;

use crate::error::{Error, Result};

static STRIP: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[\p{P}\p{Nd}]").unwrap());

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Applies the preprocessing rule to one line of text.
pub fn preprocess(line: &str) -> Vec<String> {
    let stripped = STRIP.replace_all(line, "");
    stripped
        .split_whitespace()
        .map(|tok| tok.chars().flat_map(char::to_lowercase).collect::<String>())
        .filter(|tok| !tok.is_empty())
        .collect()
}

/// Like [`preprocess`], but starting from raw bytes. `base_offset` is the
/// position of `bytes` in the enclosing stream and is used to report the
/// absolute offset of invalid UTF-8.
pub fn preprocess_bytes(bytes: &[u8], base_offset: u64) -> Result<Vec<String>> {
    match std::str::from_utf8(bytes) {
        Ok(s) => Ok(preprocess(s)),
        Err(e) => Err(Error::Decode {
            offset: base_offset + e.valid_up_to() as u64,
        }),
    }
}

/// A line-oriented UTF-8 text source, optionally gzip-compressed.
///
/// The corpus is streamed; it is never held in memory in one piece.
pub struct RawCorpus {
    reader: Box<dyn BufRead + Send>,
    offset: u64,
    buf: Vec<u8>,
}

impl RawCorpus {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file).map_err(|e| match e {
            Error::Stream(source) => Error::io(path, source),
            other => other,
        })
    }

    /// Wraps any reader; gzip input is detected by its magic bytes.
    pub fn from_reader<R: Read + Send + 'static>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let gz = reader.fill_buf()?.starts_with(&GZIP_MAGIC);
        let reader: Box<dyn BufRead + Send> = if gz {
            Box::new(BufReader::new(MultiGzDecoder::new(reader)))
        } else {
            Box::new(reader)
        };
        Ok(RawCorpus {
            reader,
            offset: 0,
            buf: Vec::new(),
        })
    }

    pub fn from_text(text: &str) -> Self {
        RawCorpus {
            reader: Box::new(Cursor::new(text.as_bytes().to_vec())),
            offset: 0,
            buf: Vec::new(),
        }
    }

    /// Reads the next line and preprocesses it. Returns `None` at end of input.
    pub fn next_sentence(&mut self) -> Result<Option<Vec<String>>> {
        self.buf.clear();
        let n = self.reader.read_until(b'\n', &mut self.buf)?;
        if n == 0 {
            return Ok(None);
        }
        let tokens = preprocess_bytes(&self.buf, self.offset)?;
        self.offset += n as u64;
        Ok(Some(tokens))
    }

    pub fn for_each_sentence(mut self, mut f: impl FnMut(Vec<String>)) -> Result<()> {
        while let Some(tokens) = self.next_sentence()? {
            f(tokens);
        }
        Ok(())
    }
}

/// Word ↔ id bijection. Ids are assigned in order of descending frequency.
///
/// Counts are absent for vocabularies recovered from an embedding file, which
/// does not carry them.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Option<Vec<u64>>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds a vocabulary from words in id order without counts.
    pub fn from_words(words: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::DuplicateEntry {
                    word: w.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(Vocabulary {
            words,
            counts: None,
            index,
        })
    }

    /// Builds a vocabulary from `(word, count)` pairs already in id order.
    /// Counts must be non-increasing.
    pub fn from_counts(entries: Vec<(String, u64)>) -> Result<Self> {
        if let Some(i) = entries.windows(2).position(|w| w[0].1 < w[1].1) {
            return Err(Error::format(
                i + 2,
                "vocabulary counts must be non-increasing",
            ));
        }
        let (words, counts): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let mut vocab = Self::from_words(words)?;
        vocab.counts = Some(counts);
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| i as usize)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn count(&self, id: usize) -> Option<u64> {
        self.counts.as_ref().map(|c| c[id])
    }

    pub fn total_count(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    /// Writes one `word<TAB>count` line per entry, in id order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let counts = self
            .counts
            .as_ref()
            .ok_or_else(|| Error::parameter("vocabulary has no counts to write"))?;
        for (w, c) in self.words.iter().zip(counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::format(i + 1, "expected word<TAB>count"))?;
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::format(i + 1, format!("bad count: {e}")))?;
            entries.push((word.to_string(), count));
        }
        Self::from_counts(entries)
    }
}

/// Token counts with first-occurrence order, the raw material of a
/// [`Vocabulary`].
#[derive(Default, Debug)]
pub struct WordCounts {
    entries: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    tokens: u64,
}

impl WordCounts {
    pub fn add(&mut self, word: String) {
        self.tokens += 1;
        match self.index.get(&word) {
            Some(&i) => self.entries[i].1 += 1,
            None => {
                self.index.insert(word.clone(), self.entries.len());
                self.entries.push((word, 1));
            }
        }
    }

    /// Merges another shard. Entries new to `self` are appended in the shard's
    /// first-occurrence order, so merging shards in corpus order reproduces a
    /// sequential count exactly.
    pub fn merge(&mut self, other: WordCounts) {
        self.tokens += other.tokens;
        for (word, count) in other.entries {
            match self.index.get(&word) {
                Some(&i) => self.entries[i].1 += count,
                None => {
                    self.index.insert(word.clone(), self.entries.len());
                    self.entries.push((word, count));
                }
            }
        }
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }

    pub fn unique(&self) -> usize {
        self.entries.len()
    }

    pub fn into_vocabulary(self, min_count: u64) -> Result<Vocabulary> {
        if min_count == 0 {
            return Err(Error::parameter("min_count must be at least 1"));
        }
        let mut kept: Vec<(String, u64)> = self
            .entries
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        // stable: ties keep first-occurrence order
        kept.sort_by_key(|w| std::cmp::Reverse(w.1));
        Vocabulary::from_counts(kept)
    }
}

pub fn count_words(corpus: RawCorpus) -> Result<WordCounts> {
    let mut counts = WordCounts::default();
    corpus.for_each_sentence(|tokens| tokens.into_iter().for_each(|t| counts.add(t)))?;
    Ok(counts)
}

pub fn build_vocabulary(corpus: RawCorpus, min_count: u64) -> Result<Vocabulary> {
    if min_count == 0 {
        return Err(Error::parameter("min_count must be at least 1"));
    }
    count_words(corpus)?.into_vocabulary(min_count)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusStats {
    pub tokens: u64,
    pub unique: usize,
}

pub fn stats(corpus: RawCorpus) -> Result<CorpusStats> {
    let counts = count_words(corpus)?;
    Ok(CorpusStats {
        tokens: counts.tokens(),
        unique: counts.unique(),
    })
}

/// Integer-encoded corpus with sentence boundaries.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenStream {
    tokens: Vec<u32>,
    // end offset of each sentence in `tokens`
    ends: Vec<usize>,
}

impl TokenStream {
    pub fn from_sentences<I, S>(sentences: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u32]>,
    {
        let mut stream = TokenStream::default();
        for s in sentences {
            stream.push_sentence(s.as_ref());
        }
        stream
    }

    fn push_sentence(&mut self, ids: &[u32]) {
        if ids.is_empty() {
            return;
        }
        self.tokens.extend_from_slice(ids);
        self.ends.push(self.tokens.len());
    }

    /// Appends the sentences of `other`.
    pub fn append(&mut self, other: &TokenStream) {
        let base = self.tokens.len();
        self.tokens.extend_from_slice(&other.tokens);
        self.ends.extend(other.ends.iter().map(|e| e + base));
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn num_sentences(&self) -> usize {
        self.ends.len()
    }

    pub fn sentence(&self, i: usize) -> &[u32] {
        let start = if i == 0 { 0 } else { self.ends[i - 1] };
        &self.tokens[start..self.ends[i]]
    }

    pub fn sentences(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.ends.len()).map(move |i| self.sentence(i))
    }

    pub fn decode<'v>(&self, vocab: &'v Vocabulary) -> Vec<&'v str> {
        self.tokens.iter().map(|&id| vocab.word(id as usize)).collect()
    }
}

/// Replaces in-vocabulary tokens by their ids and drops the rest.
pub fn encode(corpus: RawCorpus, vocab: &Vocabulary) -> Result<TokenStream> {
    let mut stream = TokenStream::default();
    let mut ids = Vec::new();
    corpus.for_each_sentence(|tokens| {
        ids.clear();
        ids.extend(tokens.iter().filter_map(|t| vocab.id(t).map(|i| i as u32)));
        stream.push_sentence(&ids);
    })?;
    Ok(stream)
}
