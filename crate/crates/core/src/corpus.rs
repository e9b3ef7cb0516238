//! Phrase corpus handling: TSV parsing, tokenization, vocabulary,
//! bag-of-words featurization and synthetic corpora.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numerics::SparseVector;

/// Header line of the labelled phrase file.
pub const TRAIN_HEADER: &str = "PhraseId\tSentenceId\tPhrase\tSentiment";
/// Header line of an unlabelled phrase file.
pub const TEST_HEADER: &str = "PhraseId\tSentenceId\tPhrase";

/// Characters removed from every token.
pub const PUNCTUATION: &[char] = &[',', '.', '!', '?', ';', ':', '\'', '"', '(', ')', '-'];

/// Number of sentiment classes (0 = negative .. 4 = positive).
pub const N_LABELS: usize = 5;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sentiment {0} outside 0..=4")]
    BadSentiment(i64),
    #[error("empty token universe: no phrase contains a token")]
    EmptyVocabulary,
    #[error("{0}")]
    Invalid(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        line,
        msg: msg.into(),
    }
}

/// One line of the phrase file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub phrase_id: u64,
    pub sentence_id: u64,
    pub phrase: String,
    pub sentiment: u8,
}

/// One line of an unlabelled phrase file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhraseRecord {
    pub phrase_id: u64,
    pub sentence_id: u64,
    pub phrase: String,
    pub sentiment: Option<u8>,
}

fn strip_eol(line: &str) -> &str {
    line.trim_end_matches(['\n', '\r'])
}

fn read_lines<R: BufRead>(reader: R) -> impl Iterator<Item = (usize, std::io::Result<String>)> {
    reader.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn parse_id(field: &str, name: &str, line: usize) -> Result<u64, CorpusError> {
    field.trim().parse().map_err(|_| {
        parse_err(
            line,
            format!("{name} `{field}` is not a non-negative integer"),
        )
    })
}

fn parse_sentiment(field: &str, line: usize) -> Result<u8, CorpusError> {
    let v: i64 = field
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("sentiment `{field}` is not an integer")))?;
    if (0..N_LABELS as i64).contains(&v) {
        Ok(v as u8)
    } else {
        Err(parse_err(line, format!("sentiment {v} outside 0..=4")))
    }
}

/// Parses a labelled phrase file (`PhraseId SentenceId Phrase Sentiment`).
///
/// Line numbers in errors are 1-based and count the header.
pub fn parse_tsv<R: BufRead>(reader: R) -> Result<Vec<RawRecord>, CorpusError> {
    let mut lines = read_lines(reader);
    match lines.next() {
        Some((_, header)) => {
            let header = header?;
            if strip_eol(&header).trim_start_matches('\u{feff}') != TRAIN_HEADER {
                return Err(parse_err(1, format!("expected header `{TRAIN_HEADER}`")));
            }
        }
        None => return Err(parse_err(1, "missing header")),
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (no, line) in lines {
        let line = line?;
        let line = strip_eol(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                no,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let phrase_id = parse_id(fields[0], "PhraseId", no)?;
        if !seen.insert(phrase_id) {
            return Err(parse_err(no, format!("duplicate PhraseId {phrase_id}")));
        }
        out.push(RawRecord {
            phrase_id,
            sentence_id: parse_id(fields[1], "SentenceId", no)?,
            phrase: fields[2].to_string(),
            sentiment: parse_sentiment(fields[3], no)?,
        });
    }
    Ok(out)
}

/// Parses either a labelled or an unlabelled phrase file, keyed on the header.
pub fn parse_phrases<R: BufRead>(reader: R) -> Result<Vec<PhraseRecord>, CorpusError> {
    let mut lines = read_lines(reader);
    let labelled = match lines.next() {
        Some((_, header)) => match strip_eol(&header?).trim_start_matches('\u{feff}') {
            TRAIN_HEADER => true,
            TEST_HEADER => false,
            _ => {
                return Err(parse_err(
                    1,
                    format!("expected header `{TRAIN_HEADER}` or `{TEST_HEADER}`"),
                ))
            }
        },
        None => return Err(parse_err(1, "missing header")),
    };
    let width = if labelled { 4 } else { 3 };
    let mut out = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let line = strip_eol(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != width {
            return Err(parse_err(
                no,
                format!(
                    "expected {width} tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        out.push(PhraseRecord {
            phrase_id: parse_id(fields[0], "PhraseId", no)?,
            sentence_id: parse_id(fields[1], "SentenceId", no)?,
            phrase: fields[2].to_string(),
            sentiment: if labelled {
                Some(parse_sentiment(fields[3], no)?)
            } else {
                None
            },
        });
    }
    Ok(out)
}

/// Writes records in the labelled TSV format, header included.
pub fn write_tsv<W: Write>(records: &[RawRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRAIN_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            r.phrase_id, r.sentence_id, r.phrase, r.sentiment
        )?;
    }
    out.flush()
}

/// Splits on whitespace, lowercases and strips punctuation characters.
/// Tokens left empty are dropped.
pub fn tokenize(phrase: &str) -> Vec<String> {
    phrase
        .split_whitespace()
        .map(|tok| {
            tok.chars()
                .filter(|c| !PUNCTUATION.contains(c))
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Dense index over normalized tokens, assigned in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary from already tokenized documents.
    pub fn from_tokens<'a, I, T>(docs: I) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = &'a String>,
    {
        let mut vocab = Vocabulary::default();
        for doc in docs {
            for tok in doc {
                vocab.insert(tok);
            }
        }
        if vocab.is_empty() {
            return Err(CorpusError::EmptyVocabulary);
        }
        Ok(vocab)
    }

    /// Rebuilds a vocabulary from its words listed in index order.
    pub fn from_words(words: Vec<String>) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(CorpusError::Invalid(format!(
                    "duplicate vocabulary word `{w}`"
                )));
            }
        }
        Ok(Vocabulary { index, words })
    }

    fn insert(&mut self, tok: &str) -> usize {
        if let Some(&i) = self.index.get(tok) {
            return i;
        }
        let i = self.words.len();
        self.index.insert(tok.to_string(), i);
        self.words.push(tok.to_string());
        i
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in index order.
    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Builds the vocabulary over every tokenized phrase in `records`.
pub fn build_vocabulary(records: &[RawRecord]) -> Result<Vocabulary, CorpusError> {
    if records.is_empty() {
        return Err(CorpusError::Invalid("no records".into()));
    }
    let docs: Vec<Vec<String>> = records.iter().map(|r| tokenize(&r.phrase)).collect();
    Vocabulary::from_tokens(&docs)
}

/// Bag-of-words feature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FeatureMode {
    /// 1 for each word present.
    #[default]
    Binary,
    /// Occurrence count of each word.
    Frequency,
}

impl FeatureMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureMode::Binary => "bin",
            FeatureMode::Frequency => "freq",
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureMode {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bin" | "binary" => Ok(FeatureMode::Binary),
            "freq" | "frequency" => Ok(FeatureMode::Frequency),
            other => Err(CorpusError::Invalid(format!(
                "unknown feature mode `{other}` (expected bin or freq)"
            ))),
        }
    }
}

/// Maps tokens to a sparse bag-of-words vector. Out-of-vocabulary tokens are skipped.
pub fn featurize<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    mode: FeatureMode,
) -> SparseVector {
    let mut ids: Vec<usize> = tokens
        .iter()
        .filter_map(|t| vocab.get(t.as_ref()))
        .collect();
    ids.sort_unstable();
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(ids.len());
    for id in ids {
        match entries.last_mut() {
            Some((last, v)) if *last == id => {
                if mode == FeatureMode::Frequency {
                    *v += 1.0;
                }
            }
            _ => entries.push((id, 1.0)),
        }
    }
    SparseVector::from_sorted_unchecked(entries)
}

/// Collapses the 5-way sentiment to ±1: {3,4} → +1, {0,1,2} → −1.
pub fn binarize_label(sentiment: u8) -> Result<i8, CorpusError> {
    match sentiment {
        0..=2 => Ok(-1),
        3 | 4 => Ok(1),
        s => Err(CorpusError::BadSentiment(s as i64)),
    }
}

/// A featurized phrase with both label views.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: SparseVector,
    pub sentiment: u8,
    pub binary_label: i8,
}

impl Instance {
    pub fn new(features: SparseVector, sentiment: u8) -> Result<Self, CorpusError> {
        Ok(Instance {
            binary_label: binarize_label(sentiment)?,
            features,
            sentiment,
        })
    }
}

/// A tokenized phrase, not yet bound to a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub tokens: Vec<String>,
    pub sentiment: u8,
}

impl Document {
    pub fn from_record(record: &RawRecord) -> Self {
        Document {
            tokens: tokenize(&record.phrase),
            sentiment: record.sentiment,
        }
    }
}

/// Featurizes documents against `vocab`.
pub fn featurize_all(
    docs: &[Document],
    vocab: &Vocabulary,
    mode: FeatureMode,
) -> Result<Vec<Instance>, CorpusError> {
    docs.iter()
        .map(|d| Instance::new(featurize(&d.tokens, vocab, mode), d.sentiment))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub n_instances: usize,
    pub n_distinct_words: usize,
    /// Token occurrences (with multiplicity) per phrase.
    pub avg_words_per_phrase: f64,
    /// Phrases containing a word, averaged over words.
    pub avg_phrases_per_word: f64,
}

/// Table-style statistics. Instances must be Frequency-mode featurizations
/// over `vocab` so that value sums recover token counts.
pub fn corpus_stats(
    instances: &[Instance],
    vocab: &Vocabulary,
) -> Result<CorpusStats, CorpusError> {
    if instances.is_empty() {
        return Err(CorpusError::Invalid("no instances".into()));
    }
    if vocab.is_empty() {
        return Err(CorpusError::EmptyVocabulary);
    }
    let tokens: f64 = instances
        .iter()
        .map(|i| i.features.values().sum::<f64>())
        .sum();
    let incidence: usize = instances.iter().map(|i| i.features.nnz()).sum();
    Ok(CorpusStats {
        n_instances: instances.len(),
        n_distinct_words: vocab.len(),
        avg_words_per_phrase: tokens / instances.len() as f64,
        avg_phrases_per_word: incidence as f64 / vocab.len() as f64,
    })
}

/// Lexicon sizes for [`synth_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthVocab {
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_neutral: usize,
}

impl Default for SynthVocab {
    fn default() -> Self {
        SynthVocab {
            n_pos: 50,
            n_neg: 50,
            n_neutral: 200,
        }
    }
}

/// Sentiment from the balance of positive and negative words.
pub fn synth_label(pos: usize, neg: usize) -> u8 {
    match pos as i64 - neg as i64 {
        d if d >= 2 => 4,
        1 => 3,
        0 => 2,
        -1 => 1,
        _ => 0,
    }
}

/// Deterministic synthetic phrase corpus.
///
/// Each phrase draws a length uniformly in `len_range`, then each word picks one of the
/// three lexicons uniformly and a word within it uniformly. Words are named `posN`, `negN`
/// and `neuN`.
pub fn synth_corpus(
    seed: u64,
    n: usize,
    vocab: SynthVocab,
    len_range: (usize, usize),
) -> Result<Vec<RawRecord>, CorpusError> {
    if n == 0 {
        return Err(CorpusError::Invalid("n must be at least 1".into()));
    }
    if vocab.n_pos == 0 || vocab.n_neg == 0 || vocab.n_neutral == 0 {
        return Err(CorpusError::Invalid(
            "lexicon sizes must be at least 1".into(),
        ));
    }
    let (lo, hi) = len_range;
    if lo > hi || hi == 0 {
        return Err(CorpusError::Invalid(format!(
            "bad length range {lo}..={hi}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lexicons = [
        ("pos", vocab.n_pos),
        ("neg", vocab.n_neg),
        ("neu", vocab.n_neutral),
    ];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let len = rng.gen_range(lo..=hi);
        let (mut pos, mut neg) = (0, 0);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let &(prefix, size) = lexicons.choose(&mut rng).expect("non-empty");
            match prefix {
                "pos" => pos += 1,
                "neg" => neg += 1,
                _ => {}
            }
            words.push(format!("{prefix}{}", rng.gen_range(0..size)));
        }
        out.push(RawRecord {
            phrase_id: i as u64 + 1,
            sentence_id: i as u64 / 10 + 1,
            phrase: words.join(" "),
            sentiment: synth_label(pos, neg),
        });
    }
    Ok(out)
}
