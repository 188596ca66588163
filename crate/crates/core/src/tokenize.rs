//! Greedy longest-match subword tokenization over a fixed vocabulary.
//!
//! Text is first split on Unicode whitespace, with every punctuation code
//! point becoming a word of its own. Each word is then cut into the longest
//! vocabulary prefix, followed by the longest `##`-prefixed continuation
//! pieces. A word with any unmatchable position becomes a single `[UNK]`.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct VocabConfig {
    pub continuation_prefix: String,
    pub unk_token: String,
    pub cls_token: String,
    pub sep_token: String,
    pub max_sequence: usize,
    pub lowercase: bool,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            continuation_prefix: "##".into(),
            unk_token: "[UNK]".into(),
            cls_token: "[CLS]".into(),
            sep_token: "[SEP]".into(),
            max_sequence: 512,
            lowercase: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubwordVocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    config: VocabConfig,
}

impl SubwordVocabulary {
    /// Builds a vocabulary; token ids are positions in `tokens`. Duplicate
    /// entries keep their first position.
    pub fn new(tokens: Vec<String>, config: VocabConfig) -> Result<Self> {
        if config.max_sequence < 2 {
            return Err(Error::Config(format!(
                "max_sequence must be at least 2, got {}",
                config.max_sequence
            )));
        }
        if config.continuation_prefix.is_empty() {
            return Err(Error::Config("continuation prefix is empty".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            let id = u32::try_from(i).map_err(|_| Error::Config("vocabulary too large".into()))?;
            index.entry(token.clone()).or_insert(id);
        }
        for special in [&config.unk_token, &config.cls_token, &config.sep_token] {
            if !index.contains_key(special) {
                return Err(Error::Config(format!(
                    "special token `{special}` missing from vocabulary"
                )));
            }
        }
        Ok(Self {
            tokens,
            index,
            config,
        })
    }

    /// Reads a vocabulary file with one token per line.
    pub fn load(path: impl AsRef<Path>, config: VocabConfig) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, config)
    }

    pub fn from_text(text: &str, config: VocabConfig) -> Result<Self> {
        let tokens = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_owned())
            .filter(|l| !l.is_empty())
            .collect();
        Self::new(tokens, config)
    }

    pub fn to_text(&self) -> String {
        let mut out = self.tokens.join("\n");
        out.push('\n');
        out
    }

    pub fn config(&self) -> &VocabConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn max_sequence(&self) -> usize {
        self.config.max_sequence
    }

    /// Applies case folding (if configured) and splits into words.
    pub fn pre_split(&self, text: &str) -> Vec<String> {
        if self.config.lowercase {
            split_words(&text.to_lowercase())
        } else {
            split_words(text)
        }
    }

    /// Byte ranges of the pieces of `word`, or `None` if the word is unknown.
    fn piece_ranges(&self, word: &str, scratch: &mut String) -> Option<Vec<Range<usize>>> {
        let boundaries: Vec<usize> = word
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(word.len()))
            .collect();
        let prefix = &self.config.continuation_prefix;
        let mut ranges = Vec::new();
        let mut start = 0;
        while start + 1 < boundaries.len() {
            let mut matched = None;
            for end in (start + 1..boundaries.len()).rev() {
                let piece = &word[boundaries[start]..boundaries[end]];
                let hit = if start == 0 {
                    self.index.contains_key(piece)
                } else {
                    scratch.clear();
                    scratch.push_str(prefix);
                    scratch.push_str(piece);
                    self.index.contains_key(scratch.as_str())
                };
                if hit {
                    matched = Some(end);
                    break;
                }
            }
            let end = matched?;
            ranges.push(boundaries[start]..boundaries[end]);
            start = end;
        }
        Some(ranges)
    }

    /// Splits one whitespace-free word into vocabulary pieces.
    pub fn tokenize_word(&self, word: &str) -> Vec<String> {
        let mut scratch = String::new();
        match self.piece_ranges(word, &mut scratch) {
            Some(ranges) => ranges
                .into_iter()
                .map(|r| {
                    if r.start == 0 {
                        word[r].to_owned()
                    } else {
                        format!("{}{}", self.config.continuation_prefix, &word[r])
                    }
                })
                .collect(),
            None => vec![self.config.unk_token.clone()],
        }
    }

    /// Sub-word pieces of the whole text, without special tokens or truncation.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        self.pre_split(text)
            .iter()
            .flat_map(|w| self.tokenize_word(w))
            .collect()
    }

    /// Wraps pieces as `[CLS] pieces… [SEP]`, keeping only as many leading
    /// pieces as fit in `max_sequence`.
    pub fn wrap_pieces(&self, mut pieces: Vec<String>) -> Vec<String> {
        pieces.truncate(self.config.max_sequence - 2);
        let mut out = Vec::with_capacity(pieces.len() + 2);
        out.push(self.config.cls_token.clone());
        out.extend(pieces);
        out.push(self.config.sep_token.clone());
        out
    }

    /// Model input for a document: at most `max_sequence` tokens, `[SEP]` last.
    pub fn encode_document(&self, text: &str) -> Vec<String> {
        let budget = self.config.max_sequence - 2;
        let mut pieces = Vec::new();
        for word in self.pre_split(text) {
            if pieces.len() >= budget {
                break;
            }
            pieces.extend(self.tokenize_word(&word));
        }
        self.wrap_pieces(pieces)
    }

    /// [`encode_document`](Self::encode_document) as token ids.
    pub fn encode_ids(&self, text: &str) -> Vec<u32> {
        self.encode_document(text)
            .iter()
            .map(|t| self.index[t.as_str()])
            .collect()
    }
}

/// Whether `c` is split off as a word of its own. All printable ASCII
/// non-alphanumerics count, as do the Unicode punctuation categories.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

/// Splits on whitespace and isolates each punctuation code point.
pub fn split_words(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            words.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

fn is_punctuation_word(word: &str) -> bool {
    let mut chars = word.chars();
    matches!((chars.next(), chars.next()), (Some(c), None) if is_punctuation(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabStats {
    pub tokens_per_word: f64,
    pub unk_per_word: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsOptions {
    /// Count single-punctuation words. Off by default.
    pub count_punctuation: bool,
}

/// Average pieces and `[UNK]` pieces per word over the full (untruncated)
/// text of every document.
pub fn vocabulary_stats(
    vocab: &SubwordVocabulary,
    corpus: &Corpus,
    options: StatsOptions,
) -> Result<VocabStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut words = 0usize;
    let mut pieces = 0usize;
    let mut unknown = 0usize;
    let mut scratch = String::new();
    for doc in &corpus.documents {
        for word in vocab.pre_split(&doc.text) {
            if !options.count_punctuation && is_punctuation_word(&word) {
                continue;
            }
            words += 1;
            match vocab.piece_ranges(&word, &mut scratch) {
                Some(ranges) => pieces += ranges.len(),
                None => {
                    pieces += 1;
                    unknown += 1;
                }
            }
        }
    }
    if words == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(VocabStats {
        tokens_per_word: pieces as f64 / words as f64,
        unk_per_word: unknown as f64 / words as f64,
    })
}

/// `language,tokens_per_word,unk_per_word` rows.
pub fn vocab_stats_csv(rows: &[(String, VocabStats)]) -> String {
    let mut out = String::from("language,tokens_per_word,unk_per_word\n");
    for (language, stats) in rows {
        out.push_str(&format!(
            "{language},{:.4},{:.4}\n",
            stats.tokens_per_word, stats.unk_per_word
        ));
    }
    out
}
