//! Topic-signature baseline.
//!
//! Every descriptor gets a profile of weighted terms built from the
//! concatenation of its training documents: relative term frequency times an
//! inverse document frequency, L2-normalised. A new document is turned into a
//! profile the same way and descriptors are ranked by cosine similarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::thesaurus::{sort_ranked, DescriptorId};

/// Inverse document frequency variant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IdfMode {
    /// `ln(N / df)`; zero for terms present in every document.
    Raw,
    /// `ln((N + 1) / (df + 1)) + 1`; strictly positive.
    #[default]
    Smoothed,
}

impl IdfMode {
    fn weight<T: Scalar>(self, n_docs: usize, df: usize) -> T {
        let (n, df) = (T::from_count(n_docs), T::from_count(df));
        match self {
            IdfMode::Raw => (n / df).ln(),
            IdfMode::Smoothed => ((n + T::one()) / (df + T::one())).ln() + T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct JexConfig {
    /// Terms occurring in fewer training documents are dropped.
    pub min_df: usize,
    pub idf: IdfMode,
    pub stopwords: BTreeSet<String>,
    /// Suffixes stripped (longest first) from terms that keep at least
    /// `min_stem_len` characters afterwards.
    pub suffixes: Vec<String>,
    pub min_stem_len: usize,
}

impl Default for JexConfig {
    fn default() -> Self {
        Self {
            min_df: 2,
            idf: IdfMode::Smoothed,
            stopwords: BTreeSet::new(),
            suffixes: Vec::new(),
            min_stem_len: 3,
        }
    }
}

impl JexConfig {
    /// A small English suffix list for crude stemming.
    pub fn english_suffixes() -> Vec<String> {
        [
            "ations", "ation", "ments", "ment", "ings", "ing", "ies", "ed", "es", "s",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }
}

/// Lowercases, treats every non-alphanumeric character as a separator, then
/// applies the configured stopword removal and suffix stripping.
pub fn normalize_text(text: &str, config: &JexConfig) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !config.stopwords.contains(*t))
        .map(|t| strip_suffix(t, config))
        .collect()
}

fn strip_suffix(term: &str, config: &JexConfig) -> String {
    let mut best: Option<&str> = None;
    for suffix in &config.suffixes {
        if let Some(stem) = term.strip_suffix(suffix.as_str()) {
            if stem.chars().count() >= config.min_stem_len
                && best.is_none_or(|b| suffix.len() > b.len())
            {
                best = Some(suffix);
            }
        }
    }
    match best {
        Some(suffix) => term[..term.len() - suffix.len()].to_owned(),
        None => term.to_owned(),
    }
}

/// Sparse non-negative term weights with unit L2 norm (or empty).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TermProfile<T: Scalar> {
    pub weights: BTreeMap<String, T>,
}

impl<T: Scalar> TermProfile<T> {
    /// Drops zero weights and scales the rest to unit length.
    fn normalized(weights: BTreeMap<String, T>) -> Self {
        let mut weights: BTreeMap<String, T> = weights
            .into_iter()
            .filter(|(_, w)| *w > T::zero())
            .collect();
        let norm = weights.values().map(|w| *w * *w).sum::<T>().sqrt();
        if norm > T::zero() {
            for w in weights.values_mut() {
                *w /= norm;
            }
        }
        Self { weights }
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> T {
        self.weights.values().map(|w| *w * *w).sum::<T>().sqrt()
    }

    /// Dot product; equals the cosine when both profiles are normalised.
    pub fn dot(&self, other: &TermProfile<T>) -> T {
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .weights
            .iter()
            .filter_map(|(term, w)| large.weights.get(term).map(|v| *w * *v))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SignatureModel<T: Scalar> {
    pub config: JexConfig,
    pub signatures: BTreeMap<DescriptorId, TermProfile<T>>,
    pub doc_frequency: BTreeMap<String, usize>,
    pub n_train_docs: usize,
}

fn relative_frequencies<'a, T: Scalar>(
    counts: &'a HashMap<&'a str, usize>,
) -> impl Iterator<Item = (&'a str, T)> + 'a {
    let total = T::from_count(counts.values().sum());
    counts
        .iter()
        .map(move |(term, count)| (*term, T::from_count(*count) / total))
}

/// Builds one signature per descriptor seen in `train`.
pub fn build_signatures<T: Scalar>(
    train: &Corpus,
    config: &JexConfig,
) -> Result<SignatureModel<T>> {
    if train.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(doc) = train.documents.iter().find(|d| d.labels.is_empty()) {
        return Err(Error::MissingLabels(doc.doc_id.clone()));
    }

    let docs_terms: Vec<Vec<String>> = train
        .documents
        .iter()
        .map(|d| normalize_text(&d.text, config))
        .collect();

    let mut df_all: HashMap<&str, usize> = HashMap::new();
    for terms in &docs_terms {
        let unique: BTreeSet<&str> = terms.iter().map(String::as_str).collect();
        for term in unique {
            *df_all.entry(term).or_default() += 1;
        }
    }
    let doc_frequency: BTreeMap<String, usize> = df_all
        .iter()
        .filter(|(_, df)| **df >= config.min_df)
        .map(|(t, df)| (t.to_string(), *df))
        .collect();

    let mut counts_by_label: BTreeMap<&DescriptorId, HashMap<&str, usize>> = BTreeMap::new();
    for (doc, terms) in train.documents.iter().zip(&docs_terms) {
        for label in &doc.labels {
            let counts = counts_by_label.entry(label).or_default();
            for term in terms {
                *counts.entry(term.as_str()).or_default() += 1;
            }
        }
    }

    let n = train.len();
    let signatures = counts_by_label
        .into_iter()
        .map(|(label, counts)| {
            let weights = relative_frequencies::<T>(&counts)
                .filter_map(|(term, rf)| {
                    doc_frequency
                        .get(term)
                        .map(|&df| (term.to_owned(), rf * config.idf.weight::<T>(n, df)))
                })
                .collect();
            (label.clone(), TermProfile::normalized(weights))
        })
        .collect();

    Ok(SignatureModel {
        config: config.clone(),
        signatures,
        doc_frequency,
        n_train_docs: n,
    })
}

impl<T: Scalar> SignatureModel<T> {
    /// Profile of an unseen text under the model's vocabulary and IDF.
    pub fn profile(&self, text: &str) -> TermProfile<T> {
        let terms = normalize_text(text, &self.config);
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for term in &terms {
            *counts.entry(term.as_str()).or_default() += 1;
        }
        let weights = relative_frequencies::<T>(&counts)
            .filter_map(|(term, rf)| {
                self.doc_frequency.get(term).map(|&df| {
                    (
                        term.to_owned(),
                        rf * self.config.idf.weight::<T>(self.n_train_docs, df),
                    )
                })
            })
            .collect();
        TermProfile::normalized(weights)
    }

    /// Cosine similarity of `text` to every signature, ranked descending with
    /// ties broken by ascending descriptor code.
    pub fn score_all(&self, text: &str) -> Result<Vec<(DescriptorId, T)>> {
        if self.signatures.is_empty() {
            return Err(Error::EmptyModel);
        }
        let query = self.profile(text);
        let mut scored: Vec<(DescriptorId, T)> = self
            .signatures
            .iter()
            .map(|(id, sig)| {
                let cos = query.dot(sig).max(T::zero()).min(T::one());
                (id.clone(), cos)
            })
            .collect();
        sort_ranked(&mut scored);
        Ok(scored)
    }

    /// The `k` most similar descriptors.
    pub fn rank_descriptors(&self, text: &str, k: usize) -> Result<Vec<(DescriptorId, T)>> {
        if k == 0 {
            return Err(Error::KOutOfRange {
                k,
                max: self.signatures.len(),
            });
        }
        let mut scored = self.score_all(text)?;
        scored.truncate(k);
        Ok(scored)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}
