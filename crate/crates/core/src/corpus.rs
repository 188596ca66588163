//! Labelled document collections and their label statistics.
//!
//! Corpora are stored as JSONL, one object per line:
//! `{"doc_id": "...", "language": "en", "text": "...", "labels": ["1309", ...]}`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thesaurus::{DescriptorId, Level, Thesaurus};

/// The 22 languages for which corpora and models exist.
pub const SUPPORTED_LANGUAGES: [&str; 22] = [
    "bg", "cs", "da", "de", "el", "en", "es", "et", "fi", "fr", "hu", "it", "lt", "lv", "mt", "nl",
    "pl", "pt", "ro", "sk", "sl", "sv",
];

pub fn check_language(code: &str) -> Result<()> {
    if SUPPORTED_LANGUAGES.contains(&code) {
        Ok(())
    } else {
        Err(Error::UnsupportedLanguage {
            code: code.to_owned(),
            supported: SUPPORTED_LANGUAGES.join(" "),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub language: String,
    pub text: String,
    #[serde(default)]
    pub labels: BTreeSet<DescriptorId>,
}

/// Whether documents without gold labels are acceptable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadMode {
    Train,
    Inference,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub language: String,
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids and foreign-language documents.
    pub fn new(language: impl Into<String>, documents: Vec<Document>) -> Result<Self> {
        let language = language.into();
        check_language(&language)?;
        let mut seen = HashSet::with_capacity(documents.len());
        for doc in &documents {
            if doc.language != language {
                return Err(Error::Mismatch(format!(
                    "document `{}` is in `{}`, corpus language is `{language}`",
                    doc.doc_id, doc.language
                )));
            }
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::DuplicateDocument(doc.doc_id.clone()));
            }
        }
        Ok(Self {
            language,
            documents,
        })
    }

    pub fn load(path: impl AsRef<Path>, language: &str, mode: LoadMode) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl_str(&text, language, mode)
    }

    pub fn from_jsonl_str(text: &str, language: &str, mode: LoadMode) -> Result<Self> {
        check_language(language)?;
        let mut documents = Vec::new();
        let mut seen = HashSet::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(raw).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if let Err(e) = check_language(&doc.language) {
                return Err(Error::Parse {
                    line,
                    message: e.to_string(),
                });
            }
            if doc.language != language {
                return Err(Error::Parse {
                    line,
                    message: format!(
                        "document `{}` is in `{}`, expected `{language}`",
                        doc.doc_id, doc.language
                    ),
                });
            }
            if mode == LoadMode::Train && doc.labels.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: Error::MissingLabels(doc.doc_id).to_string(),
                });
            }
            if !seen.insert(doc.doc_id.clone()) {
                return Err(Error::DuplicateDocument(doc.doc_id));
            }
            documents.push(doc);
        }
        Ok(Self {
            language: language.to_owned(),
            documents,
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in &self.documents {
            serde_json::to_writer(&mut out, doc)?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<corpus writer>", e))?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Documents whose ids appear in `ids`, in corpus order.
    pub fn subset(&self, ids: &[String]) -> Result<Corpus> {
        let wanted: HashSet<&str> = ids.iter().map(String::as_str).collect();
        let documents: Vec<Document> = self
            .documents
            .iter()
            .filter(|d| wanted.contains(d.doc_id.as_str()))
            .cloned()
            .collect();
        if documents.len() != wanted.len() {
            return Err(Error::Mismatch(format!(
                "{} of {} requested document ids are not in the corpus",
                wanted.len() - documents.len(),
                wanted.len()
            )));
        }
        Ok(Corpus {
            language: self.language.clone(),
            documents,
        })
    }

    /// Every label (ID level) that occurs in the corpus, sorted.
    pub fn label_set(&self) -> BTreeSet<DescriptorId> {
        self.documents
            .iter()
            .flat_map(|d| d.labels.iter().cloned())
            .collect()
    }

    fn level_label_sets<'a>(
        &'a self,
        thesaurus: &'a Thesaurus,
        level: Level,
    ) -> impl Iterator<Item = Result<BTreeSet<String>>> + 'a {
        self.documents.iter().map(move |doc| match level {
            Level::Id => Ok(doc.labels.iter().map(|id| id.as_str().to_owned()).collect()),
            _ => thesaurus.project(&doc.labels, level),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorStats {
    pub level: Level,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

/// Mean, min and max label-set size per document after mapping to `level`.
pub fn descriptor_stats(
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    level: Level,
) -> Result<DescriptorStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut total = 0usize;
    let mut min = usize::MAX;
    let mut max = 0usize;
    for labels in corpus.level_label_sets(thesaurus, level) {
        let size = labels?.len();
        total += size;
        min = min.min(size);
        max = max.max(size);
    }
    Ok(DescriptorStats {
        level,
        mean: total as f64 / corpus.len() as f64,
        min,
        max,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyHistogram {
    pub level: Level,
    pub group_size: usize,
    pub group_counts: Vec<usize>,
}

impl FrequencyHistogram {
    /// Group sizes used for plotting: 50 descriptors, 5 microthesauri, 1 domain.
    pub fn default_group_size(level: Level) -> usize {
        match level {
            Level::Id => 50,
            Level::Mt => 5,
            Level::Do => 1,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("group_index,count\n");
        for (i, count) in self.group_counts.iter().enumerate() {
            out.push_str(&format!("{i},{count}\n"));
        }
        out
    }
}

/// Per-label document frequencies at `level`, sorted by descending frequency
/// with ties broken by ascending code.
pub fn label_frequencies(
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    level: Level,
) -> Result<Vec<(String, usize)>> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for labels in corpus.level_label_sets(thesaurus, level) {
        for code in labels? {
            *counts.entry(code).or_default() += 1;
        }
    }
    let mut sorted: Vec<(String, usize)> = counts.into_iter().collect();
    // stable sort keeps ascending code order among equal counts
    sorted.sort_by_key(|entry| std::cmp::Reverse(entry.1));
    Ok(sorted)
}

pub fn frequency_histogram(
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    level: Level,
    group_size: Option<usize>,
) -> Result<FrequencyHistogram> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let group_size = group_size.unwrap_or_else(|| FrequencyHistogram::default_group_size(level));
    if group_size == 0 {
        return Err(Error::Config("group size must be positive".into()));
    }
    let group_counts = label_frequencies(corpus, thesaurus, level)?
        .chunks(group_size)
        .map(|chunk| chunk.iter().map(|(_, count)| count).sum())
        .collect();
    Ok(FrequencyHistogram {
        level,
        group_size,
        group_counts,
    })
}
