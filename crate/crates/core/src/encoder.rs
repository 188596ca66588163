//! Document encoders producing the head's input vector.
//!
//! Two are provided: a lookup of precomputed embeddings keyed by document id,
//! and a small trainable encoder that averages learned token embeddings over
//! the subword encoding of the text.

use std::collections::HashMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::tokenize::SubwordVocabulary;

/// Maps a document to a fixed-size feature vector. Must be deterministic.
pub trait Encoder<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn encode(&self, doc: &Document) -> Result<Vec<T>>;
}

/// Feature vectors supplied from outside, e.g. pooled outputs of an external
/// language model.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedEncoder<T> {
    dim: usize,
    vectors: HashMap<String, Vec<T>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct EmbeddingRecord<T: Scalar> {
    doc_id: String,
    vector: Vec<T>,
}

impl<T: Scalar> PrecomputedEncoder<T> {
    pub fn new(vectors: HashMap<String, Vec<T>>) -> Result<Self> {
        let dim = vectors.values().next().map(Vec::len).unwrap_or(0);
        for (id, v) in &vectors {
            if v.len() != dim {
                return Err(Error::Invariant(format!(
                    "embedding for `{id}` has size {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("precomputed embedding"));
            }
        }
        Ok(Self { dim, vectors })
    }

    /// Reads JSONL records `{"doc_id": "...", "vector": [..]}`.
    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut vectors = HashMap::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: EmbeddingRecord<T> =
                serde_json::from_str(line).map_err(|e| Error::Parse {
                    line: index + 1,
                    message: e.to_string(),
                })?;
            if vectors
                .insert(record.doc_id.clone(), record.vector)
                .is_some()
            {
                return Err(Error::DuplicateDocument(record.doc_id));
            }
        }
        Self::new(vectors)
    }
}

impl<T: Scalar> Encoder<T> for PrecomputedEncoder<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, doc: &Document) -> Result<Vec<T>> {
        self.vectors.get(&doc.doc_id).cloned().ok_or_else(|| {
            Error::Mismatch(format!("no precomputed embedding for `{}`", doc.doc_id))
        })
    }
}

/// Mean of learned per-token embeddings over the encoded document
/// (`[CLS] … [SEP]`, truncated to the vocabulary's sequence limit).
#[derive(Debug, Clone)]
pub struct MeanEmbeddingEncoder<T> {
    vocab: SubwordVocabulary,
    dim: usize,
    /// Row-major `vocab.len() × dim`.
    table: Vec<T>,
}

impl<T: Scalar> MeanEmbeddingEncoder<T> {
    /// Embeddings drawn from `U(−1/√dim, 1/√dim)`.
    pub fn new(vocab: SubwordVocabulary, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        let bound = 1.0 / (dim as f64).sqrt();
        let mut rng = seeded(seed);
        let table = (0..vocab.len() * dim)
            .map(|_| T::lit(rng.random_range(-bound..bound)))
            .collect();
        Ok(Self { vocab, dim, table })
    }

    pub fn from_table(vocab: SubwordVocabulary, dim: usize, table: Vec<T>) -> Result<Self> {
        if table.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                actual: table.len(),
            });
        }
        Ok(Self { vocab, dim, table })
    }

    pub fn vocab(&self) -> &SubwordVocabulary {
        &self.vocab
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut [T] {
        &mut self.table
    }

    pub fn token_ids(&self, text: &str) -> Vec<u32> {
        self.vocab.encode_ids(text)
    }

    pub fn encode_ids(&self, ids: &[u32]) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        if ids.is_empty() {
            return out;
        }
        for &id in ids {
            let row = &self.table[id as usize * self.dim..(id as usize + 1) * self.dim];
            for (o, v) in out.iter_mut().zip(row) {
                *o += *v;
            }
        }
        let n = T::from_count(ids.len());
        out.iter_mut().for_each(|o| *o /= n);
        out
    }

    /// Adds the gradient of the embedding table, given the gradient of the
    /// pooled output, into `table_grad`.
    pub fn accumulate_backward(&self, ids: &[u32], output_grad: &[T], table_grad: &mut [T]) {
        if ids.is_empty() {
            return;
        }
        let n = T::from_count(ids.len());
        for &id in ids {
            let row = &mut table_grad[id as usize * self.dim..(id as usize + 1) * self.dim];
            for (g, d) in row.iter_mut().zip(output_grad) {
                *g += *d / n;
            }
        }
    }
}

impl<T: Scalar> Encoder<T> for MeanEmbeddingEncoder<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, doc: &Document) -> Result<Vec<T>> {
        Ok(self.encode_ids(&self.token_ids(&doc.text)))
    }
}
