//! A loaded model: classification head, token-embedding encoder, vocabulary
//! and thesaurus, ready for inference.

use eurovoc_core::encoder::{Encoder, MeanEmbeddingEncoder};
use eurovoc_core::{Head, Level, ScoreAggregation, Thesaurus};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

pub const DEFAULT_NUM_LABELS: usize = 6;

fn default_num_labels() -> usize {
    DEFAULT_NUM_LABELS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub text: String,
    #[serde(default = "default_level")]
    pub level: Level,
    #[serde(default = "default_num_labels")]
    pub num_labels: usize,
}

fn default_level() -> Level {
    Level::Id
}

impl ClassifyRequest {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            level: Level::Id,
            num_labels: DEFAULT_NUM_LABELS,
        }
    }
}

/// Labels and confidence scores, best first.
pub type ClassifyResponse = IndexMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleInfo {
    pub language: String,
    pub labels: usize,
    pub input_dim: usize,
    pub vocab_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
}

/// Immutable inference bundle; safe to share across threads.
#[derive(Debug, Clone)]
pub struct ModelBundle {
    language: String,
    head: Head,
    encoder: MeanEmbeddingEncoder<f64>,
    thesaurus: Thesaurus,
    checksum: Option<String>,
}

impl ModelBundle {
    pub fn new(
        language: impl Into<String>,
        head: Head,
        encoder: MeanEmbeddingEncoder<f64>,
        thesaurus: Thesaurus,
    ) -> Result<Self> {
        let language = language.into();
        eurovoc_core::corpus::check_language(&language)?;
        if encoder.dim() != head.input_dim() {
            return Err(ServiceError::Bundle(format!(
                "encoder produces {} features, head expects {}",
                encoder.dim(),
                head.input_dim()
            )));
        }
        if let Some(id) = head.labels().iter().find(|id| !thesaurus.contains(id)) {
            return Err(ServiceError::Bundle(format!(
                "head label `{id}` is not in the thesaurus"
            )));
        }
        Ok(Self {
            language,
            head,
            encoder,
            thesaurus,
            checksum: None,
        })
    }

    pub(crate) fn with_checksum(mut self, checksum: String) -> Self {
        self.checksum = Some(checksum);
        self
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    pub fn encoder(&self) -> &MeanEmbeddingEncoder<f64> {
        &self.encoder
    }

    pub fn thesaurus(&self) -> &Thesaurus {
        &self.thesaurus
    }

    pub fn info(&self) -> BundleInfo {
        BundleInfo {
            language: self.language.clone(),
            labels: self.head.num_labels(),
            input_dim: self.head.input_dim(),
            vocab_size: self.encoder.vocab().len(),
            checksum: self.checksum.clone(),
        }
    }

    /// Feature vector of a raw text.
    pub fn features(&self, text: &str) -> Vec<f64> {
        self.encoder.encode_ids(&self.encoder.token_ids(text))
    }

    /// Top `num_labels` labels at the requested level. Coarser levels take
    /// the maximum score of their descriptors and may return fewer entries
    /// when the head covers fewer codes at that level.
    pub fn classify(&self, request: &ClassifyRequest) -> Result<ClassifyResponse> {
        if request.text.trim().is_empty() {
            return Err(ServiceError::EmptyText);
        }
        let m = self.head.num_labels();
        if request.num_labels == 0 {
            return Err(ServiceError::ZeroLabels);
        }
        if request.num_labels > m {
            return Err(ServiceError::TooManyLabels {
                requested: request.num_labels,
                available: m,
            });
        }
        let features = self.features(&request.text);
        let ranked: Vec<(String, f64)> = match request.level {
            Level::Id => self
                .head
                .predict_topk_features(&features, request.num_labels)?
                .into_iter()
                .map(|(id, p)| (id.to_string(), p))
                .collect(),
            level => {
                let all = self.head.predict_topk_features(&features, m)?;
                let mut mapped =
                    self.thesaurus
                        .map_level_scores(&all, level, ScoreAggregation::Max)?;
                mapped.truncate(request.num_labels);
                mapped
            }
        };
        Ok(ranked.into_iter().collect())
    }
}
