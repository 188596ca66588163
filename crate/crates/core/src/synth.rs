//! Seeded synthetic corpora and thesauri for tests, demos and benchmarks.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::Rng;

use crate::corpus::{Corpus, Document};
use crate::encoder::PrecomputedEncoder;
use crate::error::Result;
use crate::rng::seeded;
use crate::scalar::Scalar;
use crate::thesaurus::{DescriptorId, DoCode, MtCode, Thesaurus};
use crate::train::LabeledFeatures;

const MT_CODES: [&str; 6] = ["0401", "0406", "1011", "1016", "2016", "3006"];

/// Descriptor code of synthetic label `i`.
pub fn descriptor(i: usize) -> DescriptorId {
    DescriptorId::new(format!("{}", 1000 + i)).expect("numeric code")
}

/// Thesaurus over `n_labels` descriptors spread round-robin across six
/// microthesauri in four domains.
pub fn thesaurus(n_labels: usize) -> Thesaurus {
    let mts: Vec<MtCode> = MT_CODES
        .iter()
        .map(|c| MtCode::new(*c).expect("valid"))
        .collect();
    let id_to_mt = (0..n_labels)
        .map(|i| (descriptor(i), vec![mts[i % mts.len()].clone()]))
        .collect();
    let mt_to_do = mts
        .iter()
        .map(|mt| (mt.clone(), DoCode::new(mt.domain_prefix()).expect("valid")))
        .collect();
    let labels = (0..n_labels)
        .map(|i| {
            let mut by_lang = BTreeMap::new();
            by_lang.insert("en".to_owned(), format!("topic {i}"));
            (descriptor(i), by_lang)
        })
        .collect();
    Thesaurus::new(id_to_mt, mt_to_do, labels).expect("consistent hierarchy")
}

/// Word characteristic of label `label`.
pub fn topic_word(label: usize, variant: usize) -> String {
    format!("t{label:02}v{variant}")
}

fn noise_word(i: usize) -> String {
    format!("n{i:03}")
}

#[derive(Debug, Clone)]
pub struct SeparableConfig {
    pub documents: usize,
    pub labels: usize,
    pub dim: usize,
    pub max_labels_per_doc: usize,
    /// Added to the coordinate of each present label.
    pub signal: f64,
    /// Half-width of the uniform noise added to every coordinate.
    pub noise: f64,
    pub topic_words_per_label: usize,
    pub noise_vocabulary: usize,
    pub seed: u64,
}

impl Default for SeparableConfig {
    fn default() -> Self {
        Self {
            documents: 1000,
            labels: 30,
            dim: 32,
            max_labels_per_doc: 3,
            signal: 10.0,
            noise: 0.5,
            topic_words_per_label: 5,
            noise_vocabulary: 200,
            seed: 0,
        }
    }
}

/// Labelled documents whose features are linearly separable per label and
/// whose text carries label-specific words among shared noise words.
#[derive(Debug, Clone)]
pub struct SeparableDataset {
    pub thesaurus: Thesaurus,
    pub corpus: Corpus,
    /// Feature vector of each document, in corpus order.
    pub features: Vec<Vec<f64>>,
}

impl SeparableDataset {
    pub fn generate(config: &SeparableConfig) -> Result<Self> {
        assert!(
            config.dim >= config.labels,
            "one coordinate per label is required"
        );
        let mut rng = seeded(config.seed);
        let mut documents = Vec::with_capacity(config.documents);
        let mut features = Vec::with_capacity(config.documents);
        for d in 0..config.documents {
            let count = rng.random_range(1..=config.max_labels_per_doc.min(config.labels));
            let picked: BTreeSet<usize> =
                sample(&mut rng, config.labels, count).into_iter().collect();

            let mut x: Vec<f64> = (0..config.dim)
                .map(|_| rng.random_range(-config.noise..=config.noise))
                .collect();
            let mut words = Vec::new();
            for &label in &picked {
                x[label] += config.signal;
                for _ in 0..8 {
                    words.push(topic_word(
                        label,
                        rng.random_range(0..config.topic_words_per_label),
                    ));
                }
            }
            for _ in 0..20 {
                words.push(noise_word(rng.random_range(0..config.noise_vocabulary)));
            }
            for i in (1..words.len()).rev() {
                words.swap(i, rng.random_range(0..=i));
            }

            documents.push(Document {
                doc_id: format!("syn{d:05}"),
                language: "en".into(),
                text: words.join(" "),
                labels: picked.iter().map(|&l| descriptor(l)).collect(),
            });
            features.push(x);
        }
        Ok(Self {
            thesaurus: thesaurus(config.labels),
            corpus: Corpus::new("en", documents)?,
            features,
        })
    }

    pub fn labels(&self) -> Vec<DescriptorId> {
        self.thesaurus.descriptors().cloned().collect()
    }

    pub fn encoder<T: Scalar>(&self) -> Result<PrecomputedEncoder<T>> {
        let vectors: HashMap<String, Vec<T>> = self
            .corpus
            .documents
            .iter()
            .zip(&self.features)
            .map(|(doc, x)| (doc.doc_id.clone(), x.iter().map(|&v| T::lit(v)).collect()))
            .collect();
        PrecomputedEncoder::new(vectors)
    }

    /// Training examples for the documents in `doc_ids`, with targets over
    /// the sorted label set.
    pub fn examples<T: Scalar>(&self, doc_ids: &[String]) -> Vec<LabeledFeatures<T>> {
        let labels = self.labels();
        let position: HashMap<&str, usize> = self
            .corpus
            .documents
            .iter()
            .enumerate()
            .map(|(i, d)| (d.doc_id.as_str(), i))
            .collect();
        doc_ids
            .iter()
            .filter_map(|id| position.get(id.as_str()))
            .map(|&i| {
                let doc = &self.corpus.documents[i];
                LabeledFeatures {
                    features: self.features[i].iter().map(|&v| T::lit(v)).collect(),
                    targets: labels
                        .iter()
                        .map(|l| {
                            if doc.labels.contains(l) {
                                T::one()
                            } else {
                                T::zero()
                            }
                        })
                        .collect(),
                }
            })
            .collect()
    }
}

/// Corpus of `documents` documents whose `labels` descriptors follow a Zipf
/// law: label `r` (0-based) is drawn with weight `1 / (r + 1)`.
pub fn zipf_corpus(
    documents: usize,
    labels: usize,
    max_labels_per_doc: usize,
    seed: u64,
) -> Result<Corpus> {
    let mut rng = seeded(seed);
    let weights: Vec<f64> = (0..labels).map(|r| 1.0 / (r + 1) as f64).collect();
    let docs = (0..documents)
        .map(|d| {
            let count = rng.random_range(1..=max_labels_per_doc.min(labels));
            let mut picked = BTreeSet::new();
            while picked.len() < count {
                picked.insert(weighted_index(&weights, &mut rng));
            }
            Document {
                doc_id: format!("z{d:05}"),
                language: "en".into(),
                text: picked
                    .iter()
                    .map(|&l| topic_word(l, 0))
                    .collect::<Vec<_>>()
                    .join(" "),
                labels: picked.into_iter().map(descriptor).collect(),
            }
        })
        .collect();
    Corpus::new("en", docs)
}

fn weighted_index(weights: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut target = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if target < *w {
            return i;
        }
        target -= w;
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_shape() {
        let cfg = SeparableConfig {
            documents: 50,
            ..SeparableConfig::default()
        };
        let ds = SeparableDataset::generate(&cfg).unwrap();
        assert_eq!(ds.corpus.len(), 50);
        assert_eq!(ds.features.len(), 50);
        assert!(ds.features.iter().all(|x| x.len() == 32));
        let counts = ds.thesaurus.validate_counts();
        assert_eq!(counts.n_ids, 30);
        assert!(counts.n_mts >= 5 && counts.n_dos >= 4);
        for (doc, x) in ds.corpus.documents.iter().zip(&ds.features) {
            for l in 0..30 {
                assert_eq!(doc.labels.contains(&descriptor(l)), x[l] > 5.0);
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let a = SeparableDataset::generate(&SeparableConfig::default()).unwrap();
        let b = SeparableDataset::generate(&SeparableConfig::default()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(
            zipf_corpus(100, 50, 4, 1).unwrap(),
            zipf_corpus(100, 50, 4, 1).unwrap()
        );
    }

    #[test]
    fn zipf_head_is_heavier() {
        let c = zipf_corpus(2000, 50, 4, 3).unwrap();
        let count = |l| {
            c.documents
                .iter()
                .filter(|d| d.labels.contains(&descriptor(l)))
                .count()
        };
        assert!(count(0) > count(10) && count(10) > count(49));
    }
}
