//! Multi-label iterative stratification.
//!
//! Documents are placed label by label, rarest label first. Each document of
//! the selected label goes to the subset that still needs the most examples
//! of that label; ties fall back to the subset with the most remaining overall
//! capacity, then to a seeded uniform choice. Demands are updated for every
//! label the placed document carries.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::thesaurus::DescriptorId;

const RATIO_TOLERANCE: f64 = 1e-9;
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SplitRatios(Vec<f64>);

impl SplitRatios {
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidRatios("no fractions given".into()));
        }
        if let Some(bad) = fractions.iter().find(|f| !f.is_finite() || **f <= 0.0) {
            return Err(Error::InvalidRatios(format!(
                "fraction {bad} is not positive"
            )));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > RATIO_TOLERANCE {
            return Err(Error::InvalidRatios(format!(
                "fractions sum to {sum}, not 1"
            )));
        }
        Ok(Self(fractions))
    }

    /// 80% train, 10% validation, 10% test.
    pub fn train_val_test() -> Self {
        Self(vec![0.8, 0.1, 0.1])
    }

    /// 90% train, 10% test, as used for the topic-signature baseline.
    pub fn train_test() -> Self {
        Self(vec![0.9, 0.1])
    }

    pub fn fractions(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for SplitRatios {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SplitRatios> for Vec<f64> {
    fn from(value: SplitRatios) -> Self {
        value.0
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    /// Parses a comma-separated list such as `0.8,0.1,0.1`.
    fn from_str(s: &str) -> Result<Self> {
        let fractions = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidRatios(format!("`{part}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(fractions)
    }
}

/// A seeded partition of a corpus into one subset of document ids per ratio.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub subsets: Vec<Vec<String>>,
}

impl SplitPlan {
    /// Checks that the subsets partition exactly the documents of `corpus`.
    pub fn check_partition(&self, corpus: &Corpus) -> Result<()> {
        let mut seen = HashSet::with_capacity(corpus.len());
        for id in self.subsets.iter().flatten() {
            if !seen.insert(id.as_str()) {
                return Err(Error::Invariant(format!(
                    "document `{id}` appears in two subsets"
                )));
            }
        }
        let expected: HashSet<&str> = corpus.documents.iter().map(|d| d.doc_id.as_str()).collect();
        if seen != expected {
            return Err(Error::Invariant(format!(
                "plan covers {} documents, corpus has {}",
                seen.len(),
                expected.len()
            )));
        }
        Ok(())
    }

    pub fn subset(&self, corpus: &Corpus, index: usize) -> Result<Corpus> {
        let ids = self.subsets.get(index).ok_or_else(|| {
            Error::Config(format!(
                "split has {} subsets, no index {index}",
                self.subsets.len()
            ))
        })?;
        corpus.subset(ids)
    }
}

/// Splits `corpus` by iterative stratification.
pub fn stratified_split(corpus: &Corpus, ratios: &SplitRatios, seed: u64) -> Result<SplitPlan> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(doc) = corpus.documents.iter().find(|d| d.labels.is_empty()) {
        return Err(Error::MissingLabels(doc.doc_id.clone()));
    }

    let fractions = ratios.fractions();
    let n_subsets = fractions.len();
    let n_docs = corpus.len();
    let mut rng = seeded(seed);

    // Label indices follow ascending code order.
    let codes: BTreeSet<&DescriptorId> = corpus.documents.iter().flat_map(|d| &d.labels).collect();
    let label_index: BTreeMap<&DescriptorId, usize> = codes
        .iter()
        .enumerate()
        .map(|(i, code)| (*code, i))
        .collect();
    let n_labels = label_index.len();

    let doc_labels: Vec<Vec<usize>> = corpus
        .documents
        .iter()
        .map(|d| d.labels.iter().map(|l| label_index[l]).collect())
        .collect();
    let mut docs_of_label: Vec<Vec<usize>> = vec![Vec::new(); n_labels];
    for (doc, labels) in doc_labels.iter().enumerate() {
        for &label in labels {
            docs_of_label[label].push(doc);
        }
    }

    let mut remaining: Vec<usize> = docs_of_label.iter().map(Vec::len).collect();
    let mut capacity: Vec<f64> = fractions.iter().map(|r| r * n_docs as f64).collect();
    let mut demand: Vec<Vec<f64>> = docs_of_label
        .iter()
        .map(|docs| fractions.iter().map(|r| r * docs.len() as f64).collect())
        .collect();
    let mut assignment: Vec<Option<usize>> = vec![None; n_docs];
    let mut unassigned = n_docs;

    while unassigned > 0 {
        let label = (0..n_labels)
            .filter(|&l| remaining[l] > 0)
            .min_by_key(|&l| (remaining[l], l))
            .expect("every unassigned document carries a label");

        for &doc in &docs_of_label[label] {
            if assignment[doc].is_some() {
                continue;
            }
            let target = choose_subset(&demand[label], &capacity, &mut rng);
            assignment[doc] = Some(target);
            unassigned -= 1;
            capacity[target] -= 1.0;
            for &other in &doc_labels[doc] {
                demand[other][target] -= 1.0;
                remaining[other] -= 1;
            }
        }
    }

    let mut subsets = vec![Vec::new(); n_subsets];
    for (doc, target) in assignment.into_iter().enumerate() {
        subsets[target.expect("all documents assigned")].push(corpus.documents[doc].doc_id.clone());
    }
    Ok(SplitPlan { seed, subsets })
}

fn choose_subset(label_demand: &[f64], capacity: &[f64], rng: &mut impl Rng) -> usize {
    let best_demand = label_demand
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let by_demand: Vec<usize> = (0..label_demand.len())
        .filter(|&j| label_demand[j] >= best_demand - TIE_TOLERANCE)
        .collect();
    if by_demand.len() == 1 {
        return by_demand[0];
    }
    let best_capacity = by_demand
        .iter()
        .map(|&j| capacity[j])
        .fold(f64::NEG_INFINITY, f64::max);
    let by_capacity: Vec<usize> = by_demand
        .into_iter()
        .filter(|&j| capacity[j] >= best_capacity - TIE_TOLERANCE)
        .collect();
    if by_capacity.len() == 1 {
        by_capacity[0]
    } else {
        by_capacity[rng.random_range(0..by_capacity.len())]
    }
}

/// One independent stratified plan per seed.
pub fn make_multi_splits(
    corpus: &Corpus,
    ratios: &SplitRatios,
    seeds: &[u64],
) -> Result<Vec<SplitPlan>> {
    let mut seen = HashSet::with_capacity(seeds.len());
    for &seed in seeds {
        if !seen.insert(seed) {
            return Err(Error::DuplicateSeed(seed));
        }
    }
    seeds
        .iter()
        .map(|&seed| stratified_split(corpus, ratios, seed))
        .collect()
}
