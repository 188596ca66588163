//! Ranked multi-label metrics: P@k, R@k, F1@k, RP@k, nDCG@k and micro-F1,
//! with corpus- and multi-split aggregation.
//!
//! Rankings order labels by descending score; equal scores are ordered by
//! ascending label index, which equals ascending label code whenever the
//! label space is sorted. Documents without gold labels score 0 on every
//! ranked metric and are left out of corpus means.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::head::ClassifierHead;
use crate::jex::SignatureModel;
use crate::scalar::Scalar;
use crate::stratify::SplitPlan;
use crate::thesaurus::{sort_ranked, DescriptorId, Level, ScoreAggregation, Thesaurus};

/// Binary gold vector `y ∈ {0,1}^L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    y: Vec<bool>,
    n: usize,
}

impl LabelVector {
    pub fn new(y: Vec<bool>) -> Self {
        let n = y.iter().filter(|&&v| v).count();
        Self { y, n }
    }

    /// Vector of length `len` with ones at `positives`.
    pub fn from_indices(len: usize, positives: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut y = vec![false; len];
        for i in positives {
            *y.get_mut(i).ok_or(Error::DimensionMismatch {
                expected: len,
                actual: i + 1,
            })? = true;
        }
        Ok(Self::new(y))
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of true labels.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize) -> bool {
        self.y[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.y
    }
}

/// Predicted scores `ŷ ∈ ℝ^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T> {
    values: Vec<T>,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scores"));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    /// Label indices by descending score, ties by ascending index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.values.len()).collect();
        idx.sort_by(|&a, &b| {
            self.values[b]
                .partial_cmp(&self.values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Relevance of each ranked position, best first.
fn ranked_relevance<T: Scalar>(s: &ScoreVector<T>, l: &LabelVector, k: usize) -> Result<Vec<bool>> {
    if s.len() != l.len() {
        return Err(Error::DimensionMismatch {
            expected: l.len(),
            actual: s.len(),
        });
    }
    check_k(k, l.len())?;
    Ok(s.ranking().into_iter().map(|i| l.get(i)).collect())
}

fn check_k(k: usize, len: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::KOutOfRange { k, max: len });
    }
    Ok(())
}

/// Hits among the top `k` positions.
fn hits(relevance: &[bool], k: usize) -> usize {
    relevance.iter().take(k).filter(|&&r| r).count()
}

fn harmonic<T: Scalar>(p: T, r: T) -> T {
    if p + r > T::zero() {
        T::lit(2.0) * p * r / (p + r)
    } else {
        T::zero()
    }
}

mod ranked {
    use super::{harmonic, hits};
    use crate::scalar::Scalar;

    pub fn precision<T: Scalar>(rel: &[bool], n: usize, k: usize) -> T {
        if n == 0 {
            return T::zero();
        }
        T::from_count(hits(rel, k)) / T::from_count(k)
    }

    pub fn recall<T: Scalar>(rel: &[bool], n: usize, k: usize) -> T {
        if n == 0 {
            return T::zero();
        }
        T::from_count(hits(rel, k)) / T::from_count(n)
    }

    pub fn f1<T: Scalar>(rel: &[bool], n: usize, k: usize) -> T {
        harmonic(precision::<T>(rel, n, k), recall::<T>(rel, n, k))
    }

    pub fn r_precision<T: Scalar>(rel: &[bool], n: usize, k: usize) -> T {
        if n == 0 {
            return T::zero();
        }
        T::from_count(hits(rel, k)) / T::from_count(k.min(n))
    }

    pub fn ndcg<T: Scalar>(rel: &[bool], n: usize, k: usize) -> T {
        if n == 0 {
            return T::zero();
        }
        let discount = |i: usize| T::one() / T::from_count(i + 2).log2();
        let dcg: T = rel
            .iter()
            .take(k)
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| discount(i))
            .sum();
        let ideal: T = (0..k.min(n)).map(discount).sum();
        dcg / ideal
    }
}

/// `P@k`: hits among the top `k` divided by `k`.
pub fn precision_at_k<T: Scalar>(s: &ScoreVector<T>, l: &LabelVector, k: usize) -> Result<T> {
    Ok(ranked::precision(&ranked_relevance(s, l, k)?, l.n(), k))
}

/// `R@k`: hits among the top `k` divided by the number of true labels.
pub fn recall_at_k<T: Scalar>(s: &ScoreVector<T>, l: &LabelVector, k: usize) -> Result<T> {
    Ok(ranked::recall(&ranked_relevance(s, l, k)?, l.n(), k))
}

/// `F1@k`, the harmonic mean of `P@k` and `R@k` (0 when both are 0).
pub fn f1_at_k<T: Scalar>(s: &ScoreVector<T>, l: &LabelVector, k: usize) -> Result<T> {
    Ok(ranked::f1(&ranked_relevance(s, l, k)?, l.n(), k))
}

/// `RP@k`: hits among the top `k` divided by `min(k, n)`.
pub fn r_precision_at_k<T: Scalar>(s: &ScoreVector<T>, l: &LabelVector, k: usize) -> Result<T> {
    Ok(ranked::r_precision(&ranked_relevance(s, l, k)?, l.n(), k))
}

/// `nDCG@k` with binary gains and `log2(rank + 1)` discounts.
pub fn ndcg_at_k<T: Scalar>(s: &ScoreVector<T>, l: &LabelVector, k: usize) -> Result<T> {
    Ok(ranked::ndcg(&ranked_relevance(s, l, k)?, l.n(), k))
}

/// How a ranked score list is turned into a predicted label set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionRule {
    TopK(usize),
    /// Every label with score at least the threshold.
    Threshold(f64),
}

impl Default for PredictionRule {
    fn default() -> Self {
        PredictionRule::TopK(5)
    }
}

impl PredictionRule {
    /// Applies the rule to a list ranked best first.
    pub fn select<K: Clone + Ord, T: Scalar>(&self, ranked: &[(K, T)]) -> BTreeSet<K> {
        match *self {
            PredictionRule::TopK(k) => ranked.iter().take(k).map(|(c, _)| c.clone()).collect(),
            PredictionRule::Threshold(t) => ranked
                .iter()
                .filter(|(_, s)| s.as_f64() >= t)
                .map(|(c, _)| c.clone())
                .collect(),
        }
    }
}

/// True/false positive and false negative counts pooled over documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PooledCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl PooledCounts {
    pub fn add<K: Ord>(&mut self, predicted: &BTreeSet<K>, gold: &BTreeSet<K>) {
        let tp = predicted.intersection(gold).count();
        self.tp += tp;
        self.fp += predicted.len() - tp;
        self.fn_ += gold.len() - tp;
    }

    /// F1 of the pooled counts; 0 when there is nothing to count.
    pub fn f1<T: Scalar>(&self) -> T {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return T::zero();
        }
        T::from_count(2 * self.tp) / T::from_count(denom)
    }
}

/// Micro-averaged F1 over paired prediction and gold sets.
pub fn micro_f1<T: Scalar, K: Ord>(predictions: &[BTreeSet<K>], gold: &[BTreeSet<K>]) -> Result<T> {
    if predictions.len() != gold.len() {
        return Err(Error::Mismatch(format!(
            "{} prediction sets for {} documents",
            predictions.len(),
            gold.len()
        )));
    }
    let mut counts = PooledCounts::default();
    for (p, g) in predictions.iter().zip(gold) {
        counts.add(p, g);
    }
    Ok(counts.f1())
}

/// Produces descriptor scores for a document. The list may cover only part
/// of the label space; unscored descriptors rank below every scored one.
pub trait Ranker<T: Scalar> {
    fn scores(&self, doc: &Document) -> Result<Vec<(DescriptorId, T)>>;
}

impl<T: Scalar> Ranker<T> for SignatureModel<T> {
    fn scores(&self, doc: &Document) -> Result<Vec<(DescriptorId, T)>> {
        self.score_all(&doc.text)
    }
}

/// A classification head paired with the encoder that feeds it.
pub struct HeadRanker<'a, T: Scalar, E: ?Sized> {
    pub head: &'a ClassifierHead<T>,
    pub encoder: &'a E,
}

impl<T: Scalar, E: Encoder<T> + ?Sized> Ranker<T> for HeadRanker<'_, T, E> {
    fn scores(&self, doc: &Document) -> Result<Vec<(DescriptorId, T)>> {
        self.head
            .predict_topk_features(&self.encoder.encode(doc)?, self.head.num_labels())
    }
}

impl<T: Scalar, R: Ranker<T> + ?Sized> Ranker<T> for &R {
    fn scores(&self, doc: &Document) -> Result<Vec<(DescriptorId, T)>> {
        (**self).scores(doc)
    }
}

/// Whether the reported F1 is the mean of per-document F1 values or the F1
/// of the mean precision and recall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Averaging {
    #[default]
    PerDocument,
    OfMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    /// Cut-offs for the ID, MT and DO levels.
    pub k: [usize; 3],
    pub micro_rule: PredictionRule,
    pub f1_averaging: F1Averaging,
    pub aggregation: ScoreAggregation,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: [
                Level::Id.default_k(),
                Level::Mt.default_k(),
                Level::Do.default_k(),
            ],
            micro_rule: PredictionRule::default(),
            f1_averaging: F1Averaging::default(),
            aggregation: ScoreAggregation::Max,
        }
    }
}

impl EvalOptions {
    pub fn k_for(&self, level: Level) -> usize {
        self.k[level_index(level)]
    }
}

const LEVELS: [Level; 3] = [Level::Id, Level::Mt, Level::Do];

fn level_index(level: Level) -> usize {
    match level {
        Level::Id => 0,
        Level::Mt => 1,
        Level::Do => 2,
    }
}

/// Ranked metrics of one document at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentMetrics {
    pub doc_id: String,
    pub level: Level,
    /// Number of gold labels at this level.
    pub n: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub r_precision: f64,
    pub ndcg: f64,
}

/// Corpus means at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: Level,
    pub k: usize,
    /// Documents entering the means.
    pub documents: usize,
    /// Documents skipped for having no gold labels.
    pub empty_gold: usize,
    pub precision: f64,
    pub recall: f64,
    /// Mean of per-document F1.
    pub f1: f64,
    /// F1 of mean precision and mean recall.
    pub f1_of_means: f64,
    pub r_precision: f64,
    pub ndcg: f64,
}

impl LevelSummary {
    fn from_documents(level: Level, k: usize, docs: &[DocumentMetrics]) -> Self {
        let counted: Vec<&DocumentMetrics> = docs.iter().filter(|d| d.n > 0).collect();
        let mean = |f: fn(&DocumentMetrics) -> f64| {
            if counted.is_empty() {
                0.0
            } else {
                counted.iter().map(|d| f(d)).sum::<f64>() / counted.len() as f64
            }
        };
        let precision = mean(|d| d.precision);
        let recall = mean(|d| d.recall);
        Self {
            level,
            k,
            documents: counted.len(),
            empty_gold: docs.len() - counted.len(),
            precision,
            recall,
            f1: mean(|d| d.f1),
            f1_of_means: harmonic(precision, recall),
            r_precision: mean(|d| d.r_precision),
            ndcg: mean(|d| d.ndcg),
        }
    }

    pub fn headline_f1(&self, averaging: F1Averaging) -> f64 {
        match averaging {
            F1Averaging::PerDocument => self.f1,
            F1Averaging::OfMeans => self.f1_of_means,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub language: String,
    /// Number of test splits averaged into this report.
    pub splits: usize,
    pub options: EvalOptions,
    /// ID, MT and DO summaries, in that order.
    pub levels: Vec<LevelSummary>,
    /// Micro-F1 over ID descriptors.
    pub micro_f1: f64,
    pub per_document: Vec<DocumentMetrics>,
}

impl MetricReport {
    pub fn level(&self, level: Level) -> &LevelSummary {
        &self.levels[level_index(level)]
    }

    /// Headline F1 at the configured cut-off of `level`.
    pub fn f1(&self, level: Level) -> f64 {
        self.level(level).headline_f1(self.options.f1_averaging)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn csv_header(&self) -> String {
        let [id, mt, dk] = self.options.k;
        format!("language,id_f1_at_{id},mt_f1_at_{mt},do_f1_at_{dk}")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.4},{:.4},{:.4}",
            self.language,
            self.f1(Level::Id),
            self.f1(Level::Mt),
            self.f1(Level::Do)
        )
    }

    /// One row per language, headed by the cut-offs of the first report.
    pub fn table_csv(reports: &[MetricReport]) -> String {
        let mut out = String::new();
        if let Some(first) = reports.first() {
            let _ = writeln!(out, "{}", first.csv_header());
        }
        for r in reports {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        out
    }
}

/// Full ranking of every code at `level`: scored codes first, then the rest
/// in ascending code order.
fn level_ranking<T: Scalar>(
    thesaurus: &Thesaurus,
    id_scores: &[(DescriptorId, T)],
    level: Level,
    aggregation: ScoreAggregation,
) -> Result<Vec<(String, T)>> {
    let mut scored = thesaurus.map_level_scores(id_scores, level, aggregation)?;
    sort_ranked(&mut scored);
    let seen: BTreeSet<String> = scored.iter().map(|(c, _)| c.clone()).collect();
    let floor = T::neg_infinity();
    scored.extend(
        thesaurus
            .codes_at(level)
            .into_iter()
            .filter(|c| !seen.contains(c))
            .map(|c| (c, floor)),
    );
    Ok(scored)
}

/// Evaluates `ranker` on `documents`.
pub fn evaluate_documents<T: Scalar, R: Ranker<T> + ?Sized>(
    ranker: &R,
    documents: &[Document],
    thesaurus: &Thesaurus,
    options: &EvalOptions,
) -> Result<MetricReport> {
    let first = documents
        .first()
        .ok_or_else(|| Error::EmptySplit("test".into()))?;
    for level in LEVELS {
        check_k(options.k_for(level), thesaurus.codes_at(level).len())?;
    }

    let mut per_document = Vec::with_capacity(documents.len() * LEVELS.len());
    let mut pooled = PooledCounts::default();
    for doc in documents {
        for id in &doc.labels {
            if !thesaurus.contains(id) {
                return Err(Error::UnknownDescriptor(id.to_string()));
            }
        }
        let id_scores = ranker.scores(doc)?;
        if id_scores.iter().any(|(_, s)| !s.is_finite()) {
            return Err(Error::NonFinite("ranker scores"));
        }
        for level in LEVELS {
            let ranking = level_ranking(thesaurus, &id_scores, level, options.aggregation)?;
            let gold = thesaurus.project(&doc.labels, level)?;
            if level == Level::Id {
                pooled.add(&options.micro_rule.select(&ranking), &gold);
            }
            let rel: Vec<bool> = ranking.iter().map(|(c, _)| gold.contains(c)).collect();
            let (n, k) = (gold.len(), options.k_for(level));
            per_document.push(DocumentMetrics {
                doc_id: doc.doc_id.clone(),
                level,
                n,
                precision: ranked::precision(&rel, n, k),
                recall: ranked::recall(&rel, n, k),
                f1: ranked::f1(&rel, n, k),
                r_precision: ranked::r_precision(&rel, n, k),
                ndcg: ranked::ndcg(&rel, n, k),
            });
        }
    }

    let levels = LEVELS
        .iter()
        .map(|&level| {
            let docs: Vec<DocumentMetrics> = per_document
                .iter()
                .filter(|d| d.level == level)
                .cloned()
                .collect();
            LevelSummary::from_documents(level, options.k_for(level), &docs)
        })
        .collect();
    Ok(MetricReport {
        language: first.language.clone(),
        splits: 1,
        options: options.clone(),
        levels,
        micro_f1: pooled.f1(),
        per_document,
    })
}

/// Evaluates `ranker` on subset `test_index` of `plan`.
pub fn evaluate_corpus<T: Scalar, R: Ranker<T> + ?Sized>(
    ranker: &R,
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    plan: &SplitPlan,
    test_index: usize,
    options: &EvalOptions,
) -> Result<MetricReport> {
    let test = plan.subset(corpus, test_index)?;
    if test.is_empty() {
        return Err(Error::EmptySplit(format!("subset {test_index}")));
    }
    evaluate_documents(ranker, &test.documents, thesaurus, options)
}

/// Arithmetic mean of per-split reports. Per-document rows are concatenated.
pub fn aggregate_reports(reports: &[MetricReport]) -> Result<MetricReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::EmptySplit("no reports to aggregate".into()))?;
    if reports
        .iter()
        .any(|r| r.language != first.language || r.options != first.options)
    {
        return Err(Error::Mismatch(
            "reports differ in language or options".into(),
        ));
    }
    let count = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / count;
    let levels = (0..LEVELS.len())
        .map(|i| {
            let base = &first.levels[i];
            LevelSummary {
                level: base.level,
                k: base.k,
                documents: reports.iter().map(|r| r.levels[i].documents).sum(),
                empty_gold: reports.iter().map(|r| r.levels[i].empty_gold).sum(),
                precision: mean(&|r| r.levels[i].precision),
                recall: mean(&|r| r.levels[i].recall),
                f1: mean(&|r| r.levels[i].f1),
                f1_of_means: mean(&|r| r.levels[i].f1_of_means),
                r_precision: mean(&|r| r.levels[i].r_precision),
                ndcg: mean(&|r| r.levels[i].ndcg),
            }
        })
        .collect();
    Ok(MetricReport {
        language: first.language.clone(),
        splits: reports.iter().map(|r| r.splits).sum(),
        options: first.options.clone(),
        levels,
        micro_f1: mean(&|r| r.micro_f1),
        per_document: reports
            .iter()
            .flat_map(|r| r.per_document.iter().cloned())
            .collect(),
    })
}

/// Builds a ranker for each plan with `make_ranker`, evaluates it on subset
/// `test_index` and averages the results.
pub fn evaluate_splits<T, R, F>(
    corpus: &Corpus,
    thesaurus: &Thesaurus,
    plans: &[SplitPlan],
    test_index: usize,
    options: &EvalOptions,
    mut make_ranker: F,
) -> Result<MetricReport>
where
    T: Scalar,
    R: Ranker<T>,
    F: FnMut(&SplitPlan) -> Result<R>,
{
    let reports = plans
        .iter()
        .map(|plan| {
            let ranker = make_ranker(plan)?;
            evaluate_corpus(&ranker, corpus, thesaurus, plan, test_index, options)
        })
        .collect::<Result<Vec<_>>>()?;
    aggregate_reports(&reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> ScoreVector<f64> {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    fn lv(v: &[u8]) -> LabelVector {
        LabelVector::new(v.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn all_hits_precision() {
        assert_eq!(
            precision_at_k(&sv(&[0.9, 0.8, 0.1]), &lv(&[1, 1, 0]), 2).unwrap(),
            1.0
        );
        assert_eq!(
            precision_at_k(&sv(&[0.9, 0.8, 0.1]), &lv(&[0, 0, 1]), 2).unwrap(),
            0.0
        );
    }

    #[test]
    fn recall_half() {
        let s = sv(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2]);
        let l = lv(&[1, 0, 1, 0, 0, 0, 1, 1]);
        assert_eq!(recall_at_k(&s, &l, 6).unwrap(), 0.5);
    }

    #[test]
    fn f1_of_one_and_half() {
        let s = sv(&[0.9, 0.8, 0.1, 0.05]);
        let l = lv(&[1, 0, 0, 1]);
        // P@1 = 1, R@1 = 0.5
        assert!((f1_at_k(&s, &l, 1).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1_at_k(&s, &lv(&[0, 0, 1, 1]), 2).unwrap(), 0.0);
    }

    #[test]
    fn r_precision_small_gold() {
        let s = sv(&[0.9, 0.8, 0.7, 0.6, 0.5, 0.4]);
        let l = lv(&[1, 0, 1, 0, 1, 0]);
        assert_eq!(r_precision_at_k(&s, &l, 5).unwrap(), 1.0);
        assert_eq!(precision_at_k(&s, &l, 5).unwrap(), 0.6);
    }

    #[test]
    fn ndcg_rank_two() {
        let s = sv(&[0.9, 0.8, 0.7]);
        let l = lv(&[0, 1, 0]);
        let v = ndcg_at_k(&s, &l, 3).unwrap();
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-12);
        assert_eq!(ndcg_at_k(&s, &lv(&[1, 1, 0]), 2).unwrap(), 1.0);
        assert_eq!(ndcg_at_k(&s, &lv(&[0, 0, 1]), 2).unwrap(), 0.0);
    }

    #[test]
    fn ties_follow_index_order() {
        let s = sv(&[0.5, 0.5, 0.5]);
        assert_eq!(s.ranking(), vec![0, 1, 2]);
        assert_eq!(precision_at_k(&s, &lv(&[1, 0, 0]), 1).unwrap(), 1.0);
        assert_eq!(precision_at_k(&s, &lv(&[0, 0, 1]), 1).unwrap(), 0.0);
    }

    #[test]
    fn k_range_is_checked() {
        let s = sv(&[0.1, 0.2]);
        let l = lv(&[1, 0]);
        assert!(matches!(
            precision_at_k(&s, &l, 0),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(matches!(
            ndcg_at_k(&s, &l, 3),
            Err(Error::KOutOfRange { .. })
        ));
        assert!(precision_at_k(&sv(&[0.1]), &l, 1).is_err());
    }

    #[test]
    fn empty_gold_scores_zero() {
        let s = sv(&[0.1, 0.2]);
        let l = lv(&[0, 0]);
        for v in [
            precision_at_k(&s, &l, 1).unwrap(),
            recall_at_k(&s, &l, 1).unwrap(),
            f1_at_k(&s, &l, 1).unwrap(),
            r_precision_at_k(&s, &l, 1).unwrap(),
            ndcg_at_k(&s, &l, 1).unwrap(),
        ] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn micro_f1_cases() {
        let gold: Vec<BTreeSet<u32>> = vec![[1, 2].into(), [3].into()];
        assert_eq!(micro_f1::<f64, _>(&gold, &gold).unwrap(), 1.0);
        let empty: Vec<BTreeSet<u32>> = vec![BTreeSet::new(), BTreeSet::new()];
        assert_eq!(micro_f1::<f64, _>(&empty, &gold).unwrap(), 0.0);
        // tp=1 fp=1 fn=2
        let pred: Vec<BTreeSet<u32>> = vec![[1, 4].into(), BTreeSet::new()];
        assert!((micro_f1::<f64, _>(&pred, &gold).unwrap() - 2.0 / 5.0).abs() < 1e-12);
        assert!(micro_f1::<f64, _>(&pred[..1], &gold).is_err());
    }

    #[test]
    fn threshold_rule() {
        let ranked = vec![("a", 0.9), ("b", 0.5), ("c", 0.49)];
        assert_eq!(
            PredictionRule::Threshold(0.5).select(&ranked),
            ["a", "b"].into()
        );
        assert_eq!(PredictionRule::TopK(1).select(&ranked), ["a"].into());
    }

    #[test]
    fn csv_shape() {
        let summary = |level| LevelSummary {
            level,
            k: level.default_k(),
            documents: 1,
            empty_gold: 0,
            precision: 0.5,
            recall: 0.5,
            f1: 0.25,
            f1_of_means: 0.5,
            r_precision: 0.5,
            ndcg: 0.5,
        };
        let mut report = MetricReport {
            language: "en".into(),
            splits: 1,
            options: EvalOptions::default(),
            levels: LEVELS.iter().map(|&l| summary(l)).collect(),
            micro_f1: 0.0,
            per_document: vec![],
        };
        assert_eq!(
            MetricReport::table_csv(std::slice::from_ref(&report)),
            "language,id_f1_at_6,mt_f1_at_5,do_f1_at_4\nen,0.2500,0.2500,0.2500\n"
        );
        report.options.f1_averaging = F1Averaging::OfMeans;
        assert_eq!(report.csv_row(), "en,0.5000,0.5000,0.5000");
    }
}
