use std::collections::BTreeSet;

use eurovoc_core::encoder::MeanEmbeddingEncoder;
use eurovoc_core::head::ClassifierHead;
use eurovoc_core::metrics::{micro_f1, PredictionRule};
use eurovoc_core::stratify::stratified_split;
use eurovoc_core::synth::{SeparableConfig, SeparableDataset};
use eurovoc_core::train::{fit, train_head, EncoderClassifier, LabeledFeatures, TrainConfig};
use eurovoc_core::{DescriptorId, SplitRatios, SubwordVocabulary, VocabConfig};

fn toy_config(seed: u64) -> TrainConfig<f64> {
    TrainConfig {
        peak_lr: 1e-3,
        seed,
        ..TrainConfig::default()
    }
}

fn predicted_sets(
    head: &ClassifierHead<f64>,
    examples: &[LabeledFeatures<f64>],
) -> Vec<BTreeSet<DescriptorId>> {
    examples
        .iter()
        .map(|ex| {
            let ranked = head
                .predict_topk_features(&ex.features, head.num_labels())
                .unwrap();
            PredictionRule::Threshold(0.5).select(&ranked)
        })
        .collect()
}

fn gold_sets(
    head: &ClassifierHead<f64>,
    examples: &[LabeledFeatures<f64>],
) -> Vec<BTreeSet<DescriptorId>> {
    examples
        .iter()
        .map(|ex| {
            head.labels()
                .iter()
                .zip(&ex.targets)
                .filter(|(_, &y)| y == 1.0)
                .map(|(l, _)| l.clone())
                .collect()
        })
        .collect()
}

#[test]
fn separable_data_reaches_high_micro_f1() {
    let ds = SeparableDataset::generate(&SeparableConfig::default()).unwrap();
    let plan = stratified_split(&ds.corpus, &SplitRatios::train_val_test(), 11).unwrap();
    let train = ds.examples::<f64>(&plan.subsets[0]);
    let val = ds.examples::<f64>(&plan.subsets[1]);
    let test = ds.examples::<f64>(&plan.subsets[2]);

    let head = ClassifierHead::new(32, ds.labels(), 5).unwrap();
    let outcome = train_head(head, &train, &val, &toy_config(3)).unwrap();

    let f1: f64 = micro_f1(
        &predicted_sets(&outcome.model, &test),
        &gold_sets(&outcome.model, &test),
    )
    .unwrap();
    assert!(f1 >= 0.9, "held-out micro-F1 {f1}");

    let min = outcome
        .log
        .iter()
        .map(|e| e.val_loss)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(outcome.best_val_loss(), min);
    let best = &outcome.log[outcome.best_epoch() - 1];
    assert_eq!(best.val_loss, min);
    assert_eq!(outcome.log.len(), 30);
}

#[test]
fn training_is_deterministic() {
    let cfg = SeparableConfig {
        documents: 120,
        ..SeparableConfig::default()
    };
    let ds = SeparableDataset::generate(&cfg).unwrap();
    let plan = stratified_split(&ds.corpus, &SplitRatios::train_val_test(), 1).unwrap();
    let train = ds.examples::<f64>(&plan.subsets[0]);
    let val = ds.examples::<f64>(&plan.subsets[1]);
    let run = || {
        let head = ClassifierHead::new(32, ds.labels(), 9).unwrap();
        let config = TrainConfig {
            epochs: 4,
            ..toy_config(4)
        };
        train_head(head, &train, &val, &config).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.model, b.model);
    assert_eq!(a.log, b.log);
}

#[test]
fn validation_loss_selection_is_monotone() {
    let cfg = SeparableConfig {
        documents: 200,
        noise: 3.0,
        ..SeparableConfig::default()
    };
    let ds = SeparableDataset::generate(&cfg).unwrap();
    let plan = stratified_split(&ds.corpus, &SplitRatios::train_val_test(), 2).unwrap();
    let train = ds.examples::<f64>(&plan.subsets[0]);
    let val = ds.examples::<f64>(&plan.subsets[1]);
    let head = ClassifierHead::new(32, ds.labels(), 1).unwrap();
    let config = TrainConfig {
        epochs: 12,
        peak_lr: 3e-2,
        ..toy_config(0)
    };
    let outcome = train_head(head, &train, &val, &config).unwrap();
    let mut running = f64::INFINITY;
    for entry in &outcome.log {
        running = running.min(entry.val_loss);
    }
    assert_eq!(running, outcome.best_val_loss());
    let check = outcome.model.clone().with_dropout(0.0).unwrap();
    let recomputed: f64 = val
        .iter()
        .map(|ex| {
            eurovoc_core::head::bce_loss(&check.probabilities(&ex.features).unwrap(), &ex.targets)
                .unwrap()
        })
        .sum::<f64>()
        / val.len() as f64;
    assert!((recomputed - outcome.best_val_loss()).abs() < 1e-12);
}

#[test]
fn rejects_empty_validation_and_bad_shapes() {
    let head = ClassifierHead::<f64>::new(2, [DescriptorId::new("1").unwrap()], 0).unwrap();
    let ex = LabeledFeatures {
        features: vec![1.0, 0.0],
        targets: vec![1.0],
    };
    assert!(train_head(head.clone(), &[ex.clone()], &[], &toy_config(0)).is_err());
    let bad = LabeledFeatures {
        features: vec![1.0],
        targets: vec![1.0],
    };
    assert!(train_head(head, &[ex], &[bad], &toy_config(0)).is_err());
}

#[test]
fn divergence_is_reported() {
    let head = ClassifierHead::<f64>::new(1, [DescriptorId::new("1").unwrap()], 0).unwrap();
    let ex = LabeledFeatures {
        features: vec![f64::NAN],
        targets: vec![1.0],
    };
    let err = train_head(head, &[ex.clone()], &[ex], &toy_config(0)).unwrap_err();
    assert!(
        matches!(err, eurovoc_core::Error::Divergence { epoch: 1 }),
        "{err}"
    );
}

#[test]
fn encoder_and_head_train_jointly() {
    let cfg = SeparableConfig {
        documents: 300,
        labels: 6,
        dim: 16,
        ..SeparableConfig::default()
    };
    let ds = SeparableDataset::generate(&cfg).unwrap();
    let mut tokens: Vec<String> = ["[UNK]", "[CLS]", "[SEP]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let words: BTreeSet<String> = ds
        .corpus
        .documents
        .iter()
        .flat_map(|d| d.text.split_whitespace().map(str::to_owned))
        .collect();
    tokens.extend(words);
    let vocab = SubwordVocabulary::new(tokens, VocabConfig::default()).unwrap();
    let encoder = MeanEmbeddingEncoder::<f64>::new(vocab, 16, 2).unwrap();
    let head = ClassifierHead::new(16, ds.labels(), 3).unwrap();
    let model = EncoderClassifier::new(encoder, head).unwrap();

    let plan = stratified_split(&ds.corpus, &SplitRatios::train_val_test(), 5).unwrap();
    let examples = |i: usize| {
        plan.subset(&ds.corpus, i)
            .unwrap()
            .documents
            .iter()
            .map(|d| model.example(d))
            .collect::<Vec<_>>()
    };
    let (train, val) = (examples(0), examples(1));
    let config = TrainConfig {
        epochs: 5,
        peak_lr: 1e-2,
        ..toy_config(8)
    };
    let outcome = fit(model.clone(), &train, &val, &config).unwrap();
    let first = outcome.log[0].val_loss;
    assert!(outcome.best_val_loss() < first, "{:?}", outcome.log);
    assert_ne!(outcome.model.encoder.table(), model.encoder.table());
}
