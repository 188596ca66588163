use std::collections::{BTreeMap, BTreeSet};

use eurovoc_core::corpus::{descriptor_stats, frequency_histogram, label_frequencies};
use eurovoc_core::rng::seeded;
use eurovoc_core::synth::{descriptor, thesaurus, zipf_corpus};
use eurovoc_core::{Corpus, Document, Level, LoadMode, Thesaurus};
use proptest::prelude::*;
use rand::Rng;

fn random_corpus(seed: u64, docs: usize, labels: usize) -> Corpus {
    let mut rng = seeded(seed);
    let documents = (0..docs)
        .map(|i| Document {
            doc_id: format!("r{i}"),
            language: "de".into(),
            text: format!("Text {i}"),
            labels: (0..rng.random_range(1..=8))
                .map(|_| descriptor(rng.random_range(0..labels)))
                .collect(),
        })
        .collect();
    Corpus::new("de", documents).unwrap()
}

fn codes(doc: &Document, t: &Thesaurus, level: Level) -> BTreeSet<String> {
    doc.labels
        .iter()
        .map(|id| match level {
            Level::Id => id.to_string(),
            Level::Mt => t.mts_of(id).unwrap()[0].to_string(),
            Level::Do => t.mts_of(id).unwrap()[0].as_str()[..2].to_string(),
        })
        .collect()
}

#[test]
fn stats_match_counting_oracle() {
    let t = thesaurus(40);
    for seed in 0..10 {
        let c = random_corpus(seed, 100, 40);
        for level in Level::ALL {
            let sizes: Vec<usize> = c
                .documents
                .iter()
                .map(|d| codes(d, &t, level).len())
                .collect();
            let stats = descriptor_stats(&c, &t, level).unwrap();
            let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
            assert!((stats.mean - mean).abs() < 1e-12);
            assert_eq!(stats.min, *sizes.iter().min().unwrap());
            assert_eq!(stats.max, *sizes.iter().max().unwrap());
            assert!(stats.min as f64 <= stats.mean && stats.mean <= stats.max as f64);
        }
        let id = descriptor_stats(&c, &t, Level::Id).unwrap().mean;
        let mt = descriptor_stats(&c, &t, Level::Mt).unwrap().mean;
        let dom = descriptor_stats(&c, &t, Level::Do).unwrap().mean;
        assert!(dom <= mt && mt <= id);
    }
}

#[test]
fn four_six_eight_fixture() {
    let t = thesaurus(10);
    let docs = [4, 6, 8]
        .iter()
        .enumerate()
        .map(|(i, &n)| Document {
            doc_id: format!("f{i}"),
            language: "en".into(),
            text: String::new(),
            labels: (0..n).map(descriptor).collect(),
        })
        .collect();
    let c = Corpus::new("en", docs).unwrap();
    let s = descriptor_stats(&c, &t, Level::Id).unwrap();
    assert_eq!((s.mean, s.min, s.max), (6.0, 4, 8));
}

#[test]
fn histogram_matches_sort_and_sum_oracle() {
    let t = thesaurus(60);
    for seed in 0..10 {
        let c = random_corpus(seed + 50, 200, 60);
        for level in Level::ALL {
            let mut freq: BTreeMap<String, usize> = BTreeMap::new();
            for d in &c.documents {
                for code in codes(d, &t, level) {
                    *freq.entry(code).or_default() += 1;
                }
            }
            let mut sorted: Vec<(String, usize)> = freq.into_iter().collect();
            sorted.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            assert_eq!(label_frequencies(&c, &t, level).unwrap(), sorted);
            for group in [1usize, 3, 5, 50] {
                let want: Vec<usize> = sorted
                    .chunks(group)
                    .map(|ch| ch.iter().map(|x| x.1).sum())
                    .collect();
                let h = frequency_histogram(&c, &t, level, Some(group)).unwrap();
                assert_eq!(h.group_counts, want);
            }
        }
    }
}

#[test]
fn histogram_edge_cases() {
    let t = thesaurus(5);
    let docs = (0..5)
        .map(|i| Document {
            doc_id: format!("h{i}"),
            language: "en".into(),
            text: String::new(),
            labels: [descriptor(2)].into(),
        })
        .collect();
    let c = Corpus::new("en", docs).unwrap();
    let h = frequency_histogram(&c, &t, Level::Id, Some(1)).unwrap();
    assert_eq!(h.group_counts, vec![5]);
    assert_eq!(h.to_csv(), "group_index,count\n0,5\n");
    let empty = Corpus::new("en", vec![]).unwrap();
    assert!(frequency_histogram(&empty, &t, Level::Id, None).is_err());
    assert!(descriptor_stats(&empty, &t, Level::Id).is_err());
}

#[test]
fn loader_errors() {
    let line = |id: &str, lang: &str, labels: &str| {
        format!(r#"{{"doc_id":"{id}","language":"{lang}","text":"t","labels":{labels}}}"#)
    };
    let empty_labels = line("a", "en", "[]");
    assert!(Corpus::from_jsonl_str(&empty_labels, "en", LoadMode::Train).is_err());
    assert!(Corpus::from_jsonl_str(&empty_labels, "en", LoadMode::Inference).is_ok());
    let dup = format!(
        "{}\n{}\n",
        line("a", "en", r#"["1"]"#),
        line("a", "en", r#"["2"]"#)
    );
    assert!(Corpus::from_jsonl_str(&dup, "en", LoadMode::Train).is_err());
    assert!(Corpus::from_jsonl_str(&line("a", "xx", r#"["1"]"#), "xx", LoadMode::Train).is_err());
    let bad = format!("{}\n{{broken\n", line("a", "en", r#"["1"]"#));
    match Corpus::from_jsonl_str(&bad, "en", LoadMode::Train) {
        Err(eurovoc_core::Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn file_round_trip() {
    let c = zipf_corpus(50, 10, 3, 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    c.write_jsonl(std::fs::File::create(&path).unwrap())
        .unwrap();
    assert_eq!(
        Corpus::load(&path, &c.language, LoadMode::Train).unwrap(),
        c
    );
}

proptest! {
    #[test]
    fn serialization_round_trips(seed in any::<u64>(), docs in 1usize..40) {
        let c = random_corpus(seed, docs, 25);
        let back = Corpus::from_jsonl_str(&c.to_jsonl_string(), "de", LoadMode::Train).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn unit_groups_are_non_increasing(seed in any::<u64>(), docs in 1usize..80) {
        let t = thesaurus(30);
        let c = random_corpus(seed, docs, 30);
        for level in Level::ALL {
            let h = frequency_histogram(&c, &t, level, Some(1)).unwrap();
            prop_assert!(h.group_counts.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
