use std::collections::{BTreeSet, HashSet};

use eurovoc_core::rng::seeded;
use eurovoc_core::tokenize::{split_words, vocabulary_stats, StatsOptions};
use eurovoc_core::{Corpus, Document, SubwordVocabulary, VocabConfig};
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;

const SPECIALS: [&str; 3] = ["[UNK]", "[CLS]", "[SEP]"];

fn build(entries: impl IntoIterator<Item = String>) -> SubwordVocabulary {
    let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    tokens.extend(entries);
    SubwordVocabulary::new(tokens, VocabConfig::default()).unwrap()
}

/// Tabulates every (start, end) substring match, then follows the longest
/// match from each reachable start.
fn table_oracle(entries: &HashSet<String>, word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    let piece = |i: usize, j: usize| -> String {
        let body: String = chars[i..j].iter().collect();
        if i == 0 {
            body
        } else {
            format!("##{body}")
        }
    };
    let mut longest = vec![None; n];
    for (i, slot) in longest.iter_mut().enumerate() {
        for j in i + 1..=n {
            if entries.contains(&piece(i, j)) {
                *slot = Some(j);
            }
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        match longest[i] {
            Some(j) => {
                out.push(piece(i, j));
                i = j;
            }
            None => return vec!["[UNK]".to_string()],
        }
    }
    out
}

fn random_string(rng: &mut impl Rng, alphabet: &[char], min: usize, max: usize) -> String {
    let len = rng.random_range(min..=max);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

#[test]
fn greedy_matches_table_oracle() {
    let alphabet = ['a', 'b', 'c', 'é', 'ß'];
    let mut rng = seeded(31);
    for _ in 0..10_000 {
        let mut entries = HashSet::new();
        for _ in 0..rng.random_range(0..25) {
            let body = random_string(&mut rng, &alphabet, 1, 4);
            let entry = if rng.random_bool(0.5) {
                format!("##{body}")
            } else {
                body
            };
            entries.insert(entry);
        }
        let vocab = build(entries.iter().cloned());
        let word = random_string(&mut rng, &alphabet, 1, 10);
        assert_eq!(
            vocab.tokenize_word(&word),
            table_oracle(&entries, &word),
            "word {word:?}"
        );
    }
}

#[test]
fn six_hundred_words_fill_the_window() {
    let vocab = build(["w".to_string()]);
    let text = vec!["w"; 600].join(" ");
    let enc = vocab.encode_document(&text);
    assert_eq!(enc.len(), 512);
    assert_eq!(enc.first().unwrap(), "[CLS]");
    assert_eq!(enc.last().unwrap(), "[SEP]");
    assert_eq!(vocab.encode_ids(&text).len(), 512);
    assert_eq!(vocab.encode_document(""), vec!["[CLS]", "[SEP]"]);
}

#[test]
fn composition_oracle_on_mixed_text() {
    let vocab = build(
        [
            "un", "##aff", "##able", "aff", "the", "tax", "##es", ",", ".", "l", "##'", "é", "##t",
            "##é",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let text = "The unaffable taxes, l'été… xyz. ";
    let words = split_words(text);
    assert_eq!(
        words,
        vec![
            "The",
            "unaffable",
            "taxes",
            ",",
            "l",
            "'",
            "été",
            "…",
            "xyz",
            "."
        ]
    );
    let mut expected = vec!["[CLS]".to_string()];
    for w in &words {
        expected.extend(vocab.tokenize_word(w));
    }
    expected.push("[SEP]".into());
    assert_eq!(vocab.encode_document(text), expected);
    assert_eq!(
        vocab.tokenize_word("unaffable"),
        vec!["un", "##aff", "##able"]
    );
}

fn corpus_of(texts: &[String]) -> Corpus {
    let docs = texts
        .iter()
        .enumerate()
        .map(|(i, t)| Document {
            doc_id: format!("d{i}"),
            language: "en".into(),
            text: t.clone(),
            labels: BTreeSet::new(),
        })
        .collect();
    Corpus::new("en", docs).unwrap()
}

#[test]
fn stats_match_counting_oracle() {
    let alphabet = ['a', 'b', 'c', 'd'];
    let mut rng = seeded(41);
    for _ in 0..200 {
        let mut entries = HashSet::new();
        for _ in 0..rng.random_range(1..15) {
            let body = random_string(&mut rng, &alphabet, 1, 3);
            entries.insert(if rng.random_bool(0.5) {
                format!("##{body}")
            } else {
                body
            });
        }
        let vocab = build(entries.iter().cloned());
        let texts: Vec<String> = (0..rng.random_range(1..5))
            .map(|_| {
                (0..rng.random_range(1..12))
                    .map(|_| random_string(&mut rng, &alphabet, 1, 6))
                    .collect::<Vec<_>>()
                    .join(if rng.random_bool(0.3) { " , " } else { " " })
            })
            .collect();
        let (mut words, mut pieces, mut unk) = (0usize, 0usize, 0usize);
        for t in &texts {
            for w in t.split_whitespace().filter(|w| *w != ",") {
                words += 1;
                let p = table_oracle(&entries, w);
                pieces += p.len();
                unk += p.iter().filter(|x| *x == "[UNK]").count();
            }
        }
        let stats = vocabulary_stats(&vocab, &corpus_of(&texts), StatsOptions::default()).unwrap();
        assert!((stats.tokens_per_word - pieces as f64 / words as f64).abs() < 1e-12);
        assert!((stats.unk_per_word - unk as f64 / words as f64).abs() < 1e-12);
        assert!(stats.unk_per_word <= stats.tokens_per_word);
    }
}

#[test]
fn closure_covering_vocabulary_has_no_unknowns() {
    let alphabet = ['a', 'b', 'c', 'x', 'y', 'ü'];
    let mut rng = seeded(43);
    let texts: Vec<String> = (0..20)
        .map(|_| {
            (0..30)
                .map(|_| random_string(&mut rng, &alphabet, 1, 9))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let mut entries = BTreeSet::new();
    for w in texts.iter().flat_map(|t| t.split_whitespace()) {
        let chars: Vec<char> = w.chars().collect();
        for end in 1..=chars.len() {
            entries.insert(chars[..end].iter().collect::<String>());
        }
        for c in &chars {
            entries.insert(format!("##{c}"));
        }
    }
    let vocab = build(entries);
    let stats = vocabulary_stats(&vocab, &corpus_of(&texts), StatsOptions::default()).unwrap();
    assert_eq!(stats.unk_per_word, 0.0);
    assert_eq!(stats.tokens_per_word, 1.0);
}

#[test]
fn greedy_matching_is_not_monotone_in_the_vocabulary() {
    let base: Vec<String> = ["a", "##b", "##c", "##d", "##bcd"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let before = build(base.clone());
    let mut extended = base;
    extended.push("ab".into());
    let after = build(extended);
    assert_eq!(before.tokenize_word("abcd"), vec!["a", "##bcd"]);
    assert_eq!(after.tokenize_word("abcd"), vec!["ab", "##c", "##d"]);
}

#[test]
fn adding_non_prefix_corpus_words_never_hurts() {
    let alphabet = ['a', 'b', 'c'];
    let mut rng = seeded(47);
    for _ in 0..300 {
        let mut entries: BTreeSet<String> = BTreeSet::new();
        for _ in 0..rng.random_range(1..12) {
            let body = random_string(&mut rng, &alphabet, 1, 3);
            entries.insert(if rng.random_bool(0.5) {
                format!("##{body}")
            } else {
                body
            });
        }
        let words: Vec<String> = (0..15)
            .map(|_| random_string(&mut rng, &alphabet, 1, 6))
            .collect();
        let corpus = corpus_of(&[words.join(" ")]);
        let candidates: Vec<&String> = words
            .iter()
            .filter(|w| {
                !words
                    .iter()
                    .any(|u| u.len() > w.len() && u.starts_with(w.as_str()))
            })
            .collect();
        let mut current = entries.clone();
        let mut tpw = vocabulary_stats(&build(current.clone()), &corpus, StatsOptions::default())
            .unwrap()
            .tokens_per_word;
        for w in candidates {
            current.insert(w.clone());
            let next = vocabulary_stats(&build(current.clone()), &corpus, StatsOptions::default())
                .unwrap()
                .tokens_per_word;
            assert!(next <= tpw + 1e-12);
            tpw = next;
        }
    }
}

fn vocab_and_word() -> impl Strategy<Value = (Vec<String>, String)> {
    let entry =
        ("[abc]{1,3}", any::<bool>())
            .prop_map(|(body, cont)| if cont { format!("##{body}") } else { body });
    (prop::collection::vec(entry, 0..20), "[abc]{1,8}")
}

proptest! {
    #[test]
    fn pieces_reassemble_the_word((entries, word) in vocab_and_word()) {
        let vocab = build(entries);
        let pieces = vocab.tokenize_word(&word);
        if pieces != vec!["[UNK]".to_string()] {
            let joined: String = pieces
                .iter()
                .enumerate()
                .map(|(i, p)| if i == 0 { p.as_str() } else { p.strip_prefix("##").unwrap() })
                .collect();
            prop_assert_eq!(joined, word);
        }
    }

    #[test]
    fn truncation_is_idempotent(n_words in 0usize..800, max in 2usize..600) {
        let cfg = VocabConfig { max_sequence: max, ..VocabConfig::default() };
        let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        tokens.extend(["w".to_string(), "##x".to_string()]);
        let vocab = SubwordVocabulary::new(tokens, cfg).unwrap();
        let text = vec!["wx"; n_words].join(" ");
        let enc = vocab.encode_document(&text);
        prop_assert!(enc.len() <= max);
        prop_assert_eq!(enc.last().unwrap(), "[SEP]");
        let inner = enc[1..enc.len() - 1].to_vec();
        prop_assert_eq!(vocab.wrap_pieces(inner), enc.clone());
        prop_assert_eq!(vocab.wrap_pieces(vocab.tokenize(&text)), enc);
    }
}
