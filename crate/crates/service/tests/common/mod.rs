#![allow(dead_code)]

use std::path::{Path, PathBuf};

use eurovoc_core::encoder::MeanEmbeddingEncoder;
use eurovoc_core::synth;
use eurovoc_core::{Checkpoint, Head, SubwordVocabulary, VocabConfig};
use eurovoc_service::ModelRegistry;

pub const TOY_LABELS: usize = 12;
pub const TOY_DIM: usize = 8;

pub const TOY_WORDS: [&str; 14] = [
    "tax", "customs", "fish", "farm", "trade", "market", "court", "law", "energy", "water", "##es",
    "##ing", "##s", ".",
];

pub fn toy_vocab() -> SubwordVocabulary {
    let mut tokens: Vec<String> = ["[UNK]", "[CLS]", "[SEP]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    tokens.extend(TOY_WORDS.iter().map(|s| s.to_string()));
    SubwordVocabulary::new(tokens, VocabConfig::default()).unwrap()
}

/// Source files for a toy English bundle, written under `dir`.
pub struct ToyFiles {
    pub checkpoint: PathBuf,
    pub vocab: PathBuf,
    pub thesaurus: PathBuf,
}

pub fn write_toy_files(dir: &Path, seed: u64) -> ToyFiles {
    let vocab = toy_vocab();
    let encoder = MeanEmbeddingEncoder::<f64>::new(vocab.clone(), TOY_DIM, seed).unwrap();
    let thesaurus = synth::thesaurus(TOY_LABELS);
    let head = Head::new(TOY_DIM, thesaurus.descriptors().cloned(), seed + 1).unwrap();
    let files = ToyFiles {
        checkpoint: dir.join("toy.ckpt"),
        vocab: dir.join("toy_vocab.txt"),
        thesaurus: dir.join("toy_thesaurus.tsv"),
    };
    Checkpoint::new(head, Some(&encoder))
        .save(&files.checkpoint)
        .unwrap();
    std::fs::write(&files.vocab, vocab.to_text()).unwrap();
    std::fs::write(&files.thesaurus, thesaurus.to_tsv_string()).unwrap();
    files
}

/// Registry under `root` holding one English toy bundle.
pub fn toy_registry(root: &Path) -> ModelRegistry {
    let src = root.join("src");
    std::fs::create_dir_all(&src).unwrap();
    let files = write_toy_files(&src, 7);
    let mut registry = ModelRegistry::open(root.join("models")).unwrap();
    registry
        .register(
            "en",
            &files.checkpoint,
            &files.vocab,
            &files.thesaurus,
            false,
        )
        .unwrap();
    registry
}
