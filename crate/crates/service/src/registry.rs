//! Directory of per-language model bundles.
//!
//! Layout: `<root>/registry.json` lists each language's checkpoint,
//! vocabulary and thesaurus (paths relative to the root) together with a
//! SHA-256 digest over the three files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use eurovoc_core::{Checkpoint, SubwordVocabulary, Thesaurus, VocabConfig, SUPPORTED_LANGUAGES};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundle::ModelBundle;
use crate::error::{Result, ServiceError};

pub const MANIFEST_FILE: &str = "registry.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub checkpoint: PathBuf,
    pub vocab: PathBuf,
    pub thesaurus: PathBuf,
    pub sha256: String,
    /// Whether the vocabulary expects lowercased input.
    #[serde(default)]
    pub lowercase: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Manifest {
    models: BTreeMap<String, RegistryEntry>,
}

#[derive(Debug, Clone)]
pub struct ModelRegistry {
    root: PathBuf,
    entries: BTreeMap<String, RegistryEntry>,
}

pub fn validate_language(code: &str) -> Result<()> {
    if SUPPORTED_LANGUAGES.contains(&code) {
        Ok(())
    } else {
        Err(ServiceError::UnsupportedLanguage {
            code: code.to_owned(),
            valid: SUPPORTED_LANGUAGES.join(", "),
        })
    }
}

/// Hex SHA-256 over the files in order, each prefixed by its byte length.
pub fn checksum(paths: &[&Path]) -> Result<String> {
    let mut hasher = Sha256::new();
    for path in paths {
        let bytes = read(path)?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    if !path.is_file() {
        return Err(ServiceError::MissingFile(path.to_owned()));
    }
    std::fs::read(path).map_err(|e| ServiceError::io(path, e))
}

impl ModelRegistry {
    /// Opens `root`; a directory without a manifest is an empty registry.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let manifest_path = root.join(MANIFEST_FILE);
        let manifest = if manifest_path.is_file() {
            let text = std::fs::read_to_string(&manifest_path)
                .map_err(|e| ServiceError::io(&manifest_path, e))?;
            serde_json::from_str::<Manifest>(&text)
                .map_err(|e| ServiceError::Manifest(e.to_string()))?
        } else {
            Manifest::default()
        };
        for code in manifest.models.keys() {
            validate_language(code)?;
        }
        Ok(Self {
            root,
            entries: manifest.models,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entry(&self, language: &str) -> Result<&RegistryEntry> {
        validate_language(language)?;
        self.entries
            .get(language)
            .ok_or_else(|| ServiceError::NotRegistered(language.to_owned()))
    }

    /// Copies the three files under `<root>/<language>/`, records their
    /// digest and rewrites the manifest.
    pub fn register(
        &mut self,
        language: &str,
        checkpoint: &Path,
        vocab: &Path,
        thesaurus: &Path,
        lowercase: bool,
    ) -> Result<&RegistryEntry> {
        validate_language(language)?;
        let dir = self.root.join(language);
        std::fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
        let thesaurus_name = match thesaurus.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => "thesaurus.json",
            _ => "thesaurus.tsv",
        };
        let targets = [
            (checkpoint, PathBuf::from(language).join("model.ckpt")),
            (vocab, PathBuf::from(language).join("vocab.txt")),
            (thesaurus, PathBuf::from(language).join(thesaurus_name)),
        ];
        for (src, rel) in &targets {
            let bytes = read(src)?;
            let dst = self.root.join(rel);
            std::fs::write(&dst, bytes).map_err(|e| ServiceError::io(&dst, e))?;
        }
        let [(_, checkpoint), (_, vocab), (_, thesaurus)] = targets;
        let sha256 = checksum(&[
            &self.root.join(&checkpoint),
            &self.root.join(&vocab),
            &self.root.join(&thesaurus),
        ])?;
        self.entries.insert(
            language.to_owned(),
            RegistryEntry {
                checkpoint,
                vocab,
                thesaurus,
                sha256,
                lowercase,
            },
        );
        self.save()?;
        Ok(&self.entries[language])
    }

    fn save(&self) -> Result<()> {
        let manifest = Manifest {
            models: self.entries.clone(),
        };
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| ServiceError::Manifest(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| ServiceError::io(&path, e))
    }

    /// Verifies the digest and builds the bundle for `language`.
    pub fn load(&self, language: &str) -> Result<ModelBundle> {
        let entry = self.entry(language)?;
        let paths = [
            self.root.join(&entry.checkpoint),
            self.root.join(&entry.vocab),
            self.root.join(&entry.thesaurus),
        ];
        let actual = checksum(&[&paths[0], &paths[1], &paths[2]])?;
        if actual != entry.sha256 {
            return Err(ServiceError::ChecksumMismatch {
                language: language.to_owned(),
                expected: entry.sha256.clone(),
                actual,
            });
        }
        let checkpoint = Checkpoint::<f64>::load(&paths[0])?;
        let config = VocabConfig {
            lowercase: entry.lowercase,
            ..VocabConfig::default()
        };
        let vocab = SubwordVocabulary::load(&paths[1], config)?;
        let thesaurus = Thesaurus::load(&paths[2])?;
        let table = checkpoint
            .embeddings
            .ok_or_else(|| ServiceError::Bundle("checkpoint carries no token embeddings".into()))?;
        let encoder = table.into_encoder(vocab)?;
        Ok(ModelBundle::new(language, checkpoint.head, encoder, thesaurus)?.with_checksum(actual))
    }

    pub fn load_all(&self) -> Result<Vec<ModelBundle>> {
        self.languages().map(|lang| self.load(lang)).collect()
    }
}
