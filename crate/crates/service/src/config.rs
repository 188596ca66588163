//! TOML configuration shared by all commands. Every value can be overridden
//! by the matching command-line flag; relative paths are resolved against
//! the directory of the config file.

use std::path::{Path, PathBuf};

use eurovoc_core::jex::IdfMode;
use eurovoc_core::metrics::F1Averaging;
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub language: Option<String>,
    pub corpus: Option<PathBuf>,
    pub thesaurus: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub plans: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    pub split: SplitSection,
    pub train: TrainSection,
    pub jex: JexSection,
    pub eval: EvalSection,
    pub serve: ServeSection,
    pub bench: BenchSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub seeds: Option<Vec<u64>>,
    pub ratios: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub peak_lr: Option<f64>,
    pub warmup_steps: Option<usize>,
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub lowercase: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JexSection {
    pub min_df: Option<usize>,
    pub idf: Option<IdfMode>,
    pub stopwords: Option<Vec<String>>,
    pub english_suffixes: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k: Option<[usize; 3]>,
    pub f1_averaging: Option<F1Averaging>,
    pub micro_top_k: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub addr: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub lengths: Option<Vec<usize>>,
    pub trials: Option<usize>,
    pub warmup: Option<usize>,
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut config = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.thesaurus,
            &mut self.vocab,
            &mut self.plans,
            &mut self.registry,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_rebases_paths() {
        let text = r#"
language = "en"
corpus = "data/en.jsonl"
registry = "/abs/models"

[split]
seeds = [1, 2]

[jex]
idf = "raw"

[eval]
k = [6, 5, 4]
f1_averaging = "of_means"
"#;
        let mut c = Config::from_toml_str(text).unwrap();
        c.rebase(Path::new("/cfg"));
        assert_eq!(c.corpus, Some(PathBuf::from("/cfg/data/en.jsonl")));
        assert_eq!(c.registry, Some(PathBuf::from("/abs/models")));
        assert_eq!(c.split.seeds, Some(vec![1, 2]));
        assert_eq!(c.jex.idf, Some(IdfMode::Raw));
        assert_eq!(c.eval.f1_averaging, Some(F1Averaging::OfMeans));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::from_toml_str("langauge = \"en\"").is_err());
        assert!(Config::from_toml_str("[train]\nepoch = 3").is_err());
    }
}
