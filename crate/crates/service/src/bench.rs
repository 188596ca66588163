//! End-to-end classification latency as a function of input length.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bundle::{ClassifyRequest, ModelBundle, DEFAULT_NUM_LABELS};
use crate::error::{Result, ServiceError};

pub const DEFAULT_LENGTHS: [usize; 5] = [64, 128, 256, 384, 512];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    /// Encoded length in tokens, `[CLS]` and `[SEP]` included.
    pub length: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub trials: usize,
    pub warmup: usize,
    pub rows: Vec<LatencyRow>,
}

impl LatencyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("length,mean_ms,std_ms\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.6},{:.6}", r.length, r.mean_ms, r.std_ms);
        }
        out
    }
}

/// Text whose encoding is exactly `length` tokens: whole-word vocabulary
/// entries repeated `length − 2` times.
pub fn synthetic_text(bundle: &ModelBundle, length: usize) -> Result<String> {
    let vocab = bundle.encoder().vocab();
    let max = vocab.max_sequence();
    if !(2..=max).contains(&length) {
        return Err(ServiceError::InvalidLength { length, max });
    }
    let config = vocab.config();
    let specials = [&config.unk_token, &config.cls_token, &config.sep_token];
    let words: Vec<&String> = vocab
        .tokens()
        .iter()
        .filter(|t| !specials.contains(t) && !t.starts_with(config.continuation_prefix.as_str()))
        .filter(|t| {
            vocab.pre_split(t) == [t.to_string()] && vocab.tokenize_word(t) == [t.to_string()]
        })
        .take(64)
        .collect();
    if words.is_empty() {
        return Err(ServiceError::NoBenchmarkWords);
    }
    let text: Vec<&str> = (0..length - 2)
        .map(|i| words[i % words.len()].as_str())
        .collect();
    Ok(text.join(" "))
}

/// Times `trials` classify calls per length after `warmup` untimed calls.
/// The spread is the population standard deviation.
pub fn latency_benchmark(
    bundle: &ModelBundle,
    lengths: &[usize],
    trials: usize,
    warmup: usize,
) -> Result<LatencyReport> {
    if trials == 0 {
        return Err(ServiceError::NoTrials);
    }
    let texts = lengths
        .iter()
        .map(|&len| synthetic_text(bundle, len))
        .collect::<Result<Vec<_>>>()?;
    let num_labels = DEFAULT_NUM_LABELS.min(bundle.head().num_labels());
    let mut rows = Vec::with_capacity(lengths.len());
    for (&length, text) in lengths.iter().zip(texts) {
        let request = ClassifyRequest {
            num_labels,
            ..ClassifyRequest::new(text)
        };
        for _ in 0..warmup {
            bundle.classify(&request)?;
        }
        let mut samples = Vec::with_capacity(trials);
        for _ in 0..trials {
            let start = Instant::now();
            std::hint::black_box(bundle.classify(&request)?);
            samples.push(start.elapsed().as_secs_f64() * 1e3);
        }
        let mean = samples.iter().sum::<f64>() / trials as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / trials as f64;
        rows.push(LatencyRow {
            length,
            mean_ms: mean,
            std_ms: var.sqrt(),
        });
    }
    Ok(LatencyReport {
        trials,
        warmup,
        rows,
    })
}
