//! Multi-label classification of legal documents against the EuroVoc
//! thesaurus: data handling, stratified splitting, subword tokenization, a
//! keyword-profile baseline, a sigmoid classification head with its training
//! loop, and ranking metrics.

pub mod checkpoint;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod head;
pub mod jex;
pub mod metrics;
pub mod optim;
pub mod rng;
pub mod scalar;
pub mod stratify;
pub mod synth;
pub mod thesaurus;
pub mod tokenize;
pub mod train;

pub use checkpoint::Checkpoint;
pub use corpus::{Corpus, Document, LoadMode, SUPPORTED_LANGUAGES};
pub use error::{Error, Result};
pub use metrics::{EvalOptions, MetricReport, PredictionRule, Ranker};
pub use scalar::Scalar;
pub use stratify::{SplitPlan, SplitRatios};
pub use thesaurus::{DescriptorId, DoCode, Level, MtCode, ScoreAggregation, Thesaurus};
pub use tokenize::{SubwordVocabulary, VocabConfig};

pub type Head = head::ClassifierHead<f64>;
pub type HeadF32 = head::ClassifierHead<f32>;
pub type Signatures = jex::SignatureModel<f64>;
pub type SignaturesF32 = jex::SignatureModel<f32>;
pub type AdamW = optim::AdamW<f64>;
pub type AdamWF32 = optim::AdamW<f32>;
pub type TrainConfig = train::TrainConfig<f64>;
pub type TrainConfigF32 = train::TrainConfig<f32>;
pub type Model = checkpoint::Checkpoint<f64>;
pub type ModelF32 = checkpoint::Checkpoint<f32>;
