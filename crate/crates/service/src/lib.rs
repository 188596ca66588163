//! Serving layer for EuroVoc classifiers: a checksummed per-language model
//! registry, an HTTP API, a latency benchmark and the `eurovoc` command line.

pub mod bench;
pub mod bundle;
pub mod cli;
pub mod config;
pub mod error;
pub mod http;
pub mod registry;

pub use bundle::{BundleInfo, ClassifyRequest, ClassifyResponse, ModelBundle};
pub use error::{Result, ServiceError};
pub use http::{router, AppState};
pub use registry::{ModelRegistry, RegistryEntry};
