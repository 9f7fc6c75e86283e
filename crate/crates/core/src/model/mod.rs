//! Extractors, the Temporal MLP, the two-stream network and training.

mod config;
mod extractor;
mod network;
mod temporal;
mod train;

pub use config::{ModelConfig, ModelKind, ReferenceExtractorConfig, RgbBackend, TemporalMlpConfig};
pub use extractor::{Extractor, ReferenceExtractor};
pub use network::{argmax, fusionnet_forward, Model, ModelHeader, Stream};
pub use temporal::{TemporalBlock, TemporalMlp};
pub use train::{
    batch_gradient, evaluate, train, verb_of, EpochRecord, Evaluation, TrainConfig, TrainOutcome,
    GRAD_CHUNK,
};
