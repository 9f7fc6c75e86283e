//! Two-stream temporal MLP for egocentric action recognition.
//!
//! An RGB stream and a hand-pose stream are sampled from native-rate
//! recordings at independent frequencies, embedded per frame, mixed over
//! time by MLP blocks and fused at the final time step. Around the model
//! sit hand-keypoint normalization, dataset IO, a synthetic generator,
//! macro-F1 scoring and a single-thread CPU cost harness for frequency
//! sweeps.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod handpose;
pub mod model;
pub mod nn;
pub mod par;
pub mod sampling;

pub use error::{Error, Result};
