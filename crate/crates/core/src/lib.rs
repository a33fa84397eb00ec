//! Music-driven conductor motion generation.
//!
//! Two-stage pipeline: an audio-motion correspondence network (twin temporal
//! encoders plus fuse layers) is trained first, then its music encoder is
//! transferred into a motion generator trained with a composite
//! MSE + perceptual + adversarial loss against a Lipschitz-constrained critic.
//! The crate also ships the surrounding plumbing: audio feature extraction,
//! pose ingestion, a synthetic beat-locked dataset, skeleton rendering, and a
//! CLI tying it all together.

pub mod audio;
pub mod error;
pub mod infer;
pub mod models;
pub mod motion;
pub mod nn;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for the CLI and end-to-end pipelines.
pub type Real = f64;

pub type AudioFeatureSequence = audio::AudioFeatureSequence<Real>;
pub type Waveform = audio::Waveform<Real>;
pub type MotionSequence = motion::MotionSequence<Real>;
pub type ModelBundle = models::ModelBundle<Real>;
