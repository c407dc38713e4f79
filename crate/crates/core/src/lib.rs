//! Comparative analysis of animal vocalizations recorded in different host
//! language environments.
//!
//! The crate covers the full chain: extracting singular vocalizations from
//! raw recordings, computing acoustic features, classifying context-matched
//! clip pairs, ranking discriminative features by Shapley attribution,
//! correlating vocal and host-speech features, and comparing syllable rates.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod classify;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod features;
pub mod pairing;
pub mod rng;
pub mod segment;
pub mod stats;
pub mod syllables;
pub mod synth;

pub use audio::AudioClip;
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use features::{FeatureSetId, FeatureVector};
pub use pairing::{ClipKind, ClipPair, ClipRecord, Context, LangEnv, PairClass, Scene};

/// Sizes the global worker pool used for per-clip parallelism. Call once,
/// before any parallel work.
pub fn set_threads(n: usize) -> std::result::Result<(), rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()
}
