//! Clip-level acoustic feature sets.
//!
//! Four sets are available: a 24-band log-mel filterbank, 13 MFCCs,
//! 13 PLP cepstra and a 36-dimension GeMAPS-style descriptor set. All
//! spectral sets use 25 ms Hann frames with a 10 ms hop and average
//! per-frame values over the clip.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::{power_spectrogram, resample, AudioClip, Window, CANONICAL_RATE};
use crate::error::{Error, Result};

pub mod gemaps;
pub mod loudness;
pub mod mel;
pub mod pitch;
pub mod plp;
pub mod store;

pub use gemaps::{gemaps_lite, gemaps_lite_detailed, GemapsLite, GEMAPS_LITE_NAMES};
pub use loudness::{loudness_contour, LoudnessContour};
pub use mel::{mel_filterbank, mfcc};
pub use pitch::{f0_contour, hz_to_semitone, semitone_to_hz, PitchContour};
pub use plp::plp;
pub use store::FeatureStore;

pub const SPECTRAL_FRAME_S: f64 = 0.025;
pub const SPECTRAL_HOP_S: f64 = 0.010;
/// Framing shared by the pitch, loudness and voice-quality contours.
pub const ANALYSIS_FRAME_S: f64 = 0.040;
pub const ANALYSIS_HOP_S: f64 = 0.010;

/// Number of full frames of `len` samples at stride `hop` in `n` samples.
pub fn frame_count(n: usize, len: usize, hop: usize) -> usize {
    if n < len {
        0
    } else {
        (n - len) / hop + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSetId {
    Filterbank24,
    Mfcc13,
    Plp13,
    GemapsLite,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 4] = [
        FeatureSetId::Filterbank24,
        FeatureSetId::Mfcc13,
        FeatureSetId::Plp13,
        FeatureSetId::GemapsLite,
    ];

    pub fn dim(self) -> usize {
        match self {
            FeatureSetId::Filterbank24 => 24,
            FeatureSetId::Mfcc13 | FeatureSetId::Plp13 => 13,
            FeatureSetId::GemapsLite => 36,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetId::Filterbank24 => "filterbank24",
            FeatureSetId::Mfcc13 => "mfcc13",
            FeatureSetId::Plp13 => "plp13",
            FeatureSetId::GemapsLite => "gemaps_lite",
        }
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSetId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature set '{s}'")))
    }
}

/// Fixed-length named feature vector for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub set_id: FeatureSetId,
    pub clip_id: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(
        set_id: FeatureSetId,
        clip_id: impl Into<String>,
        names: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != values.len() || values.len() != set_id.dim() {
            return Err(Error::DimensionMismatch {
                expected: set_id.dim(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "{set_id} feature '{}' is not finite",
                names[i]
            )));
        }
        Ok(Self {
            set_id,
            clip_id: clip_id.into(),
            names,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Concatenation of a left and right clip's vectors of the same set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVector {
    pub set_id: FeatureSetId,
    pub left_id: String,
    pub right_id: String,
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

/// Joins two vectors into one pair input. Names carry `_left` / `_right`
/// suffixes.
pub fn compare_feature_set(a: &FeatureVector, b: &FeatureVector) -> Result<PairVector> {
    if a.set_id != b.set_id {
        return Err(Error::FeatureSetMismatch {
            left: a.set_id.to_string(),
            right: b.set_id.to_string(),
        });
    }
    let names = a
        .names
        .iter()
        .map(|n| format!("{n}_left"))
        .chain(b.names.iter().map(|n| format!("{n}_right")))
        .collect();
    let values = a.values.iter().chain(&b.values).copied().collect();
    Ok(PairVector {
        set_id: a.set_id,
        left_id: a.clip_id.clone(),
        right_id: b.clip_id.clone(),
        names,
        values,
    })
}

/// Computes one feature set for a clip, resampling to 16 kHz first if needed.
pub fn extract(clip: &AudioClip, set: FeatureSetId) -> Result<FeatureVector> {
    let canonical;
    let clip = if clip.sample_rate == CANONICAL_RATE {
        clip
    } else {
        canonical = resample(clip, CANONICAL_RATE)?;
        &canonical
    };
    let mut v = match set {
        FeatureSetId::GemapsLite => gemaps_lite(clip)?,
        _ => {
            let spec = power_spectrogram(clip, SPECTRAL_FRAME_S, SPECTRAL_HOP_S, Window::Hann)?;
            match set {
                FeatureSetId::Filterbank24 => mel_filterbank(&spec, mel::N_MEL)?,
                FeatureSetId::Mfcc13 => mfcc(&spec)?,
                FeatureSetId::Plp13 => plp(&spec, plp::PLP_ORDER)?,
                FeatureSetId::GemapsLite => unreachable!(),
            }
        }
    };
    v.clip_id = clip.id.clone();
    Ok(v)
}
