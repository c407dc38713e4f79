use serde::{Deserialize, Serialize};

use super::{frame_count, ANALYSIS_FRAME_S, ANALYSIS_HOP_S};
use crate::audio::AudioClip;
use crate::error::{Error, Result};

pub const LOUDNESS_FLOOR_DB: f64 = -90.0;

/// Per-frame RMS level in dB relative to full scale (a full-scale square
/// wave reads 0 dB), floored at -90 dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoudnessContour {
    pub loudness: Vec<f64>,
    pub frame_hop_s: f64,
}

pub fn rms_db(frame: &[f64]) -> f64 {
    let ms = frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64;
    if ms > 0.0 {
        (10.0 * ms.log10()).max(LOUDNESS_FLOOR_DB)
    } else {
        LOUDNESS_FLOOR_DB
    }
}

/// Loudness on the analysis framing shared with the pitch tracker. Clips
/// shorter than one frame yield a single whole-clip frame.
pub fn loudness_contour(clip: &AudioClip) -> Result<LoudnessContour> {
    if clip.is_empty() {
        return Err(Error::ClipTooShort(format!("{} is empty", clip.id)));
    }
    let sr = clip.sample_rate as f64;
    let len = (ANALYSIS_FRAME_S * sr).round() as usize;
    let hop = (ANALYSIS_HOP_S * sr).round() as usize;
    let loudness = if clip.len() < len {
        vec![rms_db(&clip.samples)]
    } else {
        (0..frame_count(clip.len(), len, hop))
            .map(|t| rms_db(&clip.samples[t * hop..t * hop + len]))
            .collect()
    };
    Ok(LoudnessContour {
        loudness,
        frame_hop_s: hop as f64 / sr,
    })
}
