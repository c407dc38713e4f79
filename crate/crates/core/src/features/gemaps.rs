//! A reduced, fully specified take on the Geneva minimalistic parameter set.
//!
//! 36 clip-level statistics over three contours computed on shared 40 ms /
//! 10 ms frames: loudness (RMS dBFS), F0 in semitones above 27.5 Hz, and
//! per-frame spectral shape measures on voiced frames.
//!
//! Conventions:
//! - `sma3` contours are smoothed with a 3-frame moving average; F0 is
//!   smoothed within voiced runs only.
//! - `stddevNorm` is `sigma / |mu|` (0 when `mu` is 0). For loudness it is
//!   taken on the linear RMS contour so it does not depend on gain.
//! - Rising/falling slopes are per-run `(end - start) / duration` over
//!   maximal strictly monotone runs, in units per second.
//! - Spectral slopes are least-squares slopes of the dB power spectrum
//!   against frequency, in dB/Hz.
//! - Hammarberg index: strongest dB peak in 0-2 kHz minus strongest in 2-5 kHz.
//! - H1-A3: dB level of the first harmonic minus the strongest peak in
//!   2.3-3.5 kHz (a fixed stand-in for the third formant).
//! - Clips with no voiced frame get 0 for every voiced statistic and
//!   `pitch_valid = false`.

use super::loudness::{loudness_contour, LoudnessContour};
use super::pitch::{f0_contour, semitone_to_hz, PitchContour};
use super::{FeatureSetId, FeatureVector, ANALYSIS_FRAME_S, ANALYSIS_HOP_S};
use crate::audio::{power_spectrogram, AudioClip, SpectralFrameSeq, Window};
use crate::error::{Error, Result};
use crate::stats;

pub const GEMAPS_LITE_NAMES: [&str; 36] = [
    "loudness_sma3_amean",
    "loudness_sma3_stddevNorm",
    "loudness_sma3_percentile20.0",
    "loudness_sma3_percentile80.0",
    "loudness_sma3_pctlrange0-2",
    "loudness_sma3_meanRisingSlope",
    "loudness_sma3_stddevRisingSlope",
    "loudness_sma3_meanFallingSlope",
    "loudness_sma3_stddevFallingSlope",
    "loudnessPeaksPerSec",
    "F0semitoneFrom27.5Hz_sma3nz_amean",
    "F0semitoneFrom27.5Hz_sma3nz_stddevNorm",
    "F0semitoneFrom27.5Hz_sma3nz_percentile20.0",
    "F0semitoneFrom27.5Hz_sma3nz_percentile50.0",
    "F0semitoneFrom27.5Hz_sma3nz_percentile80.0",
    "F0semitoneFrom27.5Hz_sma3nz_pctlrange0-2",
    "F0semitoneFrom27.5Hz_sma3nz_meanRisingSlope",
    "F0semitoneFrom27.5Hz_sma3nz_stddevRisingSlope",
    "F0semitoneFrom27.5Hz_sma3nz_meanFallingSlope",
    "F0semitoneFrom27.5Hz_sma3nz_stddevFallingSlope",
    "logRelF0-H1-A3_sma3nz_amean",
    "logRelF0-H1-A3_sma3nz_stddevNorm",
    "hammarbergIndexV_sma3nz_amean",
    "hammarbergIndexV_sma3nz_stddevNorm",
    "hammarbergIndexUV_sma3nz_amean",
    "slopeV0-500_sma3nz_amean",
    "slopeV0-500_sma3nz_stddevNorm",
    "slopeV500-1500_sma3nz_amean",
    "slopeV500-1500_sma3nz_stddevNorm",
    "alphaRatioV_sma3nz_amean",
    "alphaRatioV_sma3nz_stddevNorm",
    "VoicedSegmentsPerSec",
    "MeanVoicedSegmentLengthSec",
    "StddevVoicedSegmentLengthSec",
    "MeanUnvoicedSegmentLength",
    "StddevUnvoicedSegmentLength",
];

/// Dimensions that track absolute level and therefore move with gain.
pub const LEVEL_DEPENDENT: [&str; 3] = [
    "loudness_sma3_amean",
    "loudness_sma3_percentile20.0",
    "loudness_sma3_percentile80.0",
];

/// Minimum rise and fall (dB) around a loudness peak.
pub const PEAK_DELTA_DB: f64 = 3.0;
/// Unvoiced frames quieter than this relative to the loudest frame are
/// treated as silence and left out of unvoiced spectral statistics.
const UV_GATE_DB: f64 = 40.0;
const DB_FLOOR_POWER: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub struct GemapsLite {
    pub vector: FeatureVector,
    /// False when the clip had no voiced frame and voiced statistics are
    /// the 0 sentinel.
    pub pitch_valid: bool,
}

pub fn gemaps_lite(clip: &AudioClip) -> Result<FeatureVector> {
    gemaps_lite_detailed(clip).map(|g| g.vector)
}

pub fn gemaps_lite_detailed(clip: &AudioClip) -> Result<GemapsLite> {
    if clip.duration_s() < 0.1 {
        return Err(Error::ClipTooShort(format!(
            "{}: GeMAPS-lite needs at least 100 ms",
            clip.id
        )));
    }
    let loud = loudness_contour(clip)?;
    let pitch = f0_contour(clip)?;
    let spec = power_spectrogram(clip, ANALYSIS_FRAME_S, ANALYSIS_HOP_S, Window::Hann)?;
    debug_assert_eq!(loud.loudness.len(), spec.n_frames());
    debug_assert_eq!(pitch.f0_semitone.len(), spec.n_frames());

    let mut values = Vec::with_capacity(36);
    values.extend(loudness_stats(&loud, clip.duration_s()));
    let voiced_any = pitch.f0_semitone.iter().any(Option::is_some);
    values.extend(f0_stats(&pitch));
    values.extend(spectral_stats(&spec, &pitch, &loud));
    values.extend(segment_stats(&pitch, clip.duration_s()));
    debug_assert_eq!(values.len(), 36);

    let names = GEMAPS_LITE_NAMES.iter().map(|s| s.to_string()).collect();
    let vector = FeatureVector::new(FeatureSetId::GemapsLite, clip.id.clone(), names, values)?;
    Ok(GemapsLite {
        vector,
        pitch_valid: voiced_any,
    })
}

fn loudness_stats(loud: &LoudnessContour, duration: f64) -> Vec<f64> {
    let l = stats::moving_average3(&loud.loudness);
    let linear: Vec<f64> = l.iter().map(|db| 10f64.powf(db / 20.0)).collect();
    let p20 = stats::percentile(&l, 20.0);
    let p80 = stats::percentile(&l, 80.0);
    let (rise, fall) = stats::monotone_run_slopes(&l, loud.frame_hop_s);
    let peaks = stats::count_peaks(&l, PEAK_DELTA_DB);
    vec![
        stats::mean(&l),
        stats::stddev_norm(&linear),
        p20,
        p80,
        p80 - p20,
        stats::mean_or_zero(&rise),
        stats::std(&rise),
        stats::mean_or_zero(&fall),
        stats::std(&fall),
        peaks as f64 / duration,
    ]
}

fn voiced_runs(pitch: &PitchContour) -> Vec<Vec<f64>> {
    let mut runs = Vec::new();
    let mut cur = Vec::new();
    for v in &pitch.f0_semitone {
        match v {
            Some(x) => cur.push(*x),
            None if !cur.is_empty() => runs.push(std::mem::take(&mut cur)),
            None => {}
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs
}

fn f0_stats(pitch: &PitchContour) -> Vec<f64> {
    let runs: Vec<Vec<f64>> = voiced_runs(pitch)
        .iter()
        .map(|r| stats::moving_average3(r))
        .collect();
    let all: Vec<f64> = runs.iter().flatten().copied().collect();
    if all.is_empty() {
        return vec![0.0; 10];
    }
    let mut rise = Vec::new();
    let mut fall = Vec::new();
    for r in &runs {
        let (a, b) = stats::monotone_run_slopes(r, pitch.frame_hop_s);
        rise.extend(a);
        fall.extend(b);
    }
    let p20 = stats::percentile(&all, 20.0);
    let p80 = stats::percentile(&all, 80.0);
    vec![
        stats::mean(&all),
        stats::stddev_norm(&all),
        p20,
        stats::percentile(&all, 50.0),
        p80,
        p80 - p20,
        stats::mean_or_zero(&rise),
        stats::std(&rise),
        stats::mean_or_zero(&fall),
        stats::std(&fall),
    ]
}

fn band_max_db(db: &[f64], bin_hz: f64, lo: f64, hi: f64) -> Option<f64> {
    db.iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * bin_hz;
            f >= lo && f <= hi
        })
        .map(|(_, v)| *v)
        .reduce(f64::max)
}

fn band_power(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> f64 {
    power
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = *k as f64 * bin_hz;
            f >= lo && f < hi
        })
        .map(|(_, p)| p)
        .sum()
}

/// Least-squares slope of dB power against frequency within `[lo, hi]`.
pub fn spectral_slope(power: &[f64], bin_hz: f64, lo: f64, hi: f64) -> f64 {
    let pts: Vec<(f64, f64)> = power
        .iter()
        .enumerate()
        .map(|(k, p)| (k as f64 * bin_hz, 10.0 * p.max(DB_FLOOR_POWER).log10()))
        .filter(|(f, _)| *f >= lo && *f <= hi)
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Strongest dB peak in 0-2 kHz minus strongest in 2-5 kHz.
pub fn hammarberg_index(power: &[f64], bin_hz: f64) -> f64 {
    let db = to_db(power);
    let low = band_max_db(&db, bin_hz, 0.0, 2000.0 - bin_hz / 2.0).unwrap_or(0.0);
    let high = band_max_db(&db, bin_hz, 2000.0, 5000.0).unwrap_or(0.0);
    low - high
}

pub fn alpha_ratio(power: &[f64], bin_hz: f64) -> f64 {
    let lo = band_power(power, bin_hz, 50.0, 1000.0).max(DB_FLOOR_POWER);
    let hi = band_power(power, bin_hz, 1000.0, 5000.0 + bin_hz / 2.0).max(DB_FLOOR_POWER);
    10.0 * (lo / hi).log10()
}

/// First-harmonic level minus the strongest peak in 2.3-3.5 kHz, in dB.
pub fn h1_a3(power: &[f64], bin_hz: f64, f0_hz: f64) -> f64 {
    let db = to_db(power);
    let h1 = band_max_db(&db, bin_hz, f0_hz - bin_hz, f0_hz + bin_hz).unwrap_or(0.0);
    let a3 = band_max_db(&db, bin_hz, 2300.0, 3500.0).unwrap_or(0.0);
    h1 - a3
}

fn to_db(power: &[f64]) -> Vec<f64> {
    power
        .iter()
        .map(|p| 10.0 * p.max(DB_FLOOR_POWER).log10())
        .collect()
}

fn spectral_stats(spec: &SpectralFrameSeq, pitch: &PitchContour, loud: &LoudnessContour) -> Vec<f64> {
    let bin = spec.bin_hz;
    let mut h1a3 = Vec::new();
    let mut hamm_v = Vec::new();
    let mut hamm_uv = Vec::new();
    let mut slope_lo = Vec::new();
    let mut slope_mid = Vec::new();
    let mut alpha = Vec::new();
    let loudest = loud.loudness.iter().copied().fold(f64::MIN, f64::max);
    for (t, frame) in spec.frames.iter().enumerate() {
        match pitch.f0_semitone[t] {
            Some(st) => {
                h1a3.push(h1_a3(frame, bin, semitone_to_hz(st)));
                hamm_v.push(hammarberg_index(frame, bin));
                slope_lo.push(spectral_slope(frame, bin, 0.0, 500.0));
                slope_mid.push(spectral_slope(frame, bin, 500.0, 1500.0));
                alpha.push(alpha_ratio(frame, bin));
            }
            None if loud.loudness[t] >= loudest - UV_GATE_DB => {
                hamm_uv.push(hammarberg_index(frame, bin));
            }
            None => {}
        }
    }
    vec![
        stats::mean_or_zero(&h1a3),
        stats::stddev_norm(&h1a3),
        stats::mean_or_zero(&hamm_v),
        stats::stddev_norm(&hamm_v),
        stats::mean_or_zero(&hamm_uv),
        stats::mean_or_zero(&slope_lo),
        stats::stddev_norm(&slope_lo),
        stats::mean_or_zero(&slope_mid),
        stats::stddev_norm(&slope_mid),
        stats::mean_or_zero(&alpha),
        stats::stddev_norm(&alpha),
    ]
}

fn segment_stats(pitch: &PitchContour, duration: f64) -> Vec<f64> {
    let hop = pitch.frame_hop_s;
    let mut voiced = Vec::new();
    let mut unvoiced = Vec::new();
    let mut run = 0usize;
    let mut state: Option<bool> = None;
    for v in pitch.voicing() {
        if state == Some(v) {
            run += 1;
        } else {
            if let Some(s) = state {
                if s { voiced.push(run as f64 * hop) } else { unvoiced.push(run as f64 * hop) }
            }
            state = Some(v);
            run = 1;
        }
    }
    if let Some(s) = state {
        if s { voiced.push(run as f64 * hop) } else { unvoiced.push(run as f64 * hop) }
    }
    vec![
        voiced.len() as f64 / duration,
        stats::mean_or_zero(&voiced),
        stats::std(&voiced),
        stats::mean_or_zero(&unvoiced),
        stats::std(&unvoiced),
    ]
}
