//! Normalised-autocorrelation pitch tracking.
//!
//! Each frame's autocorrelation is divided by that of the analysis window so
//! a periodic signal scores close to 1 at its period. Candidates are local
//! maxima in the allowed lag range; the best one maximises
//! `r(lag) - octave_cost * log2(min_f0 * lag)`, which favours the shortest
//! period among near-equal peaks.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{frame_count, ANALYSIS_FRAME_S, ANALYSIS_HOP_S};
use crate::audio::{hann, AudioClip};
use crate::error::{Error, Result};

/// Reference frequency of the semitone scale.
pub const SEMITONE_REF_HZ: f64 = 27.5;

pub fn hz_to_semitone(f: f64) -> f64 {
    12.0 * (f / SEMITONE_REF_HZ).log2()
}

pub fn semitone_to_hz(st: f64) -> f64 {
    SEMITONE_REF_HZ * 2f64.powf(st / 12.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub min_f0_hz: f64,
    pub max_f0_hz: f64,
    /// Minimum normalised autocorrelation peak for a voiced frame.
    pub clarity_threshold: f64,
    pub octave_cost: f64,
    /// Frames quieter than this (dB below the loudest frame) are unvoiced.
    pub silence_db: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            min_f0_hz: 60.0,
            max_f0_hz: 1600.0,
            clarity_threshold: 0.45,
            octave_cost: 0.1,
            silence_db: 40.0,
        }
    }
}

/// Per-frame pitch in semitones above 27.5 Hz; `None` marks unvoiced frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchContour {
    pub f0_semitone: Vec<Option<f64>>,
    /// Autocorrelation peak of the chosen candidate (0 when none).
    pub clarity: Vec<f64>,
    pub frame_hop_s: f64,
}

impl PitchContour {
    pub fn voicing(&self) -> Vec<bool> {
        self.f0_semitone.iter().map(Option::is_some).collect()
    }

    pub fn voiced_fraction(&self) -> f64 {
        if self.f0_semitone.is_empty() {
            return 0.0;
        }
        self.f0_semitone.iter().filter(|v| v.is_some()).count() as f64
            / self.f0_semitone.len() as f64
    }

    pub fn f0_hz(&self, t: usize) -> Option<f64> {
        self.f0_semitone[t].map(semitone_to_hz)
    }
}

pub fn f0_contour(clip: &AudioClip) -> Result<PitchContour> {
    f0_contour_with(clip, &PitchConfig::default())
}

pub fn f0_contour_with(clip: &AudioClip, config: &PitchConfig) -> Result<PitchContour> {
    let sr = clip.sample_rate as f64;
    if clip.duration_s() < 0.064 {
        return Err(Error::ClipTooShort(format!(
            "{}: pitch tracking needs at least 64 ms",
            clip.id
        )));
    }
    let len = (ANALYSIS_FRAME_S * sr).round() as usize;
    let hop = (ANALYSIS_HOP_S * sr).round() as usize;
    let n_frames = frame_count(clip.len(), len, hop);
    let min_lag = (sr / config.max_f0_hz).floor().max(2.0) as usize;
    let max_lag = ((sr / config.min_f0_hz).ceil() as usize).min(len / 2);

    let tracker = Autocorrelator::new(len);
    let rms: Vec<f64> = (0..n_frames)
        .map(|t| {
            let f = &clip.samples[t * hop..t * hop + len];
            (f.iter().map(|x| x * x).sum::<f64>() / len as f64).sqrt()
        })
        .collect();
    let loudest = rms.iter().copied().fold(0.0f64, f64::max);
    let gate = loudest * 10f64.powf(-config.silence_db / 20.0);

    let mut f0 = Vec::with_capacity(n_frames);
    let mut clarity = Vec::with_capacity(n_frames);
    for (t, &level) in rms.iter().enumerate().take(n_frames) {
        if !(level > gate) || loudest == 0.0 {
            f0.push(None);
            clarity.push(0.0);
            continue;
        }
        let r = tracker.normalised(&clip.samples[t * hop..t * hop + len]);
        match best_candidate(&r, min_lag, max_lag, config) {
            Some((lag, peak)) => {
                clarity.push(peak);
                if peak >= config.clarity_threshold {
                    f0.push(Some(hz_to_semitone(sr / lag)));
                } else {
                    f0.push(None);
                }
            }
            None => {
                clarity.push(0.0);
                f0.push(None);
            }
        }
    }
    Ok(PitchContour {
        f0_semitone: f0,
        clarity,
        frame_hop_s: hop as f64 / sr,
    })
}

/// Best (fractional lag, peak height) among local maxima of `r`.
fn best_candidate(r: &[f64], min_lag: usize, max_lag: usize, config: &PitchConfig) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for lag in min_lag.max(1)..max_lag.min(r.len() - 1) {
        if !(r[lag] > r[lag - 1] && r[lag] >= r[lag + 1]) || r[lag] <= 0.0 {
            continue;
        }
        // Parabolic refinement.
        let (a, b, c) = (r[lag - 1], r[lag], r[lag + 1]);
        let denom = a - 2.0 * b + c;
        let (shift, height) = if denom.abs() > 1e-15 {
            let s = 0.5 * (a - c) / denom;
            (s, b - 0.25 * (a - c) * s)
        } else {
            (0.0, b)
        };
        let l = lag as f64 + shift;
        // log2(min_f0 * lag_seconds) up to a constant shared by all candidates.
        let strength = height - config.octave_cost * l.log2();
        if best.is_none_or(|(_, _, s)| strength > s) {
            best = Some((l, height.min(1.0), strength));
        }
    }
    best.map(|(l, h, _)| (l, h))
}

struct Autocorrelator {
    len: usize,
    window: Vec<f64>,
    window_ac: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n_fft: usize,
}

impl Autocorrelator {
    fn new(len: usize) -> Self {
        let n_fft = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_fft);
        let inverse = planner.plan_fft_inverse(n_fft);
        let window = hann(len);
        let mut me = Self {
            len,
            window_ac: Vec::new(),
            window: window.clone(),
            forward,
            inverse,
            n_fft,
        };
        let raw = me.raw(&window, false);
        me.window_ac = raw.iter().map(|v| v / raw[0]).collect();
        me
    }

    fn raw(&self, frame: &[f64], apply_window: bool) -> Vec<f64> {
        let mean = if apply_window {
            frame.iter().sum::<f64>() / frame.len() as f64
        } else {
            0.0
        };
        let mut buf = vec![Complex::new(0.0, 0.0); self.n_fft];
        for (i, x) in frame.iter().enumerate() {
            let w = if apply_window { self.window[i] } else { 1.0 };
            buf[i] = Complex::new((x - mean) * w, 0.0);
        }
        self.forward.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.inverse.process(&mut buf);
        buf[..self.len].iter().map(|c| c.re / self.n_fft as f64).collect()
    }

    /// `r(lag) = (r_x(lag) / r_x(0)) / (r_w(lag) / r_w(0))`, zero when the
    /// frame is flat.
    fn normalised(&self, frame: &[f64]) -> Vec<f64> {
        let r = self.raw(frame, true);
        if !(r[0] > 0.0) {
            return vec![0.0; self.len];
        }
        r.iter()
            .zip(&self.window_ac)
            .map(|(x, w)| if *w > 1e-6 { x / r[0] / w } else { 0.0 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    fn tone(f: f64, secs: f64) -> AudioClip {
        let n = (secs * 16000.0) as usize;
        let s = (0..n).map(|i| 0.5 * (2.0 * PI * f * i as f64 / 16000.0).sin()).collect();
        AudioClip::new("t", 16000, s).unwrap()
    }

    #[test]
    fn semitone_scale() {
        assert!((hz_to_semitone(440.0) - 48.0).abs() < 1e-12);
        assert!((hz_to_semitone(220.0) - 36.0).abs() < 1e-12);
        assert!((semitone_to_hz(48.0) - 440.0).abs() < 1e-9);
    }

    #[test]
    fn pure_tones() {
        for (f, st) in [(440.0, 48.0), (220.0, 36.0)] {
            let p = f0_contour(&tone(f, 0.5)).unwrap();
            assert!(p.voiced_fraction() > 0.95);
            for v in p.f0_semitone.iter().flatten() {
                assert!((v - st).abs() < 0.1, "{f} Hz -> {v}");
            }
        }
    }

    #[test]
    fn harmonic_complex_tracks_fundamental() {
        let f0 = 310.0;
        let s = (0..8000)
            .map(|i| {
                let t = i as f64 / 16000.0;
                (1..12).map(|h| (2.0 * PI * f0 * h as f64 * t).sin() / h as f64).sum::<f64>() * 0.1
            })
            .collect();
        let p = f0_contour(&AudioClip::new("h", 16000, s).unwrap()).unwrap();
        for v in p.f0_semitone.iter().flatten() {
            assert!((v - hz_to_semitone(f0)).abs() < 0.1);
        }
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        for seed in 0..10 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = Normal::new(0.0, 0.2).unwrap();
            let s = (0..16000).map(|_| d.sample(&mut rng)).collect();
            let p = f0_contour(&AudioClip::new("n", 16000, s).unwrap()).unwrap();
            assert!(p.voiced_fraction() < 0.2, "seed {seed}: {}", p.voiced_fraction());
        }
    }

    #[test]
    fn silence_unvoiced_and_short_clip_rejected() {
        let p = f0_contour(&AudioClip::new("z", 16000, vec![0.0; 4000]).unwrap()).unwrap();
        assert!(p.f0_semitone.iter().all(Option::is_none));
        assert!(f0_contour(&AudioClip::new("z", 16000, vec![0.0; 1000]).unwrap()).is_err());
    }
}
