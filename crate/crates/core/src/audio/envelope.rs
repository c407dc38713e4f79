use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{Error, Result};

/// A non-negative amplitude envelope sampled at `rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSeq {
    pub values: Vec<f64>,
    pub rate_hz: f64,
}

impl EnvelopeSeq {
    /// Centred moving average over `width` samples (odd widths keep alignment).
    pub fn smoothed(&self, width: usize) -> EnvelopeSeq {
        if width <= 1 || self.values.is_empty() {
            return self.clone();
        }
        let half = width / 2;
        let n = self.values.len();
        let values = (0..n)
            .map(|i| {
                let a = i.saturating_sub(half);
                let b = (i + half + 1).min(n);
                self.values[a..b].iter().sum::<f64>() / (b - a) as f64
            })
            .collect();
        EnvelopeSeq {
            values,
            rate_hz: self.rate_hz,
        }
    }

    /// Time in seconds of the centre of sample `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 / self.rate_hz
    }
}

/// RMS over contiguous windows of `sample_rate / rate_hz` samples.
///
/// A trailing partial window is kept so the envelope covers the whole clip.
pub fn amplitude_envelope(clip: &AudioClip, rate_hz: f64) -> Result<EnvelopeSeq> {
    if !(rate_hz > 0.0) || rate_hz > clip.sample_rate as f64 {
        return Err(Error::InvalidArgument(format!(
            "envelope rate {rate_hz} Hz must be in (0, {}]",
            clip.sample_rate
        )));
    }
    let win = ((clip.sample_rate as f64 / rate_hz).round() as usize).max(1);
    let values = clip
        .samples
        .chunks(win)
        .map(|w| (w.iter().map(|s| s * s).sum::<f64>() / w.len() as f64).sqrt())
        .collect();
    Ok(EnvelopeSeq {
        values,
        rate_hz: clip.sample_rate as f64 / win as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn silence_gives_zero_envelope() {
        let c = AudioClip::new("s", 16000, vec![0.0; 1600]).unwrap();
        let e = amplitude_envelope(&c, 100.0).unwrap();
        assert_eq!(e.values.len(), 10);
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_rms() {
        let a = 0.6;
        let s = (0..16000)
            .map(|i| a * (2.0 * PI * 400.0 * i as f64 / 16000.0).sin())
            .collect();
        let e = amplitude_envelope(&AudioClip::new("t", 16000, s).unwrap(), 100.0).unwrap();
        for v in &e.values[1..] {
            assert!((v - a / 2f64.sqrt()).abs() < 1e-3);
        }
    }

    #[test]
    fn gated_tone_alternates_at_gate_rate() {
        // 4 Hz on/off gate: 125 ms on, 125 ms off, over 2 s.
        let s: Vec<f64> = (0..32000)
            .map(|i| {
                let t = i as f64 / 16000.0;
                let on = ((t * 8.0).floor() as i64) % 2 == 0;
                if on {
                    (2.0 * PI * 500.0 * t).sin()
                } else {
                    0.0
                }
            })
            .collect();
        let e = amplitude_envelope(&AudioClip::new("g", 16000, s).unwrap(), 200.0).unwrap();
        let high: Vec<bool> = e.values.iter().map(|&v| v > 0.35).collect();
        let transitions = high.windows(2).filter(|w| w[0] != w[1]).count();
        // 8 on-segments over 2 s: 15 internal transitions.
        assert_eq!(transitions, 15);
    }

    #[test]
    fn scales_linearly() {
        let s: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let c = AudioClip::new("r", 16000, s).unwrap();
        let e1 = amplitude_envelope(&c, 50.0).unwrap();
        let e2 = amplitude_envelope(&c.scaled(3.0), 50.0).unwrap();
        for (a, b) in e1.values.iter().zip(&e2.values) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_above_sample_rate_rejected() {
        let c = AudioClip::new("r", 100, vec![0.0; 10]).unwrap();
        assert!(amplitude_envelope(&c, 200.0).is_err());
        assert!(amplitude_envelope(&c, 0.0).is_err());
    }
}
