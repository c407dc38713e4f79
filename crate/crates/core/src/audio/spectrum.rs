use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{Error, Result};

/// Analysis window applied to each frame before the DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => hann(len),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// One-sided power spectra of successive frames.
///
/// `frames[t][k]` is `|X_t(k)|^2` for `k = 0..=n_fft/2`, where `X_t` is the
/// DFT of the windowed frame (no zero padding, `n_fft` = frame length).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFrameSeq {
    pub frames: Vec<Vec<f64>>,
    pub frame_len_s: f64,
    pub frame_hop_s: f64,
    pub bin_hz: f64,
    pub n_fft: usize,
    pub sample_rate: u32,
}

impl SpectralFrameSeq {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    /// Time-domain energy of the windowed frame recovered from its one-sided
    /// spectrum via Parseval's relation.
    pub fn frame_energy(&self, t: usize) -> f64 {
        let f = &self.frames[t];
        let n = self.n_fft;
        let mut e = f[0];
        for (k, p) in f.iter().enumerate().skip(1) {
            let mirrored = n % 2 == 0 && k == n / 2;
            e += if mirrored { *p } else { 2.0 * p };
        }
        e / n as f64
    }
}

/// Short-time power spectrum.
///
/// Frame count is `floor((N - L) / H) + 1` with `L`, `H` the frame length and
/// hop in samples.
pub fn power_spectrogram(
    clip: &AudioClip,
    frame_len_s: f64,
    frame_hop_s: f64,
    window: Window,
) -> Result<SpectralFrameSeq> {
    let sr = clip.sample_rate as f64;
    let len = (frame_len_s * sr).round() as usize;
    let hop = (frame_hop_s * sr).round() as usize;
    if len < 2 {
        return Err(Error::InvalidArgument(format!(
            "frame length of {len} samples is below 2"
        )));
    }
    if hop == 0 || hop > len {
        return Err(Error::InvalidArgument(format!(
            "hop of {hop} samples must be in 1..={len}"
        )));
    }
    if clip.len() < len {
        return Err(Error::ClipTooShort(format!(
            "{} has {} samples, one frame needs {len}",
            clip.id,
            clip.len()
        )));
    }
    let n_frames = (clip.len() - len) / hop + 1;
    let win = window.coefficients(len);
    let fft = FftPlanner::new().plan_fft_forward(len);
    let frames = (0..n_frames)
        .map(|t| {
            let frame = &clip.samples[t * hop..t * hop + len];
            windowed_power(&fft, frame, &win)
        })
        .collect();
    Ok(SpectralFrameSeq {
        frames,
        frame_len_s: len as f64 / sr,
        frame_hop_s: hop as f64 / sr,
        bin_hz: sr / len as f64,
        n_fft: len,
        sample_rate: clip.sample_rate,
    })
}

/// One-sided power spectrum of a single windowed frame.
pub fn power_spectrum(frame: &[f64], window: &[f64]) -> Vec<f64> {
    let fft = FftPlanner::new().plan_fft_forward(frame.len());
    windowed_power(&fft, frame, window)
}

fn windowed_power(fft: &Arc<dyn Fft<f64>>, frame: &[f64], window: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = frame
        .iter()
        .zip(window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    fft.process(&mut buf);
    buf[..frame.len() / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
}
