use std::f64::consts::PI;

use super::{FeatureSetId, FeatureVector};
use crate::audio::SpectralFrameSeq;
use crate::error::{Error, Result};

/// Floor applied to band energies before taking logs.
pub const LOG_FLOOR: f64 = 1e-10;

pub const N_MEL: usize = 24;
pub const N_MFCC: usize = 13;
const MEL_LOW_HZ: f64 = 0.0;
const MEL_HIGH_HZ: f64 = 8000.0;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Area-normalised triangular filters on the mel scale.
///
/// Each row holds one weight per spectral bin. Normalising every triangle
/// to unit area makes a white spectrum produce equal band energies.
pub fn mel_filters(n_bands: usize, n_bins: usize, bin_hz: f64) -> Vec<Vec<f64>> {
    let high = MEL_HIGH_HZ.min(bin_hz * (n_bins - 1) as f64);
    let (m_lo, m_hi) = (hz_to_mel(MEL_LOW_HZ), hz_to_mel(high));
    let edges: Vec<f64> = (0..n_bands + 2)
        .map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n_bands + 1) as f64))
        .collect();
    (0..n_bands)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            let mut w: Vec<f64> = (0..n_bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect();
            let area: f64 = w.iter().sum();
            if area > 0.0 {
                w.iter_mut().for_each(|x| *x /= area);
            } else {
                // Band narrower than one bin: take the nearest bin.
                let k = ((mid / bin_hz).round() as usize).min(n_bins - 1);
                w[k] = 1.0;
            }
            w
        })
        .collect()
}

/// Per-frame natural-log mel band energies.
pub fn log_mel_frames(spec: &SpectralFrameSeq, n_bands: usize) -> Result<Vec<Vec<f64>>> {
    if spec.n_frames() == 0 {
        return Err(Error::ClipTooShort("spectrogram has no frames".into()));
    }
    let filters = mel_filters(n_bands, spec.n_bins(), spec.bin_hz);
    Ok(spec
        .frames
        .iter()
        .map(|frame| {
            filters
                .iter()
                .map(|w| {
                    let e: f64 = w.iter().zip(frame).map(|(a, p)| a * p).sum();
                    e.max(LOG_FLOOR).ln()
                })
                .collect()
        })
        .collect())
}

/// Clip-level log-mel filterbank: per-frame log energies averaged over frames.
pub fn mel_filterbank(spec: &SpectralFrameSeq, n_bands: usize) -> Result<FeatureVector> {
    let frames = log_mel_frames(spec, n_bands)?;
    let values = frame_mean(&frames);
    let names = (0..n_bands).map(|i| format!("fbank_{i:02}")).collect();
    FeatureVector::new(FeatureSetId::Filterbank24, "", names, values)
}

/// Orthonormal DCT-II, first `n_out` coefficients.
pub fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            s * x
                .iter()
                .enumerate()
                .map(|(i, v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                .sum::<f64>()
        })
        .collect()
}

/// 13 cepstral coefficients from the 24 log-mel bands, averaged over frames.
pub fn mfcc(spec: &SpectralFrameSeq) -> Result<FeatureVector> {
    let frames = log_mel_frames(spec, N_MEL)?;
    let cep: Vec<Vec<f64>> = frames.iter().map(|f| dct2(f, N_MFCC)).collect();
    let names = (0..N_MFCC).map(|i| format!("mfcc_{i:02}")).collect();
    FeatureVector::new(FeatureSetId::Mfcc13, "", names, frame_mean(&cep))
}

pub(crate) fn frame_mean(frames: &[Vec<f64>]) -> Vec<f64> {
    let d = frames[0].len();
    let mut acc = vec![0.0; d];
    for f in frames {
        for (a, v) in acc.iter_mut().zip(f) {
            *a += v;
        }
    }
    acc.iter().map(|a| a / frames.len() as f64).collect()
}
