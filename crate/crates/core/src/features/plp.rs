//! Perceptual linear prediction.
//!
//! Per frame: critical-band integration on the Bark scale, equal-loudness
//! weighting, cube-root intensity compression, an all-pole model fitted by
//! the autocorrelation method, and conversion to cepstra.

use std::f64::consts::PI;

use super::{FeatureSetId, FeatureVector};
use crate::audio::SpectralFrameSeq;
use crate::error::{Error, Result};

pub const PLP_ORDER: usize = 12;

pub fn hz_to_bark(f: f64) -> f64 {
    6.0 * (f / 600.0).asinh()
}

pub fn bark_to_hz(z: f64) -> f64 {
    600.0 * (z / 6.0).sinh()
}

/// Critical-band filters spaced evenly in Bark from 0 to Nyquist.
#[derive(Debug, Clone)]
pub struct BarkBands {
    pub centres_bark: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    equal_loudness: Vec<f64>,
}

impl BarkBands {
    pub fn new(n_bins: usize, bin_hz: f64) -> Self {
        let nyq_bark = hz_to_bark(bin_hz * (n_bins - 1) as f64);
        let n_bands = nyq_bark.ceil() as usize + 1;
        let step = nyq_bark / (n_bands - 1) as f64;
        let bin_bark: Vec<f64> = (0..n_bins).map(|k| hz_to_bark(k as f64 * bin_hz)).collect();
        let centres_bark: Vec<f64> = (0..n_bands).map(|i| i as f64 * step).collect();
        let weights = centres_bark
            .iter()
            .map(|&c| bin_bark.iter().map(|&z| masking_curve(z - c)).collect())
            .collect();
        let equal_loudness = centres_bark
            .iter()
            .map(|&z| equal_loudness(bark_to_hz(z)))
            .collect();
        Self {
            centres_bark,
            weights,
            equal_loudness,
        }
    }

    pub fn len(&self) -> usize {
        self.centres_bark.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres_bark.is_empty()
    }

    /// Loudness-weighted, cube-root compressed auditory spectrum.
    pub fn auditory_spectrum(&self, power: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.equal_loudness)
            .map(|(w, e)| {
                let band: f64 = w.iter().zip(power).map(|(x, p)| x * p).sum();
                (e * band).cbrt()
            })
            .collect();
        // The edge bands fall outside the loudness curve's useful range.
        let n = a.len();
        if n >= 3 {
            a[0] = a[1];
            a[n - 1] = a[n - 2];
        }
        a
    }
}

/// Critical-band masking curve as a function of Bark distance from centre.
fn masking_curve(dz: f64) -> f64 {
    if !(-1.3..=2.5).contains(&dz) {
        0.0
    } else if dz <= -0.5 {
        10f64.powf(2.5 * (dz + 0.5))
    } else if dz < 0.5 {
        1.0
    } else {
        10f64.powf(-(dz - 0.5))
    }
}

/// Equal-loudness weighting approximating human sensitivity at ~40 dB.
pub fn equal_loudness(f_hz: f64) -> f64 {
    let w2 = (2.0 * PI * f_hz).powi(2);
    (w2 + 56.8e6) * w2 * w2 / ((w2 + 6.3e6).powi(2) * (w2 + 0.38e9))
}

/// All-pole model of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    /// `a[0] = 1`; the model is `gain / |A(e^{jw})|^2` with `A(z) = sum a_i z^-i`.
    pub lpc: Vec<f64>,
    pub reflection: Vec<f64>,
    pub gain: f64,
}

impl ArModel {
    /// Model power at normalised frequency `theta` in `[0, pi]`.
    pub fn power_at(&self, theta: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (i, a) in self.lpc.iter().enumerate() {
            re += a * (theta * i as f64).cos();
            im -= a * (theta * i as f64).sin();
        }
        self.gain / (re * re + im * im)
    }

    /// Cepstral coefficients `c_0..c_{n-1}` of `sqrt(gain) / A(z)`.
    pub fn cepstra(&self, n: usize) -> Vec<f64> {
        let p = self.lpc.len() - 1;
        let a = &self.lpc;
        let mut c = vec![0.0; n];
        c[0] = 0.5 * self.gain.ln();
        for m in 1..n {
            let mut acc = if m <= p { -a[m] } else { 0.0 };
            for k in m.saturating_sub(p).max(1)..m {
                acc -= (k as f64 / m as f64) * c[k] * a[m - k];
            }
            c[m] = acc;
        }
        c
    }
}

/// Autocorrelation lags `0..=order` of a power spectrum sampled uniformly
/// on `[0, pi]` (inverse DFT of its even extension).
pub fn autocorrelation_from_spectrum(spec: &[f64], order: usize) -> Vec<f64> {
    let n = spec.len();
    let m = (n - 1) as f64;
    (0..=order)
        .map(|lag| {
            let mut acc = 0.0;
            for (k, &s) in spec.iter().enumerate() {
                let w = if k == 0 || k == n - 1 { 1.0 } else { 2.0 };
                acc += w * s * (PI * lag as f64 * k as f64 / m).cos();
            }
            acc / (2.0 * m)
        })
        .collect()
}

/// Levinson-Durbin recursion. `None` when the autocorrelation is singular.
pub fn levinson_durbin(r: &[f64], order: usize) -> Option<ArModel> {
    if !(r[0] > 0.0) || !r[0].is_finite() {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut reflection = Vec::with_capacity(order);
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc += a[j] * r[i - j];
        }
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            return None;
        }
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        reflection.push(k);
        if !(err > 0.0) {
            return None;
        }
    }
    Some(ArModel {
        lpc: a,
        reflection,
        gain: err,
    })
}

/// All-pole model of one frame's auditory spectrum.
pub fn plp_frame(power: &[f64], bands: &BarkBands, order: usize) -> Option<ArModel> {
    let aud = bands.auditory_spectrum(power);
    let r = autocorrelation_from_spectrum(&aud, order);
    levinson_durbin(&r, order)
}

/// Frame-averaged PLP cepstra `c_0..c_order`.
pub fn plp(spec: &SpectralFrameSeq, order: usize) -> Result<FeatureVector> {
    let bands = BarkBands::new(spec.n_bins(), spec.bin_hz);
    if order + 1 > bands.len() {
        return Err(Error::InvalidArgument(format!(
            "order {order} needs more than {} bands",
            bands.len()
        )));
    }
    let cep: Vec<Vec<f64>> = spec
        .frames
        .iter()
        .filter_map(|f| plp_frame(f, &bands, order))
        .map(|m| m.cepstra(order + 1))
        .collect();
    if cep.is_empty() {
        return Err(Error::Degenerate(
            "every frame has a singular autocorrelation".into(),
        ));
    }
    let names = (0..=order).map(|i| format!("plp_{i:02}")).collect();
    FeatureVector::new(FeatureSetId::Plp13, "", names, super::mel::frame_mean(&cep))
}
