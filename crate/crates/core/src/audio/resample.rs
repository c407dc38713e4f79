use std::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

/// Zero crossings of the low-pass kernel on either side of its centre,
/// measured at the lower of the two rates (64 taps in total).
const HALF_TAPS: usize = 32;

/// Band-limited resampling with a Blackman-windowed sinc kernel.
///
/// Output length is `round(n * target / source)`; equal rates return an
/// exact copy.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let src = clip.sample_rate as f64;
    let dst = target_rate as f64;
    let ratio = dst / src;
    // Cutoff as a fraction of the input Nyquist frequency.
    let cutoff = ratio.min(1.0);
    let half_width = HALF_TAPS as f64 / cutoff;
    let n_out = (clip.len() as f64 * ratio).round() as usize;
    let x = &clip.samples;

    let out: Vec<f64> = (0..n_out)
        .map(|n| {
            let centre = n as f64 / ratio;
            let lo = (centre - half_width).ceil().max(0.0) as usize;
            let hi = ((centre + half_width).floor() as usize).min(x.len().saturating_sub(1));
            let mut acc = 0.0;
            for (k, &xk) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let u = centre - k as f64;
                acc += xk * kernel(u, cutoff, half_width);
            }
            acc
        })
        .collect();

    Ok(AudioClip {
        id: clip.id.clone(),
        sample_rate: target_rate,
        samples: out,
    })
}

fn kernel(u: f64, cutoff: f64, half_width: f64) -> f64 {
    if u.abs() >= half_width {
        return 0.0;
    }
    let arg = PI * cutoff * u;
    let sinc = if arg.abs() < 1e-12 { 1.0 } else { arg.sin() / arg };
    // Blackman window over [-half_width, half_width].
    let t = (u + half_width) / (2.0 * half_width);
    let w = 0.42 - 0.5 * (2.0 * PI * t).cos() + 0.08 * (4.0 * PI * t).cos();
    cutoff * sinc * w
}
