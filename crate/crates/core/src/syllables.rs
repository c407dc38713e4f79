//! Syllable-like units from a driven damped oscillator.
//!
//! The clip's RMS envelope is log-compressed into a drive signal for
//! `x'' + 2 zeta w x' + w^2 x = drive(t)`. Peaks of `x` are nuclei; their
//! count over the clip duration is the speaking (or barking) rate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::{amplitude_envelope, AudioClip, EnvelopeSeq};
use crate::error::{Error, Result};
use crate::stats;

/// Histogram bins of the speed report, in units per second.
pub const HIST_BIN_WIDTH: f64 = 0.5;
pub const HIST_BINS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscillatorConfig {
    pub natural_freq_hz: f64,
    pub damping_ratio: f64,
    pub envelope_rate_hz: f64,
    pub min_peak_gap_s: f64,
    /// Peaks below this fraction of the largest oscillator value are dropped.
    pub peak_floor_rel: f64,
    /// Peaks must also rise this fraction of the largest value above the
    /// higher of the troughs separating them from taller peaks. Suppresses
    /// the ringing an abrupt offset leaves behind.
    pub min_prominence_rel: f64,
    /// Drive is `ln(1 + compression * env / max(env))`.
    pub compression: f64,
}

impl Default for OscillatorConfig {
    fn default() -> Self {
        Self {
            natural_freq_hz: 5.0,
            damping_ratio: 0.3,
            envelope_rate_hz: 100.0,
            min_peak_gap_s: 0.08,
            peak_floor_rel: 0.12,
            min_prominence_rel: 0.2,
            compression: 100.0,
        }
    }
}

impl OscillatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.natural_freq_hz > 0.0) {
            return bad(format!("natural frequency must be positive, got {}", self.natural_freq_hz));
        }
        if !(self.damping_ratio > 0.0 && self.damping_ratio < 1.0) {
            return bad(format!("damping ratio must be in (0, 1), got {}", self.damping_ratio));
        }
        if !(self.min_peak_gap_s > 0.0) {
            return bad(format!("minimum peak gap must be positive, got {}", self.min_peak_gap_s));
        }
        if !(self.peak_floor_rel > 0.0 && self.peak_floor_rel < 1.0) {
            return bad(format!("peak floor must be in (0, 1), got {}", self.peak_floor_rel));
        }
        if !(0.0..1.0).contains(&self.min_prominence_rel) {
            return bad(format!("prominence must be in [0, 1), got {}", self.min_prominence_rel));
        }
        if !(self.compression > 0.0) {
            return bad(format!("compression must be positive, got {}", self.compression));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllableUnits {
    pub nuclei_times_s: Vec<f64>,
    pub clip_duration_s: f64,
    pub rate_per_s: f64,
}

/// Log-compressed envelope, normalised by its peak. Silence gives zeros.
pub fn drive(env: &EnvelopeSeq, compression: f64) -> Vec<f64> {
    let peak = env.values.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return vec![0.0; env.values.len()];
    }
    env.values.iter().map(|v| (compression * v / peak).ln_1p()).collect()
}

/// Position of the oscillator sampled at `rate_hz`, with the drive held
/// constant over each sample period. Each step applies the exact
/// zero-order-hold transition, so a step input reproduces the analytic
/// response. The oscillator starts at rest at the equilibrium of the first
/// drive sample.
pub fn integrate_oscillator(drive: &[f64], rate_hz: f64, natural_freq_hz: f64, damping_ratio: f64) -> Result<Vec<f64>> {
    if !(damping_ratio > 0.0 && damping_ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping ratio must be in (0, 1), got {damping_ratio}"
        )));
    }
    if !(natural_freq_hz > 0.0) || !(rate_hz > 0.0) {
        return Err(Error::InvalidArgument("frequencies must be positive".into()));
    }
    let w = 2.0 * std::f64::consts::PI * natural_freq_hz;
    let dt = 1.0 / rate_hz;
    let sigma = damping_ratio * w;
    let wd = w * (1.0 - damping_ratio * damping_ratio).sqrt();
    let (e, c, s) = ((-sigma * dt).exp(), (wd * dt).cos(), (wd * dt).sin());
    let a00 = e * (c + sigma / wd * s);
    let a01 = e * s / wd;
    let a10 = -w * w / wd * e * s;
    let a11 = e * (c - sigma / wd * s);
    let b0 = (1.0 - a11 - 2.0 * sigma * a01) / (w * w);
    let b1 = a01;
    let mut x = drive.first().map_or(0.0, |d| d / (w * w));
    let mut v = 0.0;
    let mut out = Vec::with_capacity(drive.len());
    for &u in drive {
        out.push(x);
        (x, v) = (a00 * x + a01 * v + b0 * u, a10 * x + a11 * v + b1 * u);
    }
    Ok(out)
}

pub fn oscillate(env: &EnvelopeSeq, config: &OscillatorConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if env.rate_hz < 4.0 * config.natural_freq_hz {
        return Err(Error::InvalidArgument(format!(
            "envelope rate {} Hz is below 4x the oscillator frequency",
            env.rate_hz
        )));
    }
    integrate_oscillator(&drive(env, config.compression), env.rate_hz, config.natural_freq_hz, config.damping_ratio)
}

/// Height of `x[i]` above the higher of its two bases. A side that runs to
/// the edge of the sequence without meeting a taller point has no base;
/// if neither side has one, the lowest point is used.
fn prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left = None;
    let mut lo = h;
    for j in (0..i).rev() {
        if x[j] > h {
            left = Some(lo);
            break;
        }
        lo = lo.min(x[j]);
    }
    let left_edge = lo;
    let mut right = None;
    let mut lo = h;
    for &v in &x[i + 1..] {
        if v > h {
            right = Some(lo);
            break;
        }
        lo = lo.min(v);
    }
    let base = match (left, right) {
        (Some(a), Some(b)) => a.max(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => left_edge.min(lo),
    };
    h - base
}

/// Picks nuclei from an oscillator trace sampled at `rate_hz`.
///
/// Candidates are strict local maxima passing the floor and prominence
/// tests, at least `min_peak_gap_s` after the clip start. Taller
/// candidates are kept first; a candidate closer than the gap to a kept
/// one is dropped. This bounds the rate by `1 / min_peak_gap_s`.
pub fn pick_nuclei(osc: &[f64], rate_hz: f64, duration_s: f64, config: &OscillatorConfig) -> SyllableUnits {
    let max = osc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut times = Vec::new();
    if max > 0.0 && osc.len() >= 3 {
        let mut cand: Vec<usize> = (1..osc.len() - 1)
            .filter(|&i| osc[i] > osc[i - 1] && osc[i] >= osc[i + 1])
            .filter(|&i| osc[i] >= config.peak_floor_rel * max)
            .filter(|&i| (i as f64 + 0.5) / rate_hz >= config.min_peak_gap_s)
            .filter(|&i| prominence(osc, i) >= config.min_prominence_rel * max)
            .collect();
        cand.sort_by(|&a, &b| osc[b].total_cmp(&osc[a]).then(a.cmp(&b)));
        let gap = config.min_peak_gap_s - 1e-9;
        let mut kept: Vec<usize> = Vec::new();
        for i in cand {
            if kept.iter().all(|&k| (i.abs_diff(k) as f64) / rate_hz >= gap) {
                kept.push(i);
            }
        }
        kept.sort_unstable();
        times = kept
            .into_iter()
            .map(|i| ((i as f64 + 0.5) / rate_hz).min(duration_s))
            .collect();
    }
    let rate_per_s = if duration_s > 0.0 { times.len() as f64 / duration_s } else { 0.0 };
    SyllableUnits {
        nuclei_times_s: times,
        clip_duration_s: duration_s,
        rate_per_s,
    }
}

pub fn syllable_units(clip: &AudioClip, config: &OscillatorConfig) -> Result<SyllableUnits> {
    if clip.is_empty() {
        return Err(Error::InvalidArgument(format!("clip {} is empty", clip.id)));
    }
    let env = amplitude_envelope(clip, config.envelope_rate_hz)?;
    let osc = oscillate(&env, config)?;
    Ok(pick_nuclei(&osc, env.rate_hz, clip.duration_s(), config))
}

/// Rate of one clip, from the oscillator or from an imported syllable count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRate {
    pub clip_id: String,
    pub group: String,
    pub rate_per_s: f64,
    pub from_count: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedRow {
    pub group: String,
    pub n: usize,
    /// `None` for an empty group.
    pub mean_rate: Option<f64>,
    pub median_rate: Option<f64>,
    pub stddev: Option<f64>,
    /// Counts in bins of `HIST_BIN_WIDTH`; the last bin also takes larger rates.
    pub histogram: Vec<u64>,
}

/// Per-group statistics, one row per name in `groups` (in that order),
/// then any other group seen in `rates`.
pub fn speed_report(rates: &[ClipRate], groups: &[String]) -> Vec<SpeedRow> {
    let mut by_group: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in rates {
        by_group.entry(r.group.as_str()).or_default().push(r.rate_per_s);
    }
    let mut order: Vec<String> = groups.to_vec();
    for g in by_group.keys() {
        if !order.iter().any(|o| o == g) {
            order.push(g.to_string());
        }
    }
    order
        .into_iter()
        .map(|g| {
            let v = by_group.get(g.as_str()).cloned().unwrap_or_default();
            let mut histogram = vec![0u64; HIST_BINS];
            for r in &v {
                histogram[((r / HIST_BIN_WIDTH) as usize).min(HIST_BINS - 1)] += 1;
            }
            let some = |x: f64| (!v.is_empty()).then_some(x);
            SpeedRow {
                n: v.len(),
                mean_rate: some(stats::mean_or_zero(&v)),
                median_rate: some(stats::median(&v)),
                stddev: some(stats::std(&v)),
                histogram,
                group: g,
            }
        })
        .collect()
}

/// `group,n,mean_rate,median_rate,stddev`; empty groups leave the
/// statistics blank.
pub fn write_speed_csv(rows: &[SpeedRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["group", "n", "mean_rate", "median_rate", "stddev"])?;
    let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([r.group.clone(), r.n.to_string(), f(r.mean_rate), f(r.median_rate), f(r.stddev)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const FS: u32 = 16000;

    fn tone(dur: f64) -> Vec<f64> {
        (0..(dur * FS as f64) as usize)
            .map(|i| (2.0 * PI * 300.0 * i as f64 / FS as f64).sin())
            .collect()
    }

    fn am(dur: f64, rate: f64) -> AudioClip {
        let s = tone(dur)
            .into_iter()
            .enumerate()
            .map(|(i, v)| v * (0.5 - 0.5 * (2.0 * PI * rate * i as f64 / FS as f64).cos()))
            .collect();
        AudioClip::new("am", FS, s).unwrap()
    }

    fn burst(hann: bool) -> AudioClip {
        let mut s = vec![0.0; (1.2 * FS as f64) as usize];
        let b = tone(0.3);
        let n = b.len();
        for (i, v) in b.into_iter().enumerate() {
            let w = if hann { 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos() } else { 1.0 };
            s[(0.4 * FS as f64) as usize + i] = v * w;
        }
        AudioClip::new("b", FS, s).unwrap()
    }

    #[test]
    fn zero_drive_stays_at_rest() {
        let x = integrate_oscillator(&[0.0; 300], 100.0, 5.0, 0.3).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert!(integrate_oscillator(&[0.0; 3], 100.0, 5.0, 0.0).is_err());
        assert!(integrate_oscillator(&[0.0; 3], 100.0, 5.0, -0.1).is_err());
    }

    #[test]
    fn step_matches_second_order_solution() {
        let (f, zeta, fs, step, delay) = (5.0, 0.3, 100.0, 2.5, 20);
        let w: f64 = 2.0 * PI * f;
        let sigma = zeta * w;
        let wd = w * (1.0 - zeta * zeta).sqrt();
        let mut d = vec![0.0; 300];
        d[delay..].iter_mut().for_each(|v| *v = step);
        let x = integrate_oscillator(&d, fs, f, zeta).unwrap();
        let fin = step / (w * w);
        for (i, &xi) in x.iter().enumerate() {
            let t = i as f64 / fs - delay as f64 / fs;
            let want = if t <= 0.0 {
                0.0
            } else {
                fin * (1.0 - (-sigma * t).exp() * ((wd * t).cos() + sigma / wd * (wd * t).sin()))
            };
            assert!((xi - want).abs() <= 1e-3 * fin, "i={i}: {xi} vs {want}");
        }
        // Five time constants after the step the response has settled.
        let i5 = delay + (5.0 / sigma * fs).ceil() as usize;
        assert!(x[i5..].iter().all(|v| (v - fin).abs() < 0.01 * fin));
    }

    #[test]
    fn resonance_beats_off_resonance() {
        let amp = |f: f64| {
            let d: Vec<f64> = (0..1000).map(|i| (2.0 * PI * f * i as f64 / 100.0).sin()).collect();
            let x = integrate_oscillator(&d, 100.0, 5.0, 0.3).unwrap();
            x[500..].iter().fold(0.0f64, |m, v| m.max(v.abs()))
        };
        assert!(amp(5.0) > amp(20.0));
    }

    #[test]
    fn silence_has_no_nuclei() {
        let u = syllable_units(&AudioClip::new("s", FS, vec![0.0; 16000]).unwrap(), &OscillatorConfig::default()).unwrap();
        assert!(u.nuclei_times_s.is_empty());
        assert_eq!(u.rate_per_s, 0.0);
    }

    #[test]
    fn am_rates_recovered() {
        let cfg = OscillatorConfig::default();
        let u = syllable_units(&am(2.0, 4.0), &cfg).unwrap();
        assert!((7..=9).contains(&u.nuclei_times_s.len()), "{:?}", u.nuclei_times_s);
        assert!((u.rate_per_s - 4.0).abs() <= 0.5);
        for r in [3.0, 6.0] {
            let u = syllable_units(&am(4.0, r), &cfg).unwrap();
            assert!((u.rate_per_s - r).abs() <= 0.5, "{r}: {}", u.rate_per_s);
        }
    }

    #[test]
    fn single_burst_single_nucleus() {
        for hann in [false, true] {
            let u = syllable_units(&burst(hann), &OscillatorConfig::default()).unwrap();
            assert_eq!(u.nuclei_times_s.len(), 1, "hann={hann}: {:?}", u.nuclei_times_s);
            let t = u.nuclei_times_s[0];
            assert!((0.4..0.75).contains(&t), "{t}");
        }
    }

    #[test]
    fn shift_moves_nuclei() {
        let cfg = OscillatorConfig::default();
        let base = burst(false);
        let a = syllable_units(&base, &cfg).unwrap();
        let mut s = vec![0.0; 4000];
        s.extend_from_slice(&base.samples);
        let b = syllable_units(&AudioClip::new("b", FS, s).unwrap(), &cfg).unwrap();
        assert_eq!(a.nuclei_times_s.len(), b.nuclei_times_s.len());
        for (x, y) in a.nuclei_times_s.iter().zip(&b.nuclei_times_s) {
            assert!((y - x - 0.25).abs() <= 0.01 + 1e-9);
        }
    }

    #[test]
    fn speed_groups() {
        let cfg = OscillatorConfig::default();
        let mut rates = Vec::new();
        for (g, r) in [("slow", 3.0), ("fast", 5.0)] {
            for k in 0..4 {
                let u = syllable_units(&am(3.0 + 0.5 * k as f64, r), &cfg).unwrap();
                rates.push(ClipRate {
                    clip_id: format!("{g}{k}"),
                    group: g.into(),
                    rate_per_s: u.rate_per_s,
                    from_count: false,
                });
            }
        }
        rates.push(ClipRate {
            clip_id: "one".into(),
            group: "single".into(),
            rate_per_s: 2.25,
            from_count: true,
        });
        let rows = speed_report(&rates, &["slow".into(), "fast".into(), "none".into()]);
        let names: Vec<&str> = rows.iter().map(|r| r.group.as_str()).collect();
        assert_eq!(names, ["slow", "fast", "none", "single"]);
        assert!((rows[0].mean_rate.unwrap() - 3.0).abs() <= 0.5);
        assert!((rows[1].mean_rate.unwrap() - 5.0).abs() <= 0.5);
        assert!(rows[0].mean_rate < rows[1].mean_rate);
        assert_eq!(rows[2].n, 0);
        assert_eq!(rows[2].mean_rate, None);
        assert_eq!(rows[3].mean_rate, Some(2.25));
        assert_eq!(rows[3].histogram[4], 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn linear_before_compression(
            a in prop::collection::vec(-5.0f64..5.0, 50..200),
            b_seed in prop::collection::vec(-5.0f64..5.0, 200),
        ) {
            let b = &b_seed[..a.len()];
            let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            let xa = integrate_oscillator(&a, 100.0, 5.0, 0.3).unwrap();
            let xb = integrate_oscillator(b, 100.0, 5.0, 0.3).unwrap();
            let xab = integrate_oscillator(&ab, 100.0, 5.0, 0.3).unwrap();
            for i in 0..a.len() {
                prop_assert!((xab[i] - xa[i] - xb[i]).abs() < 1e-9);
            }
        }

        #[test]
        fn scale_and_rate_bounds(
            env in prop::collection::vec(0.0f64..1.0, 20..400),
            k in 0.001f64..1000.0,
        ) {
            let cfg = OscillatorConfig::default();
            let e = EnvelopeSeq { values: env.clone(), rate_hz: 100.0 };
            let es = EnvelopeSeq { values: env.iter().map(|v| v * k).collect(), rate_hz: 100.0 };
            let d = e.duration_s();
            let u = pick_nuclei(&oscillate(&e, &cfg).unwrap(), 100.0, d, &cfg);
            let us = pick_nuclei(&oscillate(&es, &cfg).unwrap(), 100.0, d, &cfg);
            prop_assert_eq!(u.nuclei_times_s.len(), us.nuclei_times_s.len());
            prop_assert!(u.rate_per_s <= 1.0 / cfg.min_peak_gap_s + 1e-9);
            prop_assert!(u.nuclei_times_s.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(u.nuclei_times_s.iter().all(|&t| (0.0..=d).contains(&t)));
        }
    }
}
