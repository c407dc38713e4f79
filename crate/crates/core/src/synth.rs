//! Synthetic corpus with planted ground truth.
//!
//! Each dog clip is one or more "sentences" of amplitude-modulated words
//! over silence, plus white noise at a set SNR. A word is a band-limited
//! pulse train at the clip's F0 through a damped resonator, modulated at
//! the clip's AM rate for a whole number of cycles, starting and ending in
//! a modulation trough. Every dog clip has its own video; each video also
//! gets host-speech clips whose F0 correlates with the dog's F0 at exactly
//! the planted coefficient.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, AudioClip, WavEncoding};
use crate::corpus::manifest::{
    write_activity_file, write_manifest, ActivityRef, ManifestContext, ManifestEntry, ManifestHeader,
};
use crate::corpus::PipelineConfig;
use crate::error::{Error, Result};
use crate::pairing::{ClipKind, LangEnv, Scene, ACTIVITY_DIM};
use crate::rng;
use crate::segment::{write_annotations, EventSpan, MUSIC, SPEECH};

pub const SYNTH_RATE: u32 = 16_000;

pub const LOCATIONS: [&str; 8] = ["home", "park", "street", "yard", "beach", "car", "shop", "field"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthGroup {
    pub lang_env: LangEnv,
    pub f0_hz: f64,
    pub am_rate_hz: f64,
    /// Peak level of the clean vocal signal in dBFS.
    pub loudness_db: f64,
    pub host_am_rate_hz: f64,
}

/// Ranges are inclusive `[lo, hi]` and drawn uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BurstPattern {
    pub sentences_per_clip: [usize; 2],
    pub words_per_sentence: [usize; 2],
    /// Target word length; the actual length is the nearest whole number
    /// of modulation cycles.
    pub word_duration_s: f64,
    pub word_gap_s: [f64; 2],
    pub sentence_gap_s: [f64; 2],
    pub edge_silence_s: [f64; 2],
    pub ramp_s: f64,
}

impl Default for BurstPattern {
    fn default() -> Self {
        Self {
            sentences_per_clip: [1, 2],
            words_per_sentence: [1, 3],
            word_duration_s: 2.0 / 3.0,
            word_gap_s: [0.15, 0.3],
            sentence_gap_s: [0.8, 1.2],
            edge_silence_s: [0.3, 0.5],
            ramp_s: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HostSpec {
    pub f0_hz: f64,
    /// Spread of host F0 across videos, in semitones.
    pub f0_spread_st: f64,
    /// Planted correlation between dog F0 and host F0 (in semitones).
    pub correlation: f64,
    pub clips_per_video: [usize; 2],
    pub duration_s: [f64; 2],
    pub am_depth: f64,
}

impl Default for HostSpec {
    fn default() -> Self {
        Self {
            f0_hz: 160.0,
            f0_spread_st: 2.0,
            correlation: 0.6,
            clips_per_video: [1, 2],
            duration_s: [1.5, 2.5],
            am_depth: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_clips_per_group: usize,
    pub groups: Vec<SynthGroup>,
    pub burst_pattern: BurstPattern,
    pub noise_snr_db: f64,
    pub seed: u64,
    pub am_depth: f64,
    /// Per-clip F0 spread around the group F0, in semitones.
    pub f0_jitter_st: f64,
    /// Per-clip AM-rate spread around the group rate, in octaves.
    pub rate_jitter_oct: f64,
    /// Jittered rates are clamped to `[1, max_rate_hz]`.
    pub max_rate_hz: f64,
    pub loudness_jitter_db: f64,
    /// Share of sentences given an overlapping speech or music annotation.
    pub noisy_sentence_fraction: f64,
    /// Share of clips given a speech annotation in the leading silence.
    pub decoy_fraction: f64,
    pub n_contexts: usize,
    /// Activity noise relative to the prototype's per-entry scale.
    pub activity_jitter: f64,
    /// Share of clips whose activity is pushed away from the prototype.
    pub context_outlier_fraction: f64,
    pub host: HostSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_clips_per_group: 60,
            groups: vec![
                SynthGroup {
                    lang_env: LangEnv::En,
                    f0_hz: 300.0,
                    am_rate_hz: 3.0,
                    loudness_db: -6.0,
                    host_am_rate_hz: 4.0,
                },
                SynthGroup {
                    lang_env: LangEnv::Ja,
                    f0_hz: 600.0,
                    am_rate_hz: 6.0,
                    loudness_db: -6.0,
                    host_am_rate_hz: 5.0,
                },
            ],
            burst_pattern: BurstPattern::default(),
            noise_snr_db: 30.0,
            seed: 0,
            am_depth: 0.7,
            f0_jitter_st: 1.0,
            rate_jitter_oct: 0.0,
            max_rate_hz: 6.5,
            loudness_jitter_db: 3.0,
            noisy_sentence_fraction: 0.15,
            decoy_fraction: 0.3,
            n_contexts: 8,
            activity_jitter: 0.1,
            context_outlier_fraction: 0.1,
            host: HostSpec::default(),
        }
    }
}

impl SynthSpec {
    /// Groups whose F0 and AM-rate distributions overlap, so that neither
    /// factor alone separates them: 300 vs 424 Hz (6 semitones apart, 2.3
    /// semitones spread) and 2.5 vs 4.5 Hz (0.38 octaves spread).
    pub fn overlapping(seed: u64) -> Self {
        let mut s = Self {
            seed,
            f0_jitter_st: 2.3,
            rate_jitter_oct: 0.38,
            ..Self::default()
        };
        s.groups[0].f0_hz = 300.0;
        s.groups[1].f0_hz = 300.0 * 2f64.powf(0.5);
        s.groups[0].am_rate_hz = 2.5;
        s.groups[1].am_rate_hz = 4.5;
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.groups.is_empty() {
            return bad("no groups");
        }
        for g in &self.groups {
            if !(g.f0_hz > 0.0 && g.am_rate_hz > 0.0 && g.host_am_rate_hz > 0.0) {
                return bad("planted frequencies must be positive");
            }
            if !(g.loudness_db <= 0.0) {
                return bad("loudness must be at most 0 dBFS");
            }
        }
        let b = &self.burst_pattern;
        if b.sentences_per_clip[0] == 0 || b.words_per_sentence[0] == 0 {
            return bad("every clip needs at least one sentence of one word");
        }
        if b.sentences_per_clip[0] > b.sentences_per_clip[1] || b.words_per_sentence[0] > b.words_per_sentence[1] {
            return bad("count ranges must be ordered");
        }
        if !(b.word_duration_s > 0.0 && b.word_gap_s[0] > 0.0 && b.sentence_gap_s[0] > 0.0 && b.ramp_s > 0.0) {
            return bad("durations must be positive");
        }
        if !(0.0..1.0).contains(&self.am_depth) || !(0.0..1.0).contains(&self.host.am_depth) {
            return bad("modulation depth must be in [0, 1)");
        }
        if !(self.host.correlation.abs() < 1.0) {
            return bad("host correlation must be in (-1, 1)");
        }
        if self.n_contexts == 0 {
            return bad("need at least one context");
        }
        if self.host.clips_per_video[0] > self.host.clips_per_video[1] {
            return bad("count ranges must be ordered");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceTruth {
    pub start_s: f64,
    pub end_s: f64,
    /// An overlapping speech or music span is annotated.
    pub noisy: bool,
    pub words: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipTruth {
    pub kind: ClipKind,
    pub lang_env: LangEnv,
    pub video_id: String,
    pub f0_hz: f64,
    pub am_rate_hz: f64,
    pub loudness_db: f64,
    pub duration_s: f64,
    /// All planted words in order.
    pub word_boundaries_s: Vec<[f64; 2]>,
    pub sentences: Vec<SentenceTruth>,
    /// Modulation peaks in the words of clean sentences.
    pub clean_syllables: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub spec: SynthSpec,
    pub clips: BTreeMap<String, ClipTruth>,
    /// GeMAPS-lite dimensions driven by each planted factor; `nuisance`
    /// dimensions vary with planted noise only.
    pub factor_dims: BTreeMap<String, Vec<String>>,
    /// Dimensions carrying the planted dog-host correlation.
    pub correlated_dims: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub manifest_path: PathBuf,
    pub truth_path: PathBuf,
    pub truth: SynthTruth,
}

pub fn factor_dims() -> BTreeMap<String, Vec<String>> {
    let f0 = [
        "F0semitoneFrom27.5Hz_sma3nz_amean",
        "F0semitoneFrom27.5Hz_sma3nz_percentile20.0",
        "F0semitoneFrom27.5Hz_sma3nz_percentile50.0",
        "F0semitoneFrom27.5Hz_sma3nz_percentile80.0",
    ];
    // Faster modulation is smoothed more by the loudness frames, so the
    // spread of the contour falls with rate as well.
    let rate = [
        "loudnessPeaksPerSec",
        "loudness_sma3_meanRisingSlope",
        "loudness_sma3_meanFallingSlope",
        "loudness_sma3_stddevNorm",
        "loudness_sma3_pctlrange0-2",
    ];
    let nuisance = [
        "loudness_sma3_amean",
        "loudness_sma3_percentile20.0",
        "loudness_sma3_percentile80.0",
    ];
    let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    BTreeMap::from([
        ("f0".to_string(), own(&f0)),
        ("rate".to_string(), own(&rate)),
        ("nuisance".to_string(), own(&nuisance)),
    ])
}

fn uniform(r: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[1] > range[0] {
        r.random_range(range[0]..=range[1])
    } else {
        range[0]
    }
}

fn count(r: &mut ChaCha8Rng, range: [usize; 2]) -> usize {
    r.random_range(range[0]..=range[1].max(range[0]))
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn st(f: f64) -> f64 {
    12.0 * (f / 27.5).log2()
}

/// Source slope of the dog pulse train.
fn dog_source(f: f64) -> f64 {
    1.0 / (1.0 + (f / 800.0).powi(2)).sqrt()
}

const RESONANCE_HZ: f64 = 1800.0;
const RESONANCE_BW_HZ: f64 = 300.0;
const RESONANCE_MIX: f64 = 1.5;

/// Adds the output of a two-pole resonator, normalised to unit peak gain,
/// so each pulse rings as a damped sinusoid.
fn resonate(x: &[f64]) -> Vec<f64> {
    let fs = SYNTH_RATE as f64;
    let r = (-PI * RESONANCE_BW_HZ / fs).exp();
    let theta = 2.0 * PI * RESONANCE_HZ / fs;
    let (a1, a2) = (2.0 * r * theta.cos(), -r * r);
    let (re, im) = (1.0 - a1 * theta.cos() - a2 * (2.0 * theta).cos(), a1 * theta.sin() + a2 * (2.0 * theta).sin());
    let peak_gain = 1.0 / (re * re + im * im).sqrt();
    let (mut y1, mut y2) = (0.0, 0.0);
    x.iter()
        .map(|&v| {
            let y = v + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            v + RESONANCE_MIX * y / peak_gain
        })
        .collect()
}

fn harmonic(f0: f64, n: usize, phases: &[f64], amp: impl Fn(f64) -> f64) -> Vec<f64> {
    let fs = SYNTH_RATE as f64;
    let amps: Vec<f64> = (1..=phases.len()).map(|h| amp(h as f64 * f0)).collect();
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            phases
                .iter()
                .zip(&amps)
                .enumerate()
                .map(|(h, (p, a))| a * (2.0 * PI * (h + 1) as f64 * f0 * t + p).sin())
                .sum()
        })
        .collect()
}

fn ramp(n: usize, i: usize, len: usize) -> f64 {
    let edge = i.min(n - 1 - i);
    if edge >= len {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / len as f64).cos()
    }
}

/// Adds `signal` with the SNR measured against the power of `active` samples.
fn add_noise(signal: &mut [f64], active: &[bool], snr_db: f64, r: &mut ChaCha8Rng) {
    let (p, n) = signal
        .iter()
        .zip(active)
        .filter(|(_, a)| **a)
        .fold((0.0, 0usize), |(p, n), (s, _)| (p + s * s, n + 1));
    let power = if n > 0 { p / n as f64 } else { 0.0 };
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    for s in signal.iter_mut() {
        *s += sigma * normal(r);
    }
}

struct DogClip {
    id: String,
    group: usize,
    samples: Vec<f64>,
    truth: ClipTruth,
    annotations: Vec<EventSpan>,
    context: usize,
    activity: Vec<f32>,
}

fn synth_dog(spec: &SynthSpec, idx: usize, group: usize, within: usize, protos: &[Vec<f64>]) -> DogClip {
    let g = &spec.groups[group];
    let b = &spec.burst_pattern;
    let fs = SYNTH_RATE as f64;
    let mut r = rng::sub_rng(rng::named_seed(spec.seed, "dog"), idx as u64);
    let f0 = g.f0_hz * 2f64.powf(spec.f0_jitter_st * normal(&mut r) / 12.0);
    let rate = (g.am_rate_hz * 2f64.powf(spec.rate_jitter_oct * normal(&mut r))).clamp(1.0, spec.max_rate_hz.max(1.0));
    let loud = g.loudness_db + uniform(&mut r, [-spec.loudness_jitter_db, spec.loudness_jitter_db]);
    let cycles = ((rate * b.word_duration_s).round() as usize).max(1);
    let word_len = (cycles as f64 / rate * fs).round() as usize;

    let mut t = uniform(&mut r, b.edge_silence_s);
    let lead = t;
    let mut sentences = Vec::new();
    for s in 0..count(&mut r, b.sentences_per_clip) {
        if s > 0 {
            t += uniform(&mut r, b.sentence_gap_s);
        }
        let mut words = Vec::new();
        for w in 0..count(&mut r, b.words_per_sentence) {
            if w > 0 {
                t += uniform(&mut r, b.word_gap_s);
            }
            let start = (t * fs).round() / fs;
            let end = start + word_len as f64 / fs;
            words.push([start, end]);
            t = end;
        }
        sentences.push(SentenceTruth {
            start_s: words[0][0],
            end_s: words[words.len() - 1][1],
            noisy: false,
            words,
        });
    }
    let total = ((t + uniform(&mut r, b.edge_silence_s)) * fs).round() as usize;

    // Band-limited pulse train: cosine harmonics in phase.
    let phases = vec![PI / 2.0; ((6000.0 / f0) as usize).max(1)];
    let word = {
        let carrier = resonate(&harmonic(f0, word_len, &phases, dog_source));
        let ramp_len = ((b.ramp_s * fs) as usize).max(1);
        carrier
            .into_iter()
            .enumerate()
            .map(|(i, c)| {
                let tt = i as f64 / fs;
                let am = 1.0 - spec.am_depth * (1.0 + (2.0 * PI * rate * tt).cos()) / 2.0;
                c * am * ramp(word_len, i, ramp_len)
            })
            .collect::<Vec<f64>>()
    };
    let peak = word.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gain = 10f64.powf(loud / 20.0) / peak;
    let mut samples = vec![0.0; total];
    let mut active = vec![false; total];
    for w in sentences.iter().flat_map(|s| &s.words) {
        let a = (w[0] * fs).round() as usize;
        for (k, v) in word.iter().enumerate() {
            samples[a + k] = v * gain;
            active[a + k] = true;
        }
    }
    add_noise(&mut samples, &active, spec.noise_snr_db, &mut r);

    let duration = total as f64 / fs;
    let mut annotations = Vec::new();
    let n_sent = sentences.len();
    for s in 0..n_sent {
        let noisy = r.random::<f64>() < spec.noisy_sentence_fraction;
        // Every clip keeps at least one clean sentence.
        let last_clean = s + 1 == n_sent && sentences[..s].iter().all(|x| x.noisy);
        if noisy && !last_clean {
            let (a, e) = (sentences[s].start_s, sentences[s].end_s);
            let start = a + r.random_range(0.0..0.5) * (e - a);
            let limit = if s + 1 < n_sent { sentences[s + 1].start_s - 0.2 } else { duration };
            let end = (start + r.random_range(0.2..0.6)).min(limit).max(start + 0.05);
            let label = if r.random::<bool>() { SPEECH } else { MUSIC };
            annotations.push(EventSpan::new(label, start, end, 0.9));
            sentences[s].noisy = true;
        }
    }
    if r.random::<f64>() < spec.decoy_fraction && lead > 0.2 {
        annotations.insert(0, EventSpan::new(SPEECH, 0.02, lead - 0.12, 0.8));
    }

    let context = within % spec.n_contexts;
    let proto = &protos[context];
    let scale = if r.random::<f64>() < spec.context_outlier_fraction { 1.0 } else { spec.activity_jitter };
    let activity: Vec<f32> = proto.iter().map(|p| (p + scale * normal(&mut r)) as f32).collect();

    let clean_syllables = cycles * sentences.iter().filter(|s| !s.noisy).map(|s| s.words.len()).sum::<usize>();
    let id = format!("dog_{}_{:04}", g.lang_env.to_string().to_lowercase(), within);
    DogClip {
        truth: ClipTruth {
            kind: ClipKind::DogVocal,
            lang_env: g.lang_env,
            video_id: format!("vid_{id}"),
            f0_hz: f0,
            am_rate_hz: rate,
            loudness_db: loud,
            duration_s: duration,
            word_boundaries_s: sentences.iter().flat_map(|s| s.words.clone()).collect(),
            sentences,
            clean_syllables,
        },
        id,
        group,
        samples,
        annotations,
        context,
        activity,
    }
}

fn synth_host(spec: &SynthSpec, group: usize, f0: f64, stream: u64) -> (Vec<f64>, f64) {
    let h = &spec.host;
    let fs = SYNTH_RATE as f64;
    let mut r = rng::sub_rng(rng::named_seed(spec.seed, "host"), stream);
    let rate = spec.groups[group].host_am_rate_hz;
    let body = (uniform(&mut r, h.duration_s) * fs) as usize;
    let edge = (0.1 * fs) as usize;
    let n_harm = ((4000.0 / f0) as usize).max(1);
    let phases: Vec<f64> = (0..n_harm).map(|_| r.random_range(0.0..2.0 * PI)).collect();
    let carrier = harmonic(f0, body, &phases, |f| 1.0 / (1.0 + f / 500.0));
    let peak = carrier.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut samples = vec![0.0; body + 2 * edge];
    let mut active = vec![false; samples.len()];
    for (i, c) in carrier.into_iter().enumerate() {
        let t = i as f64 / fs;
        let am = 1.0 - h.am_depth * (1.0 + (2.0 * PI * rate * t).cos()) / 2.0;
        samples[edge + i] = 0.3 * c / peak * am * ramp(body, i, (0.01 * fs) as usize);
        active[edge + i] = true;
    }
    add_noise(&mut samples, &active, spec.noise_snr_db, &mut r);
    let dur = samples.len() as f64 / fs;
    (samples, dur)
}

/// Standardized `u`, and `z` with sample correlation exactly `rho` to it.
fn correlated_pair(u: &[f64], rho: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    let n = u.len() as f64;
    let standardize = |v: &[f64]| -> Vec<f64> {
        let m = v.iter().sum::<f64>() / n;
        let s = (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
        v.iter().map(|x| if s > 0.0 { (x - m) / s } else { 0.0 }).collect()
    };
    let us = standardize(u);
    let e: Vec<f64> = (0..u.len()).map(|_| normal(r)).collect();
    let es = standardize(&e);
    let proj = us.iter().zip(&es).map(|(a, b)| a * b).sum::<f64>() / n;
    let perp: Vec<f64> = es.iter().zip(&us).map(|(e, u)| e - proj * u).collect();
    let perp = standardize(&perp);
    us.iter().zip(&perp).map(|(u, p)| rho * u + (1.0 - rho * rho).sqrt() * p).collect()
}

/// Writes the corpus under `out_dir`: `audio/`, `activity/`,
/// `annotations/`, `manifest.jsonl` and `truth.json`.
pub fn generate(spec: &SynthSpec, out_dir: &Path, defaults: &PipelineConfig) -> Result<SynthOutput> {
    spec.validate()?;
    for sub in ["audio", "activity", "annotations"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let mut r = rng::rng(rng::named_seed(spec.seed, "layout"));
    let protos: Vec<Vec<f64>> = (0..spec.n_contexts)
        .map(|_| (0..ACTIVITY_DIM).map(|_| normal(&mut r)).collect())
        .collect();

    let jobs: Vec<(usize, usize)> = (0..spec.groups.len())
        .flat_map(|g| (0..spec.n_clips_per_group).map(move |j| (g, j)))
        .collect();
    let dogs: Vec<DogClip> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, &(g, j))| synth_dog(spec, idx, g, j, &protos))
        .collect();

    let dog_st: Vec<f64> = dogs.iter().map(|d| st(d.truth.f0_hz)).collect();
    let z = if dogs.len() >= 3 {
        correlated_pair(&dog_st, spec.host.correlation, &mut r)
    } else {
        vec![0.0; dogs.len()]
    };
    let host_counts: Vec<usize> = dogs.iter().map(|_| count(&mut r, spec.host.clips_per_video)).collect();
    let video_start: Vec<f64> = dogs.iter().map(|_| r.random_range(0.0..600.0)).collect();

    let mut host_jobs = Vec::new();
    for (i, d) in dogs.iter().enumerate() {
        let f0 = spec.host.f0_hz * 2f64.powf(spec.host.f0_spread_st * z[i] / 12.0);
        for k in 0..host_counts[i] {
            host_jobs.push((i, k, d.group, f0));
        }
    }
    let hosts: Vec<(Vec<f64>, f64)> = host_jobs
        .par_iter()
        .enumerate()
        .map(|(s, &(_, _, g, f0))| synth_host(spec, g, f0, s as u64))
        .collect();

    let mut entries = Vec::new();
    let mut clips = BTreeMap::new();
    let mut writes: Vec<(PathBuf, AudioClip)> = Vec::new();
    for (i, d) in dogs.iter().enumerate() {
        let wav = PathBuf::from(format!("audio/{}.wav", d.id));
        let act = PathBuf::from(format!("activity/{}.f32", d.id));
        let ann = PathBuf::from(format!("annotations/{}.json", d.id));
        write_activity_file(&out_dir.join(&act), &d.activity)?;
        write_annotations(out_dir.join(&ann), &d.annotations)?;
        writes.push((out_dir.join(&wav), AudioClip::new(d.id.clone(), SYNTH_RATE, d.samples.clone())?));
        entries.push(ManifestEntry {
            id: d.id.clone(),
            kind: ClipKind::DogVocal,
            lang_env: d.truth.lang_env,
            audio_path: wav,
            start_s: video_start[i],
            end_s: video_start[i] + d.truth.duration_s,
            source_video_id: d.truth.video_id.clone(),
            context: Some(ManifestContext {
                scene: Scene::ALL[d.context % Scene::ALL.len()],
                location: LOCATIONS[(d.context * 3) % LOCATIONS.len()].to_string(),
                activity: ActivityRef::File { path: act },
            }),
            annotation_path: Some(ann),
            syllable_count: None,
        });
        clips.insert(d.id.clone(), d.truth.clone());
    }
    for ((i, k, g, f0), (samples, dur)) in host_jobs.iter().zip(hosts) {
        let d = &dogs[*i];
        let id = format!("host_{}_{k}", &d.id[4..]);
        let wav = PathBuf::from(format!("audio/{id}.wav"));
        writes.push((out_dir.join(&wav), AudioClip::new(id.clone(), SYNTH_RATE, samples)?));
        let start = video_start[*i] + d.truth.duration_s + 1.0 + 3.0 * *k as f64;
        entries.push(ManifestEntry {
            id: id.clone(),
            kind: ClipKind::HostSpeech,
            lang_env: spec.groups[*g].lang_env,
            audio_path: wav,
            start_s: start,
            end_s: start + dur,
            source_video_id: d.truth.video_id.clone(),
            context: None,
            annotation_path: None,
            syllable_count: None,
        });
        clips.insert(
            id,
            ClipTruth {
                kind: ClipKind::HostSpeech,
                lang_env: spec.groups[*g].lang_env,
                video_id: d.truth.video_id.clone(),
                f0_hz: *f0,
                am_rate_hz: spec.groups[*g].host_am_rate_hz,
                loudness_db: 20.0 * 0.3f64.log10(),
                duration_s: dur,
                word_boundaries_s: Vec::new(),
                sentences: Vec::new(),
                clean_syllables: 0,
            },
        );
    }
    writes
        .par_iter()
        .map(|(p, c)| write_wav(c, p, WavEncoding::Float32))
        .collect::<Result<Vec<()>>>()?;

    let header = ManifestHeader {
        declared_locations: LOCATIONS.iter().map(|s| s.to_string()).collect(),
        defaults: defaults.clone(),
        ..Default::default()
    };
    let manifest_path = out_dir.join("manifest.jsonl");
    write_manifest(&manifest_path, &header, &entries)?;
    let truth = SynthTruth {
        spec: spec.clone(),
        clips,
        factor_dims: factor_dims(),
        correlated_dims: vec![
            "F0semitoneFrom27.5Hz_sma3nz_amean".into(),
            "F0semitoneFrom27.5Hz_sma3nz_percentile50.0".into(),
        ],
    };
    let truth_path = out_dir.join("truth.json");
    std::fs::write(&truth_path, serde_json::to_string_pretty(&truth.clips)?).map_err(|e| Error::io(&truth_path, e))?;
    let spec_path = out_dir.join("synth_spec.json");
    let meta = serde_json::json!({
        "spec": &truth.spec,
        "factor_dims": &truth.factor_dims,
        "correlated_dims": &truth.correlated_dims,
    });
    std::fs::write(&spec_path, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&spec_path, e))?;
    Ok(SynthOutput {
        manifest_path,
        truth_path,
        truth,
    })
}

/// Reads the `truth.json` sidecar: clip id to planted values.
pub fn read_truth(path: &Path) -> Result<BTreeMap<String, ClipTruth>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
