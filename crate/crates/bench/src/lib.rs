//! In-memory inputs for the benchmarks.

use std::f64::consts::PI;

use rand::Rng;

use barklab_core::pairing::ACTIVITY_DIM;
use barklab_core::{rng, AudioClip, ClipKind, ClipRecord, Context, Dataset, LangEnv, Scene};

pub const RATE: u32 = 16_000;

/// Amplitude-modulated harmonic tone with a little noise, `seconds` long.
pub fn bark(seconds: f64, f0_hz: f64, am_hz: f64, seed: u64) -> AudioClip {
    let mut r = rng::rng(seed);
    let n = (seconds * RATE as f64) as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / RATE as f64;
            let env = 1.0 - 0.7 * (1.0 + (2.0 * PI * am_hz * t).cos()) / 2.0;
            let tone: f64 = (1..=8).map(|h| (2.0 * PI * f0_hz * h as f64 * t).sin() / h as f64).sum();
            0.2 * env * tone + 0.002 * (r.random::<f64>() - 0.5)
        })
        .collect();
    AudioClip::new(format!("bark_{seed}"), RATE, samples).unwrap()
}

/// Dog clip records spread over four contexts.
pub fn records(n: usize, seed: u64) -> Vec<ClipRecord> {
    let mut r = rng::rng(seed);
    let centres: Vec<Vec<f64>> = (0..4).map(|_| (0..ACTIVITY_DIM).map(|_| r.random::<f64>()).collect()).collect();
    (0..n)
        .map(|i| {
            let activity = centres[i % 4].iter().map(|c| c + 0.05 * r.random::<f64>()).collect();
            ClipRecord {
                id: format!("dog_{i:04}"),
                kind: ClipKind::DogVocal,
                lang_env: if i % 2 == 0 { LangEnv::En } else { LangEnv::Ja },
                audio_path: format!("audio/dog_{i:04}.wav").into(),
                start_s: 0.0,
                end_s: 2.0,
                source_video_id: format!("vid_{i:04}"),
                context: Some(Context {
                    scene: Scene::Play,
                    location: ["home", "park"][i % 4 / 2].to_string(),
                    activity,
                }),
                annotation_path: None,
                syllable_count: None,
            }
        })
        .collect()
}

/// Four Gaussian-ish classes whose means differ in the first two columns.
pub fn blobs(n: usize, d: usize, seed: u64) -> Dataset {
    let mut r = rng::rng(seed);
    let y: Vec<usize> = (0..n).map(|i| i % 4).collect();
    let x = y
        .iter()
        .map(|&c| {
            (0..d)
                .map(|j| {
                    let shift = if j < 2 { ((c >> j) & 1) as f64 } else { 0.0 };
                    shift + (0..4).map(|_| r.random::<f64>() - 0.5).sum::<f64>() * 0.6
                })
                .collect()
        })
        .collect();
    Dataset::new((0..d).map(|j| format!("f{j}")).collect(), x, y, 4).unwrap()
}
