//! Extraction of clean, singular vocalizations from raw recordings.
//!
//! The chain has three steps:
//!
//! 1. [`detect_events`] finds labelled event spans, either by reading a
//!    detector's JSON output or with the built-in energy baseline, and
//!    [`sentence_segments`] merges vocal spans into "sentences".
//! 2. [`filter_noisy`] drops sentences that overlap human speech or music.
//! 3. [`word_segments`] splits each surviving sentence at internal pauses,
//!    yielding one span per singular vocalization.
//!
//! [`extract_words`] runs all three for one clip.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::audio::{amplitude_envelope, AudioClip, EnvelopeSeq};
use crate::error::{Error, Result};

pub const BARKING: &str = "barking";
pub const SPEECH: &str = "speech";
pub const MUSIC: &str = "music";

/// A labelled time span emitted by a detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpan {
    pub label: String,
    pub start_s: f64,
    pub end_s: f64,
    pub confidence: f64,
}

impl EventSpan {
    pub fn new(label: impl Into<String>, start_s: f64, end_s: f64, confidence: f64) -> Self {
        Self {
            label: label.into(),
            start_s,
            end_s,
            confidence,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Length of the intersection with `other` (0 when disjoint).
    pub fn overlap(&self, other: &EventSpan) -> f64 {
        (self.end_s.min(other.end_s) - self.start_s.max(other.start_s)).max(0.0)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.start_s >= 0.0) || !(self.end_s > self.start_s) {
            return Err(format!(
                "span {}..{} must satisfy 0 <= start < end",
                self.start_s, self.end_s
            ));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        Ok(())
    }
}

/// Where event spans come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorSource {
    /// Spans precomputed by an external detector, one JSON file per clip.
    ExternalAnnotations { path: PathBuf },
    /// Envelope thresholding; every active region is labelled `label`.
    EnergyBaseline {
        #[serde(default = "default_label")]
        label: String,
    },
}

fn default_label() -> String {
    BARKING.to_string()
}

impl Default for DetectorSource {
    fn default() -> Self {
        DetectorSource::EnergyBaseline {
            label: default_label(),
        }
    }
}

/// Thresholds shared by the baseline detector and the word splitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    /// Activity floor relative to the clip's envelope peak.
    pub silence_floor_db: f64,
    pub min_sentence_gap_s: f64,
    pub min_word_gap_s: f64,
    pub min_word_len_s: f64,
    /// Level must drop this far below the on-threshold to end a region.
    pub hysteresis_db: f64,
    /// The on-threshold is also kept this far above the estimated noise floor.
    pub noise_margin_db: f64,
    pub envelope_rate_hz: f64,
    /// Labels treated as vocalizations when forming sentences.
    pub vocal_labels: Vec<String>,
    /// Labels whose presence disqualifies a sentence.
    pub noise_labels: Vec<String>,
    /// Fraction of a sentence that must be covered before it is dropped;
    /// 0 means any positive overlap.
    pub min_overlap_fraction: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            silence_floor_db: -35.0,
            min_sentence_gap_s: 0.5,
            min_word_gap_s: 0.06,
            min_word_len_s: 0.05,
            hysteresis_db: 5.0,
            noise_margin_db: 10.0,
            envelope_rate_hz: 200.0,
            vocal_labels: vec![BARKING.to_string()],
            noise_labels: vec![SPEECH.to_string(), MUSIC.to_string()],
            min_overlap_fraction: 0.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.silence_floor_db < 0.0) {
            return bad("silence_floor_db must be negative");
        }
        if !(self.min_sentence_gap_s > 0.0 && self.min_word_gap_s > 0.0 && self.min_word_len_s > 0.0)
        {
            return bad("segmentation durations must be positive");
        }
        if self.min_word_gap_s > self.min_sentence_gap_s {
            return bad("min_word_gap_s must not exceed min_sentence_gap_s");
        }
        if !(self.hysteresis_db >= 0.0) || !(self.envelope_rate_hz > 0.0) {
            return bad("hysteresis must be >= 0 and envelope rate > 0");
        }
        if !(0.0..1.0).contains(&self.min_overlap_fraction) {
            return bad("min_overlap_fraction must be in [0, 1)");
        }
        Ok(())
    }
}

/// Read an annotation file: a JSON array of `{label, start_s, end_s, confidence}`.
pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<EventSpan>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spans: Vec<EventSpan> = serde_json::from_str(&text).map_err(|e| Error::Annotation {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    for s in &spans {
        s.validate().map_err(|message| Error::Annotation {
            path: path.to_path_buf(),
            message,
        })?;
    }
    Ok(spans)
}

pub fn write_annotations(path: impl AsRef<Path>, spans: &[EventSpan]) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(spans)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Detect event spans in `clip`, sorted by start time and clipped to the clip.
pub fn detect_events(
    clip: &AudioClip,
    source: &DetectorSource,
    config: &SegmentationConfig,
) -> Result<Vec<EventSpan>> {
    let duration = clip.duration_s();
    let mut spans = match source {
        DetectorSource::ExternalAnnotations { path } => {
            let mut spans = read_annotations(path)?;
            for s in &mut spans {
                if s.start_s >= duration {
                    return Err(Error::Annotation {
                        path: path.clone(),
                        message: format!(
                            "span {}..{} starts beyond the clip duration {duration:.3} s",
                            s.start_s, s.end_s
                        ),
                    });
                }
                s.end_s = s.end_s.min(duration);
            }
            spans
        }
        DetectorSource::EnergyBaseline { label } => {
            config.validate()?;
            let level = LevelTrack::new(clip, config)?;
            level
                .active_regions(0, level.db.len(), config)
                .into_iter()
                .map(|(a, b)| {
                    EventSpan::new(
                        label.clone(),
                        level.frame_start(a),
                        level.frame_start(b).min(duration),
                        1.0,
                    )
                })
                .collect()
        }
    };
    spans.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.end_s.total_cmp(&b.end_s)));
    Ok(spans)
}

/// Merge vocal spans whose gaps are shorter than `min_sentence_gap_s`.
pub fn sentence_segments(events: &[EventSpan], config: &SegmentationConfig) -> Vec<EventSpan> {
    let mut vocal: Vec<&EventSpan> = events
        .iter()
        .filter(|e| config.vocal_labels.iter().any(|l| l == &e.label))
        .collect();
    vocal.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut out: Vec<EventSpan> = Vec::new();
    for e in vocal {
        match out.last_mut() {
            Some(last) if e.start_s - last.end_s < config.min_sentence_gap_s => {
                last.end_s = last.end_s.max(e.end_s);
                last.confidence = last.confidence.max(e.confidence);
            }
            _ => out.push(e.clone()),
        }
    }
    out
}

/// Drop every sentence overlapping a speech or music event.
pub fn filter_noisy(
    sentences: &[EventSpan],
    events: &[EventSpan],
    config: &SegmentationConfig,
) -> Vec<EventSpan> {
    let noise: Vec<&EventSpan> = events
        .iter()
        .filter(|e| config.noise_labels.iter().any(|l| l == &e.label))
        .collect();
    sentences
        .iter()
        .filter(|s| {
            let min = config.min_overlap_fraction * s.duration();
            !noise.iter().any(|n| {
                let o = s.overlap(n);
                o > 0.0 && o >= min
            })
        })
        .cloned()
        .collect()
}

/// Split one sentence at internal pauses into singular vocalizations.
pub fn word_segments(
    clip: &AudioClip,
    sentence: &EventSpan,
    config: &SegmentationConfig,
) -> Result<Vec<EventSpan>> {
    config.validate()?;
    let level = LevelTrack::new(clip, config)?;
    let a = level.frame_at(sentence.start_s);
    let b = level.frame_at(sentence.end_s).max(a);
    let regions = level.active_regions(a, b, config);

    let gap_frames = (config.min_word_gap_s * level.rate).ceil() as usize;
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in regions {
        match merged.last_mut() {
            Some(last) if s - last.1 < gap_frames => last.1 = e,
            _ => merged.push((s, e)),
        }
    }
    Ok(merged
        .into_iter()
        .map(|(s, e)| {
            EventSpan::new(
                sentence.label.clone(),
                level.frame_start(s).max(sentence.start_s),
                level.frame_start(e).min(sentence.end_s),
                sentence.confidence,
            )
        })
        .filter(|w| w.duration() >= config.min_word_len_s)
        .collect())
}

/// Steps 1-3 for one clip: detect, merge into sentences, drop noisy
/// sentences, split into words.
pub fn extract_words(
    clip: &AudioClip,
    source: &DetectorSource,
    config: &SegmentationConfig,
) -> Result<Vec<EventSpan>> {
    let events = detect_events(clip, source, config)?;
    let sentences = sentence_segments(&events, config);
    let clean = filter_noisy(&sentences, &events, config);
    let mut words = Vec::new();
    for s in &clean {
        words.extend(word_segments(clip, s, config)?);
    }
    Ok(words)
}

/// Digital silence never counts as activity.
const ABSOLUTE_FLOOR_DB: f64 = -120.0;

/// Per-frame level in dB with clip-wide thresholds.
struct LevelTrack {
    db: Vec<f64>,
    rate: f64,
    on_db: f64,
    off_db: f64,
}

impl LevelTrack {
    fn new(clip: &AudioClip, config: &SegmentationConfig) -> Result<Self> {
        let env: EnvelopeSeq = amplitude_envelope(clip, config.envelope_rate_hz)?;
        let db: Vec<f64> = env
            .values
            .iter()
            .map(|v| 20.0 * v.max(1e-10).log10())
            .collect();
        let peak = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sorted = db.clone();
        sorted.sort_by(f64::total_cmp);
        let noise = sorted.get(sorted.len() / 10).copied().unwrap_or(-200.0);
        // The noise-relative term is capped so clips without pauses still
        // register as active.
        let noise_term = (noise + config.noise_margin_db)
            .min(peak - config.noise_margin_db - config.hysteresis_db);
        let on_db = (peak + config.silence_floor_db)
            .max(noise_term)
            .max(ABSOLUTE_FLOOR_DB);
        Ok(Self {
            off_db: on_db - config.hysteresis_db,
            on_db,
            rate: env.rate_hz,
            db,
        })
    }

    fn frame_start(&self, i: usize) -> f64 {
        i as f64 / self.rate
    }

    fn frame_at(&self, t: f64) -> usize {
        ((t * self.rate).round().max(0.0) as usize).min(self.db.len())
    }

    /// Maximal active frame ranges `[start, end)` within `[from, to)`.
    fn active_regions(&self, from: usize, to: usize, _config: &SegmentationConfig) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for i in from..to {
            let v = self.db[i];
            match start {
                None if v >= self.on_db => start = Some(i),
                Some(s) if v < self.off_db => {
                    out.push((s, i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, to));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    const SR: u32 = 16000;

    fn bursts(total_s: f64, spans: &[(f64, f64)], noise_rms: f64, seed: u64) -> AudioClip {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = (total_s * SR as f64) as usize;
        let s = (0..n)
            .map(|i| {
                let t = i as f64 / SR as f64;
                let on = spans.iter().any(|&(a, b)| t >= a && t < b);
                let tone = if on { 0.5 * (2.0 * PI * 440.0 * t).sin() } else { 0.0 };
                let u: f64 = rng.random_range(-1.0..1.0);
                tone + noise_rms * 3f64.sqrt() * u
            })
            .collect();
        AudioClip::new("b", SR, s).unwrap()
    }

    #[test]
    fn silence_has_no_events() {
        let c = AudioClip::new("s", SR, vec![0.0; 16000]).unwrap();
        let ev = detect_events(&c, &DetectorSource::default(), &SegmentationConfig::default()).unwrap();
        assert!(ev.is_empty());
    }

    #[test]
    fn annotation_pass_through() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        std::fs::write(&p, r#"[{"label":"barking","start_s":1.0,"end_s":2.0,"confidence":0.9}]"#).unwrap();
        let c = AudioClip::new("s", SR, vec![0.0; 3 * 16000]).unwrap();
        let ev = detect_events(
            &c,
            &DetectorSource::ExternalAnnotations { path: p },
            &SegmentationConfig::default(),
        )
        .unwrap();
        assert_eq!(ev, vec![EventSpan::new("barking", 1.0, 2.0, 0.9)]);
    }

    #[test]
    fn annotation_errors() {
        let dir = tempfile::tempdir().unwrap();
        let c = AudioClip::new("s", SR, vec![0.0; 16000]).unwrap();
        let cfg = SegmentationConfig::default();
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, r#"[{"label":"barking","start_s":0.5}]"#).unwrap();
        let src = DetectorSource::ExternalAnnotations { path: bad };
        assert!(matches!(detect_events(&c, &src, &cfg), Err(Error::Annotation { .. })));
        let outside = dir.path().join("out.json");
        std::fs::write(&outside, r#"[{"label":"barking","start_s":3.0,"end_s":4.0,"confidence":1}]"#).unwrap();
        let src = DetectorSource::ExternalAnnotations { path: outside };
        assert!(detect_events(&c, &src, &cfg).is_err());
        let missing = DetectorSource::ExternalAnnotations {
            path: dir.path().join("missing.json"),
        };
        assert!(detect_events(&c, &missing, &cfg).is_err());
        let inverted = dir.path().join("inv.json");
        std::fs::write(&inverted, r#"[{"label":"barking","start_s":0.6,"end_s":0.5,"confidence":1}]"#).unwrap();
        let src = DetectorSource::ExternalAnnotations { path: inverted };
        assert!(detect_events(&c, &src, &cfg).is_err());
    }

    #[test]
    fn baseline_finds_two_bursts() {
        let c = bursts(6.0, &[(1.0, 2.0), (4.0, 5.0)], 0.005, 1);
        let ev = detect_events(&c, &DetectorSource::default(), &SegmentationConfig::default()).unwrap();
        assert_eq!(ev.len(), 2, "{ev:?}");
        for (e, (a, b)) in ev.iter().zip([(1.0, 2.0), (4.0, 5.0)]) {
            assert!((e.start_s - a).abs() <= 0.025 && (e.end_s - b).abs() <= 0.025, "{e:?}");
            assert_eq!(e.label, BARKING);
        }
    }

    #[test]
    fn merge_rule() {
        let cfg = SegmentationConfig {
            min_sentence_gap_s: 0.3,
            ..Default::default()
        };
        assert!(sentence_segments(&[], &cfg).is_empty());
        let ev = vec![
            EventSpan::new(BARKING, 0.0, 1.0, 0.5),
            EventSpan::new(BARKING, 1.1, 2.0, 0.8),
            EventSpan::new(SPEECH, 0.5, 0.7, 0.9),
        ];
        let s = sentence_segments(&ev, &cfg);
        assert_eq!(s, vec![EventSpan::new(BARKING, 0.0, 2.0, 0.8)]);
    }

    #[test]
    fn noisy_sentences_removed() {
        let cfg = SegmentationConfig::default();
        let s = vec![EventSpan::new(BARKING, 0.0, 2.0, 1.0)];
        let music = vec![EventSpan::new(MUSIC, 1.0, 3.0, 1.0)];
        assert!(filter_noisy(&s, &music, &cfg).is_empty());
        let speech = vec![EventSpan::new(SPEECH, 5.0, 6.0, 1.0)];
        assert_eq!(filter_noisy(&s, &speech, &cfg), s);
        // Touching spans do not overlap.
        let touching = vec![EventSpan::new(SPEECH, 2.0, 3.0, 1.0)];
        assert_eq!(filter_noisy(&s, &touching, &cfg), s);
        let frac = SegmentationConfig {
            min_overlap_fraction: 0.6,
            ..Default::default()
        };
        assert_eq!(filter_noisy(&s, &music, &frac), s);
    }

    #[test]
    fn three_bursts_three_words() {
        let spans = [(0.5, 0.8), (0.95, 1.25), (1.4, 1.7)];
        let c = bursts(2.2, &spans, 0.002, 3);
        let cfg = SegmentationConfig {
            min_word_gap_s: 0.1,
            ..Default::default()
        };
        let sentence = EventSpan::new(BARKING, 0.4, 1.8, 1.0);
        let w = word_segments(&c, &sentence, &cfg).unwrap();
        assert_eq!(w.len(), 3, "{w:?}");
        for (got, (a, b)) in w.iter().zip(spans) {
            assert!((got.start_s - a).abs() <= 0.025 && (got.end_s - b).abs() <= 0.025);
        }
    }

    #[test]
    fn unbroken_burst_is_one_word() {
        let c = bursts(1.0, &[(0.0, 1.0)], 0.0, 0);
        let s = EventSpan::new(BARKING, 0.0, 1.0, 1.0);
        let w = word_segments(&c, &s, &SegmentationConfig::default()).unwrap();
        assert_eq!(w, vec![s]);
    }

    #[test]
    fn silent_sentence_has_no_words() {
        let c = bursts(3.0, &[(2.0, 2.5)], 0.0, 0);
        let w = word_segments(&c, &EventSpan::new(BARKING, 0.2, 1.5, 1.0), &SegmentationConfig::default()).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn config_validation() {
        let c = SegmentationConfig {
            silence_floor_db: 3.0,
            ..SegmentationConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SegmentationConfig {
            min_word_gap_s: 1.0,
            ..SegmentationConfig::default()
        };
        assert!(c.validate().is_err());
    }

    fn brute_force_filter(sent: &[EventSpan], ev: &[EventSpan]) -> Vec<EventSpan> {
        let mut out = Vec::new();
        for s in sent {
            let mut keep = true;
            for e in ev {
                if e.label != SPEECH && e.label != MUSIC {
                    continue;
                }
                let lo = if s.start_s > e.start_s { s.start_s } else { e.start_s };
                let hi = if s.end_s < e.end_s { s.end_s } else { e.end_s };
                if hi - lo > 0.0 {
                    keep = false;
                }
            }
            if keep {
                out.push(s.clone());
            }
        }
        out
    }

    fn spans_strategy(label: &'static str) -> impl Strategy<Value = Vec<EventSpan>> {
        prop::collection::vec((0.0f64..20.0, 0.01f64..3.0), 0..12).prop_map(move |v| {
            v.into_iter()
                .map(|(s, d)| EventSpan::new(label, s, s + d, 1.0))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn filter_matches_oracle(
            sent in spans_strategy(BARKING),
            speech in spans_strategy(SPEECH),
            music in spans_strategy(MUSIC),
        ) {
            let mut ev = speech;
            ev.extend(music);
            let cfg = SegmentationConfig::default();
            prop_assert_eq!(filter_noisy(&sent, &ev, &cfg), brute_force_filter(&sent, &ev));
        }

        #[test]
        fn music_never_increases_survivors(
            sent in spans_strategy(BARKING),
            ev in spans_strategy(SPEECH),
            extra in (0.0f64..20.0, 0.01f64..3.0),
        ) {
            let cfg = SegmentationConfig::default();
            let before = filter_noisy(&sent, &ev, &cfg).len();
            let mut more = ev.clone();
            more.push(EventSpan::new(MUSIC, extra.0, extra.0 + extra.1, 1.0));
            prop_assert!(filter_noisy(&sent, &more, &cfg).len() <= before);
        }

        #[test]
        fn zero_gap_keeps_disjoint_spans(gaps in prop::collection::vec((0.01f64..1.0, 0.05f64..1.0), 10)) {
            let mut t = 0.0;
            let mut spans = Vec::new();
            for (g, d) in gaps {
                t += g;
                spans.push(EventSpan::new(BARKING, t, t + d, 1.0));
                t += d;
            }
            let cfg = SegmentationConfig { min_sentence_gap_s: 1e-12, min_word_gap_s: 1e-12, ..Default::default() };
            prop_assert_eq!(sentence_segments(&spans, &cfg), spans);
        }

        #[test]
        fn words_disjoint_and_nested(seed in 0u64..200) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut spans = Vec::new();
            let mut t = 0.2;
            for _ in 0..rng.random_range(1..5) {
                let d = rng.random_range(0.08..0.4);
                spans.push((t, t + d));
                t += d + rng.random_range(0.03..0.3);
            }
            let c = bursts(t + 0.2, &spans, 0.003, seed);
            let sentence = EventSpan::new(BARKING, 0.1, t + 0.1, 1.0);
            let w = word_segments(&c, &sentence, &SegmentationConfig::default()).unwrap();
            for x in &w {
                prop_assert!(x.start_s >= sentence.start_s && x.end_s <= sentence.end_s);
            }
            for p in w.windows(2) {
                prop_assert!(p[0].end_s <= p[1].start_s);
            }
        }
    }

    #[test]
    fn singular_clip_idempotent() {
        let c = bursts(0.7, &[(0.1, 0.6)], 0.001, 9);
        let s = EventSpan::new(BARKING, 0.0, 0.7, 1.0);
        let w = word_segments(&c, &s, &SegmentationConfig::default()).unwrap();
        assert_eq!(w.len(), 1);
        let covered = w[0].overlap(&EventSpan::new(BARKING, 0.1, 0.6, 1.0));
        assert!(covered >= 0.9 * 0.5);
    }
}
