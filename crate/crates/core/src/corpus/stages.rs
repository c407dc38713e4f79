//! The pipeline stages and their on-disk artifacts.
//!
//! ```text
//! segments.jsonl                  segment
//! features/{dog,host}/<set>.csv   extract (+ features/dropped.json)
//! pairs.csv, pairs_summary.json   pair
//! train/accuracy_grid.csv         train (+ train/cv/*.json)
//! explain/attribution.csv         explain (+ model.json, attribution_pairs.csv, correlation.csv)
//! speed/speed.csv                 speed (+ rates.csv, histogram.csv, nuclei.jsonl)
//! report/index.json               report
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExplainMode, PipelineConfig};
use super::ledger::{ContentHash, LedgerEntry, RunLedger, Stage};
use super::manifest::Manifest;
use super::report::write_report;
use crate::audio::{load_canonical, AudioClip};
use crate::classify::{accuracy_grid, train};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::explain::{
    correlate_pairs, fold_sides, mean_abs_shap, write_attribution_csv, write_correlation_csv, VideoFeatures,
};
use crate::features::{extract, FeatureSetId, FeatureStore, FeatureVector, GEMAPS_LITE_NAMES};
use crate::pairing::{build_pairs, pair_dataset, read_pairs, write_pairs, ClipKind, ClipRecord, LangEnv, PairClass};
use crate::rng;
use crate::segment::{
    detect_events, filter_noisy, sentence_segments, word_segments, DetectorSource, SegmentationConfig, BARKING,
};
use crate::syllables::{speed_report, syllable_units, write_speed_csv, ClipRate, HIST_BINS, HIST_BIN_WIDTH};

pub const SEGMENTS_FILE: &str = "segments.jsonl";
pub const PAIRS_FILE: &str = "pairs.csv";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub config: PipelineConfig,
    /// Run every requested stage even when the ledger says it is current.
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub skipped: bool,
    pub outputs: Vec<PathBuf>,
}

/// Segmentation result for one dog clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipSegments {
    pub clip_id: String,
    pub duration_s: f64,
    pub sentences: Vec<[f64; 2]>,
    /// Sentences removed for overlapping a noise event.
    pub dropped_sentences: Vec<[f64; 2]>,
    pub words: Vec<[f64; 2]>,
}

/// How the accuracy grid was cross-validated. A clip may appear in many
/// pairs, so plain stratified folds can put the same clip on both sides of a
/// split; `grouped` fold mode prevents that.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub fold_mode: crate::classify::FoldMode,
    pub folds: usize,
    /// False when some cell fell back to an unstratified split.
    pub stratified: bool,
    pub pairs: usize,
    pub clips: usize,
    pub max_pairs_per_clip: usize,
}

fn stage_err(stage: Stage, clip: &str, e: impl std::fmt::Display) -> Error {
    Error::Stage {
        stage: stage.to_string(),
        clip: clip.to_string(),
        message: e.to_string(),
    }
}

fn mkdir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn span(e: &crate::segment::EventSpan) -> [f64; 2] {
    [e.start_s, e.end_s]
}

/// Events come from the clip's annotation file; when it has no vocal span
/// (or there is no file) the energy baseline supplies vocal spans.
pub fn segment_clip(clip: &AudioClip, annotation: Option<&Path>, cfg: &SegmentationConfig) -> Result<ClipSegments> {
    let mut events = match annotation {
        Some(p) => detect_events(
            clip,
            &DetectorSource::ExternalAnnotations { path: p.to_path_buf() },
            cfg,
        )?,
        None => Vec::new(),
    };
    if !events.iter().any(|e| cfg.vocal_labels.contains(&e.label)) {
        let label = cfg.vocal_labels.first().cloned().unwrap_or_else(|| BARKING.to_string());
        events.extend(detect_events(clip, &DetectorSource::EnergyBaseline { label }, cfg)?);
    }
    let sentences = sentence_segments(&events, cfg);
    let clean = filter_noisy(&sentences, &events, cfg);
    let mut words = Vec::new();
    for s in &clean {
        words.extend(word_segments(clip, s, cfg)?.iter().map(span));
    }
    Ok(ClipSegments {
        clip_id: clip.id.clone(),
        duration_s: clip.duration_s(),
        dropped_sentences: sentences.iter().filter(|s| !clean.contains(s)).map(span).collect(),
        sentences: sentences.iter().map(span).collect(),
        words,
    })
}

/// The word spans of `clip` joined end to end; `None` without words.
pub fn word_audio(clip: &AudioClip, words: &[[f64; 2]]) -> Option<AudioClip> {
    let mut samples = Vec::new();
    for w in words {
        samples.extend_from_slice(&clip.slice(w[0], w[1]).samples);
    }
    if samples.is_empty() {
        return None;
    }
    AudioClip::new(clip.id.clone(), clip.sample_rate, samples).ok()
}

pub fn read_segments(path: &Path) -> Result<BTreeMap<String, ClipSegments>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in std::io::BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let s: ClipSegments = serde_json::from_str(&line)?;
        out.insert(s.clip_id.clone(), s);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Feature sets computed for dog clips: the configured ones plus
/// GeMAPS-lite, which the correlation analysis needs.
pub fn dog_feature_sets(config: &PipelineConfig) -> Vec<FeatureSetId> {
    FeatureSetId::ALL
        .into_iter()
        .filter(|s| *s == FeatureSetId::GemapsLite || config.feature_sets.contains(s))
        .collect()
}

pub fn dog_store(out: &Path) -> FeatureStore {
    FeatureStore::new(out.join("features").join("dog"))
}

pub fn host_store(out: &Path) -> FeatureStore {
    FeatureStore::new(out.join("features").join("host"))
}

struct Run<'a> {
    manifest: &'a Manifest,
    opts: &'a RunOptions,
    digests: OnceLock<Result<BTreeMap<String, String>>>,
}

impl Run<'_> {
    fn out(&self) -> &Path {
        &self.opts.out_dir
    }

    fn cfg(&self) -> &PipelineConfig {
        &self.opts.config
    }

    fn seed(&self, stage: Stage) -> u64 {
        rng::named_seed(self.opts.seed, stage.as_str())
    }

    /// Per clip: digest of the record, its audio and its annotation file.
    fn clip_digests(&self) -> Result<&BTreeMap<String, String>> {
        let r = self.digests.get_or_init(|| {
            self.manifest
                .clips
                .par_iter()
                .map(|c| {
                    let mut h = ContentHash::new();
                    h.json(c)?.file(&c.audio_path)?;
                    if let Some(a) = &c.annotation_path {
                        h.file(a)?;
                    }
                    Ok((c.id.clone(), h.finish()))
                })
                .collect()
        });
        match r {
            Ok(m) => Ok(m),
            Err(e) => Err(Error::InvalidArgument(e.to_string())),
        }
    }

    fn hash_clips(&self, h: &mut ContentHash, kind: Option<ClipKind>) -> Result<()> {
        let d = self.clip_digests()?;
        for c in &self.manifest.clips {
            if kind.is_none_or(|k| k == c.kind) {
                h.str(&c.id).str(&d[&c.id]);
            }
        }
        Ok(())
    }

    fn fingerprint(&self, stage: Stage) -> Result<(String, String)> {
        let out = self.out();
        let cfg = self.cfg();
        let mut i = ContentHash::new();
        let mut c = ContentHash::new();
        c.str(stage.as_str());
        match stage {
            Stage::Segment => {
                self.hash_clips(&mut i, Some(ClipKind::DogVocal))?;
                c.json(&cfg.segmentation)?;
            }
            Stage::Extract => {
                self.hash_clips(&mut i, None)?;
                i.file(&out.join(SEGMENTS_FILE))?;
                c.json(&dog_feature_sets(cfg))?;
            }
            Stage::Pair => {
                for d in self.manifest.dogs() {
                    i.json(d)?;
                }
                for set in dog_feature_sets(cfg) {
                    i.json(&featurized_ids(&dog_store(out), set)?)?;
                }
                c.json(&cfg.pairing)?.json(&self.seed(stage))?;
            }
            Stage::Train => {
                i.file(&out.join(PAIRS_FILE))?;
                for set in dog_feature_sets(cfg) {
                    i.file(&dog_store(out).path(set))?;
                }
                c.json(&cfg.feature_sets)?.json(&cfg.classify)?.json(&self.seed(stage))?;
            }
            Stage::Explain => {
                if cfg.explain.mode == ExplainMode::Pair {
                    i.file(&out.join(PAIRS_FILE))?;
                }
                for d in self.manifest.clips.iter() {
                    i.str(&d.id).str(&d.source_video_id).str(d.lang_env.to_string().as_str());
                }
                i.file(&dog_store(out).path(cfg.explain.feature_set))?;
                i.file(&dog_store(out).path(FeatureSetId::GemapsLite))?;
                i.file(&host_store(out).path(FeatureSetId::GemapsLite))?;
                c.json(&cfg.explain)?.json(&cfg.classify.hyper)?.json(&self.seed(stage))?;
            }
            Stage::Speed => {
                self.hash_clips(&mut i, None)?;
                i.file(&out.join(SEGMENTS_FILE))?;
                c.json(&cfg.syllables)?;
            }
            Stage::Report => {
                for p in super::report::REPORT_SOURCES {
                    i.str(p).file(&out.join(p))?;
                }
            }
        }
        Ok((i.finish(), c.finish()))
    }

    fn execute(&self, stage: Stage) -> Result<Vec<PathBuf>> {
        match stage {
            Stage::Segment => self.segment(),
            Stage::Extract => self.extract(),
            Stage::Pair => self.pair(),
            Stage::Train => self.train(),
            Stage::Explain => self.explain(),
            Stage::Speed => self.speed(),
            Stage::Report => write_report(self.out()),
        }
    }

    fn segment(&self) -> Result<Vec<PathBuf>> {
        let cfg = &self.cfg().segmentation;
        let dogs: Vec<&ClipRecord> = self.manifest.dogs().collect();
        let rows: Vec<ClipSegments> = dogs
            .par_iter()
            .map(|r| {
                let clip = load_canonical(&r.audio_path).map_err(|e| stage_err(Stage::Segment, &r.id, e))?;
                let clip = AudioClip { id: r.id.clone(), ..clip };
                segment_clip(&clip, r.annotation_path.as_deref(), cfg).map_err(|e| stage_err(Stage::Segment, &r.id, e))
            })
            .collect::<Result<_>>()?;
        write_jsonl(&self.out().join(SEGMENTS_FILE), &rows)?;
        Ok(vec![SEGMENTS_FILE.into()])
    }

    fn extract(&self) -> Result<Vec<PathBuf>> {
        let out = self.out();
        let segments = read_segments(&out.join(SEGMENTS_FILE))?;
        let sets = dog_feature_sets(self.cfg());
        let dogs: Vec<&ClipRecord> = self.manifest.dogs().collect();
        // Per dog: the vectors, or the reason the clip was dropped.
        type Extracted = (String, Option<(Vec<FeatureVector>, String)>);
        let results: Vec<Extracted> = dogs
            .par_iter()
            .map(|r| {
                let fail = |e: Error| stage_err(Stage::Extract, &r.id, e);
                let seg = segments
                    .get(&r.id)
                    .ok_or_else(|| fail(Error::InvalidArgument("no segmentation".into())))?;
                let clip = load_canonical(&r.audio_path).map_err(fail)?;
                let clip = AudioClip { id: r.id.clone(), ..clip };
                let Some(words) = word_audio(&clip, &seg.words) else {
                    return Ok((r.id.clone(), None));
                };
                let mut v = Vec::new();
                for set in &sets {
                    match extract(&words, *set) {
                        Ok(f) => v.push(f),
                        Err(e @ Error::ClipTooShort(_)) => return Ok((r.id.clone(), Some((Vec::new(), e.to_string())))),
                        Err(e) => return Err(fail(e)),
                    }
                }
                Ok((r.id.clone(), Some((v, String::new()))))
            })
            .collect::<Result<_>>()?;
        let mut dropped = BTreeMap::new();
        let mut by_set: Vec<Vec<FeatureVector>> = vec![Vec::new(); sets.len()];
        for (id, res) in results {
            match res {
                None => {
                    dropped.insert(id, "no clean words".to_string());
                }
                Some((v, why)) if v.is_empty() => {
                    dropped.insert(id, why);
                }
                Some((v, _)) => {
                    for (k, f) in v.into_iter().enumerate() {
                        by_set[k].push(f);
                    }
                }
            }
        }
        for (id, why) in &dropped {
            log::warn!("extract: dropping {id}: {why}");
        }
        let hosts: Vec<&ClipRecord> = self.manifest.hosts().collect();
        let host_vectors: Vec<FeatureVector> = hosts
            .par_iter()
            .map(|r| {
                let fail = |e: Error| stage_err(Stage::Extract, &r.id, e);
                let clip = load_canonical(&r.audio_path).map_err(fail)?;
                let clip = AudioClip { id: r.id.clone(), ..clip };
                extract(&clip, FeatureSetId::GemapsLite).map_err(fail)
            })
            .collect::<Result<_>>()?;

        let dstore = dog_store(out);
        let hstore = host_store(out);
        mkdir(dstore.dir())?;
        mkdir(hstore.dir())?;
        let mut outputs = Vec::new();
        for (set, v) in sets.iter().zip(&by_set) {
            dstore.write(*set, v)?;
            outputs.push(Path::new("features").join("dog").join(format!("{set}.csv")));
        }
        hstore.write(FeatureSetId::GemapsLite, &host_vectors)?;
        outputs.push(Path::new("features").join("host").join(format!("{}.csv", FeatureSetId::GemapsLite)));
        write_json(&out.join("features").join("dropped.json"), &dropped)?;
        outputs.push(Path::new("features").join("dropped.json"));
        Ok(outputs)
    }

    fn pair(&self) -> Result<Vec<PathBuf>> {
        let out = self.out();
        let store = dog_store(out);
        let mut keep: Option<BTreeSet<String>> = None;
        for set in dog_feature_sets(self.cfg()) {
            let ids: BTreeSet<String> = featurized_ids(&store, set)?.into_iter().collect();
            keep = Some(match keep {
                None => ids,
                Some(k) => k.intersection(&ids).cloned().collect(),
            });
        }
        let keep = keep.unwrap_or_default();
        let records: Vec<ClipRecord> = self.manifest.dogs().filter(|d| keep.contains(&d.id)).cloned().collect();
        let p = &self.cfg().pairing;
        let set = build_pairs(&records, p.per_class_quota, self.seed(Stage::Pair), p.cos_threshold)?;
        write_pairs(&out.join(PAIRS_FILE), &set.pairs)?;
        let counts = set.counts();
        let summary: BTreeMap<String, serde_json::Value> = PairClass::ALL
            .into_iter()
            .map(|c| {
                (
                    format!("{c:?}"),
                    serde_json::json!({"available": set.available[c.index()], "selected": counts[c.index()]}),
                )
            })
            .collect();
        write_json(&out.join("pairs_summary.json"), &summary)?;
        Ok(vec![PAIRS_FILE.into(), "pairs_summary.json".into()])
    }

    fn train(&self) -> Result<Vec<PathBuf>> {
        let out = self.out();
        let cfg = self.cfg();
        let pairs = read_pairs(&out.join(PAIRS_FILE))?;
        if pairs.is_empty() {
            return Err(stage_err(Stage::Train, "(all)", "no context-matched pairs"));
        }
        let store = dog_store(out);
        let datasets = cfg
            .feature_sets
            .iter()
            .map(|s| Ok((*s, pair_dataset(&pairs, &store.read_map(*s)?, *s)?)))
            .collect::<Result<Vec<_>>>()?;
        let c = &cfg.classify;
        let seed = self.seed(Stage::Train);
        let grid = accuracy_grid(&datasets, &c.families, &c.hyper, c.folds, c.fold_mode, seed);
        let dir = out.join("train");
        mkdir(&dir.join("cv"))?;
        grid.write_csv(&dir.join("accuracy_grid.csv"))?;
        let mut uses = BTreeMap::<&str, usize>::new();
        for p in &pairs {
            *uses.entry(&p.left).or_default() += 1;
            *uses.entry(&p.right).or_default() += 1;
        }
        let settings = TrainSettings {
            fold_mode: c.fold_mode,
            folds: c.folds,
            stratified: grid.cells.iter().all(|cell| cell.result.as_ref().map_or(true, |r| r.stratified)),
            pairs: pairs.len(),
            clips: uses.len(),
            max_pairs_per_clip: uses.values().copied().max().unwrap_or(0),
        };
        write_json(&dir.join("settings.json"), &settings)?;
        let mut outputs = vec![PathBuf::from("train/accuracy_grid.csv"), PathBuf::from("train/settings.json")];
        for cell in &grid.cells {
            let name = format!("{}_{}.json", cell.feature_set, cell.family.short());
            write_json(&dir.join("cv").join(&name), &cell.result)?;
            outputs.push(Path::new("train").join("cv").join(name));
        }
        Ok(outputs)
    }

    fn explain(&self) -> Result<Vec<PathBuf>> {
        let out = self.out();
        let cfg = &self.cfg().explain;
        let seed = self.seed(Stage::Explain);
        let dir = out.join("explain");
        mkdir(&dir)?;
        let dstore = dog_store(out);
        let features = dstore.read(cfg.feature_set)?;
        let ds = match cfg.mode {
            ExplainMode::Clip => clip_dataset(self.manifest, &features)?,
            ExplainMode::Pair => {
                let pairs = read_pairs(&out.join(PAIRS_FILE))?;
                let map = features.into_iter().map(|f| (f.clip_id.clone(), f)).collect();
                pair_dataset(&pairs, &map, cfg.feature_set)?
            }
        };
        if ds.is_empty() {
            return Err(stage_err(Stage::Explain, "(all)", "nothing to explain"));
        }
        let model = train(cfg.family, &ds, &self.cfg().classify.hyper, rng::sub_seed(seed, 0))
            .map_err(|e| stage_err(Stage::Explain, "(all)", e))?;
        model.save(&dir.join("model.json"))?;
        let rows = mean_abs_shap(&model, &ds, &cfg.shap, rng::sub_seed(seed, 1))?;
        let mut outputs = vec![PathBuf::from("explain/model.json"), "explain/attribution.csv".into()];
        match cfg.mode {
            ExplainMode::Clip => write_attribution_csv(&rows, &dir.join("attribution.csv"))?,
            ExplainMode::Pair => {
                write_attribution_csv(&rows, &dir.join("attribution_pairs.csv"))?;
                write_attribution_csv(&fold_sides(&rows, cfg.shap.prominence_cutoff), &dir.join("attribution.csv"))?;
                outputs.push("explain/attribution_pairs.csv".into());
            }
        }

        let video = |id: &str| self.manifest.clip(id).map(|c| c.source_video_id.clone());
        let tag = |v: Vec<FeatureVector>| -> Vec<VideoFeatures> {
            v.into_iter()
                .filter_map(|f| {
                    video(&f.clip_id).map(|video_id| VideoFeatures { video_id, features: f })
                })
                .collect()
        };
        let dogs = tag(dstore.read(FeatureSetId::GemapsLite)?);
        let hosts = tag(host_store(out).read(FeatureSetId::GemapsLite)?);
        if hosts.is_empty() || dogs.is_empty() {
            log::warn!("explain: no host speech to correlate with");
        } else {
            let names: Vec<String> = GEMAPS_LITE_NAMES.iter().map(|s| s.to_string()).collect();
            let rows = correlate_pairs(&dogs, &hosts, &names, rng::sub_seed(seed, 2))?;
            write_correlation_csv(&rows, &dir.join("correlation.csv"))?;
            outputs.push("explain/correlation.csv".into());
        }
        Ok(outputs)
    }

    fn speed(&self) -> Result<Vec<PathBuf>> {
        let out = self.out();
        let cfg = &self.cfg().syllables;
        let segments = read_segments(&out.join(SEGMENTS_FILE))?;
        let results: Vec<Option<(ClipRate, Vec<f64>)>> = self
            .manifest
            .clips
            .par_iter()
            .map(|r| {
                let fail = |e: Error| stage_err(Stage::Speed, &r.id, e);
                let clip = load_canonical(&r.audio_path).map_err(fail)?;
                let clip = AudioClip { id: r.id.clone(), ..clip };
                let unit = match r.kind {
                    ClipKind::HostSpeech => Some(clip),
                    ClipKind::DogVocal => {
                        let seg = segments
                            .get(&r.id)
                            .ok_or_else(|| fail(Error::InvalidArgument("no segmentation".into())))?;
                        word_audio(&clip, &seg.words)
                    }
                };
                let Some(unit) = unit else { return Ok(None) };
                let group = speed_group(r);
                if let Some(n) = r.syllable_count {
                    let rate = n as f64 / unit.duration_s();
                    return Ok(Some((ClipRate { clip_id: r.id.clone(), group, rate_per_s: rate, from_count: true }, vec![])));
                }
                let u = syllable_units(&unit, cfg).map_err(fail)?;
                Ok(Some((
                    ClipRate { clip_id: r.id.clone(), group, rate_per_s: u.rate_per_s, from_count: false },
                    u.nuclei_times_s,
                )))
            })
            .collect::<Result<_>>()?;
        let results: Vec<(ClipRate, Vec<f64>)> = results.into_iter().flatten().collect();
        let rates: Vec<ClipRate> = results.iter().map(|(r, _)| r.clone()).collect();
        let groups: Vec<String> = SPEED_GROUPS.iter().map(|s| s.to_string()).collect();
        let report = speed_report(&rates, &groups);
        let dir = out.join("speed");
        mkdir(&dir)?;
        write_speed_csv(&report, &dir.join("speed.csv"))?;

        let path = dir.join("rates.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["clip_id", "group", "rate_per_s", "from_count"])?;
        for r in &rates {
            w.write_record([r.clip_id.clone(), r.group.clone(), r.rate_per_s.to_string(), r.from_count.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("histogram.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["group", "bin_lo", "bin_hi", "count"])?;
        for row in &report {
            for (k, n) in row.histogram.iter().enumerate() {
                let hi = if k + 1 == HIST_BINS { "inf".to_string() } else { ((k + 1) as f64 * HIST_BIN_WIDTH).to_string() };
                w.write_record([row.group.clone(), (k as f64 * HIST_BIN_WIDTH).to_string(), hi, n.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let nuclei: Vec<serde_json::Value> = results
            .iter()
            .map(|(r, t)| serde_json::json!({"clip_id": r.clip_id, "nuclei_times_s": t}))
            .collect();
        write_jsonl(&dir.join("nuclei.jsonl"), &nuclei)?;
        Ok(["speed.csv", "rates.csv", "histogram.csv", "nuclei.jsonl"]
            .iter()
            .map(|f| Path::new("speed").join(f))
            .collect())
    }
}

/// Dog clips with stored vectors, labelled En = 0, Ja = 1 and grouped by
/// source video.
pub fn clip_dataset(manifest: &Manifest, features: &[FeatureVector]) -> Result<Dataset> {
    let mut rows: Vec<(&FeatureVector, &ClipRecord)> = Vec::new();
    for f in features {
        let r = manifest
            .clip(&f.clip_id)
            .ok_or_else(|| Error::InvalidArgument(format!("features for unknown clip {}", f.clip_id)))?;
        rows.push((f, r));
    }
    rows.sort_by(|a, b| a.0.clip_id.cmp(&b.0.clip_id));
    let names = rows.first().map(|(f, _)| f.names.clone()).unwrap_or_default();
    let ds = Dataset {
        feature_names: names,
        x: rows.iter().map(|(f, _)| f.values.clone()).collect(),
        y: rows.iter().map(|(_, r)| usize::from(r.lang_env == LangEnv::Ja)).collect(),
        n_classes: 2,
        row_ids: rows.iter().map(|(f, _)| f.clip_id.clone()).collect(),
        groups: rows.iter().map(|(_, r)| r.source_video_id.clone()).collect(),
    };
    ds.validate()?;
    Ok(ds)
}

pub const SPEED_GROUPS: [&str; 4] = ["En/dog_vocal", "Ja/dog_vocal", "En/host_speech", "Ja/host_speech"];

pub fn speed_group(r: &ClipRecord) -> String {
    format!("{}/{}", r.lang_env, r.kind.as_str())
}

/// Clip ids with stored vectors of `set`, or empty when the file is absent.
pub fn featurized_ids(store: &FeatureStore, set: FeatureSetId) -> Result<Vec<String>> {
    if !store.contains(set) {
        return Ok(Vec::new());
    }
    Ok(store.read(set)?.into_iter().map(|v| v.clip_id).collect())
}

/// Runs the requested stages in pipeline order, skipping those whose inputs
/// and configuration are unchanged since their last run.
pub fn run_stages(manifest: &Manifest, stages: &[Stage], opts: &RunOptions) -> Result<Vec<StageOutcome>> {
    opts.config.validate()?;
    let out = &opts.out_dir;
    mkdir(out)?;
    let mut ledger = RunLedger::load(out)?;
    let order: Vec<Stage> = Stage::ALL.into_iter().filter(|s| stages.contains(s)).collect();
    let pair_explain = opts.config.explain.mode == ExplainMode::Pair;
    for s in &order {
        for d in s.dependencies(pair_explain) {
            if !order.contains(d) && !ledger.complete(*d, out) {
                return Err(Error::MissingDependency {
                    stage: s.to_string(),
                    dependency: d.to_string(),
                });
            }
        }
    }
    let run = Run {
        manifest,
        opts,
        digests: OnceLock::new(),
    };
    let mut outcomes = Vec::new();
    for stage in order {
        let (input_hash, config_hash) = run.fingerprint(stage)?;
        if !opts.force && ledger.is_fresh(stage, &input_hash, &config_hash, out) {
            log::info!("{stage}: up to date");
            outcomes.push(StageOutcome {
                stage,
                skipped: true,
                outputs: ledger.entries[&stage].output_paths.clone(),
            });
            continue;
        }
        log::info!("{stage}: running");
        let outputs = run.execute(stage)?;
        ledger.entries.insert(
            stage,
            LedgerEntry {
                stage,
                input_hash,
                config_hash,
                output_paths: outputs.clone(),
            },
        );
        ledger.save(out)?;
        outcomes.push(StageOutcome {
            stage,
            skipped: false,
            outputs,
        });
    }
    Ok(outcomes)
}
