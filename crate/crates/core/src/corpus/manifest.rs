//! JSON-lines manifest: a header line, then one clip record per line.
//!
//! ```text
//! {"version":1,"declared_locations":["park","home"],"defaults":{...}}
//! {"id":"d1","kind":"dog_vocal","lang_env":"En","audio_path":"audio/d1.wav",...}
//! ```
//!
//! Relative paths resolve against the manifest's directory. A context's
//! `activity` is either an inline array of 768 numbers or
//! `{"path": "..."}` naming a file of 768 little-endian `f32`s.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::pairing::{ClipKind, ClipRecord, Context, LangEnv, Scene, ACTIVITY_DIM};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub version: u32,
    #[serde(default)]
    pub declared_locations: Vec<String>,
    #[serde(default)]
    pub defaults: PipelineConfig,
}

impl Default for ManifestHeader {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            declared_locations: Vec::new(),
            defaults: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActivityRef {
    Inline(Vec<f64>),
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestContext {
    pub scene: Scene,
    pub location: String,
    pub activity: ActivityRef,
}

/// One clip line as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub kind: ClipKind,
    pub lang_env: LangEnv,
    pub audio_path: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
    pub source_video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<ManifestContext>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllable_count: Option<u32>,
}

/// A validated manifest with paths resolved and activities loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub header: ManifestHeader,
    pub clips: Vec<ClipRecord>,
}

impl Manifest {
    pub fn clip(&self, id: &str) -> Option<&ClipRecord> {
        self.clips.iter().find(|c| c.id == id)
    }

    pub fn dogs(&self) -> impl Iterator<Item = &ClipRecord> {
        self.clips.iter().filter(|c| c.kind == ClipKind::DogVocal)
    }

    pub fn hosts(&self) -> impl Iterator<Item = &ClipRecord> {
        self.clips.iter().filter(|c| c.kind == ClipKind::HostSpeech)
    }
}

pub fn read_activity_file(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != ACTIVITY_DIM * 4 {
        return Err(Error::DimensionMismatch {
            expected: ACTIVITY_DIM,
            got: bytes.len() / 4,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn write_activity_file(path: &Path, activity: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = activity.iter().flat_map(|v| v.to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_manifest(path: &Path, header: &ManifestHeader, entries: &[ManifestEntry]) -> Result<()> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses and validates a manifest, collecting every problem as a
/// `line N: ...` message before failing. Audio is not opened.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut errors = Vec::new();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let header = match lines.next() {
        None => ManifestHeader::default(),
        Some((n, l)) => match serde_json::from_str::<ManifestHeader>(l) {
            Ok(h) => {
                if h.version != MANIFEST_VERSION {
                    errors.push(format!(
                        "line {n}: unsupported manifest version {} (expected {MANIFEST_VERSION})",
                        h.version
                    ));
                }
                if let Err(e) = h.defaults.validate() {
                    errors.push(format!("line {n}: defaults: {e}"));
                }
                h
            }
            Err(e) => {
                errors.push(format!("line {n}: bad header: {e}"));
                ManifestHeader::default()
            }
        },
    };
    let locations: BTreeSet<&str> = header.declared_locations.iter().map(String::as_str).collect();

    let mut clips = Vec::new();
    let mut seen = BTreeSet::new();
    for (n, l) in lines {
        let entry: ManifestEntry = match serde_json::from_str(l) {
            Ok(e) => e,
            Err(e) => {
                errors.push(format!("line {n}: {e}"));
                continue;
            }
        };
        let mut err = |m: String| errors.push(format!("line {n}: clip {}: {m}", entry.id));
        if entry.id.is_empty() {
            err("empty id".into());
        }
        if !seen.insert(entry.id.clone()) {
            err("duplicate id".into());
        }
        if !(entry.start_s >= 0.0 && entry.end_s > entry.start_s) {
            err(format!("need 0 <= start_s < end_s, got {}..{}", entry.start_s, entry.end_s));
        }
        if entry.source_video_id.is_empty() {
            err("empty source_video_id".into());
        }
        let audio_path = resolve(&base, &entry.audio_path);
        if !audio_path.is_file() {
            err(format!("audio file {} not found", audio_path.display()));
        }
        let annotation_path = entry.annotation_path.as_ref().map(|p| resolve(&base, p));
        if let Some(p) = &annotation_path {
            if !p.is_file() {
                err(format!("annotation file {} not found", p.display()));
            }
        }
        let context = match (&entry.kind, &entry.context) {
            (ClipKind::DogVocal, None) => {
                err("dog_vocal clip has no context".into());
                None
            }
            (_, None) => None,
            (_, Some(c)) => {
                if !locations.is_empty() && !locations.contains(c.location.as_str()) {
                    err(format!("location '{}' is not declared", c.location));
                }
                let activity = match &c.activity {
                    ActivityRef::Inline(v) => Ok(v.clone()),
                    ActivityRef::File { path } => read_activity_file(&resolve(&base, path)),
                };
                match activity {
                    Ok(activity) => {
                        let ctx = Context {
                            scene: c.scene,
                            location: c.location.clone(),
                            activity,
                        };
                        match ctx.validate() {
                            Ok(()) if ctx.activity.iter().all(|v| *v == 0.0) => {
                                err("activity vector is all zeros".into());
                                None
                            }
                            Ok(()) => Some(ctx),
                            Err(e) => {
                                err(format!("activity: {e}"));
                                None
                            }
                        }
                    }
                    Err(e) => {
                        err(format!("activity: {e}"));
                        None
                    }
                }
            }
        };
        clips.push(ClipRecord {
            id: entry.id,
            kind: entry.kind,
            lang_env: entry.lang_env,
            audio_path,
            start_s: entry.start_s,
            end_s: entry.end_s,
            source_video_id: entry.source_video_id,
            context,
            annotation_path,
            syllable_count: entry.syllable_count,
        });
    }
    if !errors.is_empty() {
        return Err(Error::Manifest(errors));
    }
    Ok(Manifest {
        path: path.to_path_buf(),
        header,
        clips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, kind: ClipKind, ctx: Option<ManifestContext>) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            kind,
            lang_env: LangEnv::En,
            audio_path: "a.wav".into(),
            start_s: 0.0,
            end_s: 1.0,
            source_video_id: "v".into(),
            context: ctx,
            annotation_path: None,
            syllable_count: None,
        }
    }

    fn ctx(location: &str, activity: ActivityRef) -> Option<ManifestContext> {
        Some(ManifestContext {
            scene: Scene::Play,
            location: location.into(),
            activity,
        })
    }

    #[test]
    fn round_trip_with_activity_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.wav"), b"").unwrap();
        let act: Vec<f32> = (0..ACTIVITY_DIM).map(|i| i as f32 * 0.5).collect();
        write_activity_file(&dir.path().join("act.f32"), &act).unwrap();
        let header = ManifestHeader {
            declared_locations: vec!["park".into()],
            ..Default::default()
        };
        let entries = vec![
            entry("d1", ClipKind::DogVocal, ctx("park", ActivityRef::File { path: "act.f32".into() })),
            entry("d2", ClipKind::DogVocal, ctx("park", ActivityRef::Inline(vec![1.0; ACTIVITY_DIM]))),
            entry("h1", ClipKind::HostSpeech, None),
        ];
        let p = dir.path().join("m.jsonl");
        write_manifest(&p, &header, &entries).unwrap();
        let m = load_manifest(&p).unwrap();
        assert_eq!(m.clips.len(), 3);
        assert_eq!(m.clips[0].context.as_ref().unwrap().activity[3], 1.5);
        assert_eq!(m.clips[0].audio_path, dir.path().join("a.wav"));
        assert_eq!(m.dogs().count(), 2);
    }

    #[test]
    fn every_problem_reported_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.wav"), b"").unwrap();
        let header = ManifestHeader {
            declared_locations: vec!["park".into()],
            ..Default::default()
        };
        let mut bad_time = entry("d3", ClipKind::DogVocal, ctx("park", ActivityRef::Inline(vec![1.0; ACTIVITY_DIM])));
        bad_time.end_s = 0.0;
        let entries = vec![
            entry("d1", ClipKind::DogVocal, None),
            entry("d1", ClipKind::HostSpeech, None),
            entry("d2", ClipKind::DogVocal, ctx("moon", ActivityRef::Inline(vec![1.0; 5]))),
            bad_time,
        ];
        let p = dir.path().join("m.jsonl");
        write_manifest(&p, &header, &entries).unwrap();
        let mut text = std::fs::read_to_string(&p).unwrap();
        text.push_str("{not json}\n");
        std::fs::write(&p, text).unwrap();
        let Err(Error::Manifest(errs)) = load_manifest(&p) else {
            panic!("expected manifest errors");
        };
        let joined = errs.join("\n");
        for needle in [
            "line 2: clip d1: dog_vocal clip has no context",
            "line 3: clip d1: duplicate id",
            "line 4: clip d2: location 'moon' is not declared",
            "line 4: clip d2: activity",
            "line 5: clip d3: need 0 <= start_s < end_s",
            "line 6:",
        ] {
            assert!(joined.contains(needle), "missing '{needle}' in\n{joined}");
        }
    }

    #[test]
    fn empty_file_is_an_empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        std::fs::write(&p, "").unwrap();
        assert!(load_manifest(&p).unwrap().clips.is_empty());
        std::fs::write(&p, "{\"version\":7}\n").unwrap();
        assert!(load_manifest(&p).is_err());
    }
}
