use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::Manifest;
use crate::error::{Error, Result};
use crate::pairing::{ClipKind, LangEnv, Scene};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub kind: ClipKind,
    pub n: usize,
    pub mean_len_s: f64,
    /// Population variance.
    pub var_len_s: f64,
    /// Percentage of this kind's clips per language environment.
    pub lang_pct: BTreeMap<LangEnv, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneShare {
    pub scene: Scene,
    pub n: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Only kinds present in the manifest.
    pub kinds: Vec<KindStats>,
    /// Dog clips per scene; every scene listed.
    pub scenes: Vec<SceneShare>,
}

/// Clip lengths come from `end_s - start_s`.
pub fn corpus_stats(manifest: &Manifest) -> CorpusStats {
    let mut kinds = Vec::new();
    for kind in [ClipKind::DogVocal, ClipKind::HostSpeech] {
        let clips: Vec<_> = manifest.clips.iter().filter(|c| c.kind == kind).collect();
        if clips.is_empty() {
            continue;
        }
        let n = clips.len() as f64;
        let lens: Vec<f64> = clips.iter().map(|c| c.duration_s()).collect();
        let mean = lens.iter().sum::<f64>() / n;
        let var = lens.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
        let lang_pct = [LangEnv::En, LangEnv::Ja]
            .into_iter()
            .map(|l| (l, 100.0 * clips.iter().filter(|c| c.lang_env == l).count() as f64 / n))
            .collect();
        kinds.push(KindStats {
            kind,
            n: clips.len(),
            mean_len_s: mean,
            var_len_s: var,
            lang_pct,
        });
    }
    let scene_of: Vec<Scene> = manifest.dogs().filter_map(|c| c.context.as_ref().map(|x| x.scene)).collect();
    let scenes = Scene::ALL
        .into_iter()
        .map(|s| {
            let n = scene_of.iter().filter(|x| **x == s).count();
            SceneShare {
                scene: s,
                n,
                pct: if scene_of.is_empty() { 0.0 } else { 100.0 * n as f64 / scene_of.len() as f64 },
            }
        })
        .collect();
    CorpusStats { kinds, scenes }
}

/// `stats.csv` (one row per kind) and `scenes.csv`.
pub fn write_stats(stats: &CorpusStats, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("stats.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["kind", "n", "mean_len_s", "var_len_s", "en_pct", "ja_pct"])?;
    for k in &stats.kinds {
        w.write_record([
            k.kind.as_str().to_string(),
            k.n.to_string(),
            format!("{:.3}", k.mean_len_s),
            format!("{:.3}", k.var_len_s),
            format!("{:.2}", k.lang_pct[&LangEnv::En]),
            format!("{:.2}", k.lang_pct[&LangEnv::Ja]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    let path = dir.join("scenes.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["scene", "n", "pct"])?;
    for s in &stats.scenes {
        w.write_record([format!("{:?}", s.scene), s.n.to_string(), format!("{:.2}", s.pct)])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairing::{ClipRecord, Context, ACTIVITY_DIM};
    use std::path::PathBuf;

    fn rec(id: &str, kind: ClipKind, lang: LangEnv, len: f64, scene: Option<Scene>) -> ClipRecord {
        ClipRecord {
            id: id.into(),
            kind,
            lang_env: lang,
            audio_path: PathBuf::from("x.wav"),
            start_s: 10.0,
            end_s: 10.0 + len,
            source_video_id: "v".into(),
            context: scene.map(|s| Context {
                scene: s,
                location: "park".into(),
                activity: vec![1.0; ACTIVITY_DIM],
            }),
            annotation_path: None,
            syllable_count: None,
        }
    }

    fn manifest(clips: Vec<ClipRecord>) -> Manifest {
        Manifest {
            path: PathBuf::from("m.jsonl"),
            header: Default::default(),
            clips,
        }
    }

    #[test]
    fn empty_manifest_has_no_rows() {
        let s = corpus_stats(&manifest(vec![]));
        assert!(s.kinds.is_empty());
        assert!(s.scenes.iter().all(|x| x.n == 0 && x.pct == 0.0));
    }

    #[test]
    fn equal_lengths_have_zero_variance() {
        let s = corpus_stats(&manifest(vec![
            rec("a", ClipKind::DogVocal, LangEnv::En, 1.0, Some(Scene::ALL[0])),
            rec("b", ClipKind::DogVocal, LangEnv::Ja, 1.0, Some(Scene::ALL[0])),
        ]));
        assert_eq!(s.kinds.len(), 1);
        assert!((s.kinds[0].mean_len_s - 1.0).abs() < 1e-12);
        assert!(s.kinds[0].var_len_s.abs() < 1e-12);
        assert_eq!(s.kinds[0].lang_pct[&LangEnv::En], 50.0);
        assert_eq!(s.scenes[0].pct, 100.0);
    }

    #[test]
    fn variance_and_shares() {
        let s = corpus_stats(&manifest(vec![
            rec("a", ClipKind::DogVocal, LangEnv::En, 0.5, Some(Scene::ALL[1])),
            rec("b", ClipKind::DogVocal, LangEnv::En, 1.5, Some(Scene::ALL[2])),
            rec("c", ClipKind::DogVocal, LangEnv::Ja, 1.0, Some(Scene::ALL[2])),
            rec("h", ClipKind::HostSpeech, LangEnv::Ja, 2.0, None),
        ]));
        let dog = &s.kinds[0];
        assert_eq!(dog.n, 3);
        assert!((dog.var_len_s - 1.0 / 6.0).abs() < 1e-12);
        assert!((dog.lang_pct[&LangEnv::En] - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.kinds[1].kind, ClipKind::HostSpeech);
        assert!((s.scenes[2].pct - 200.0 / 3.0).abs() < 1e-12);
        let dir = tempfile::tempdir().unwrap();
        write_stats(&s, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("stats.csv")).unwrap();
        assert!(text.contains("dog_vocal,3,1.000,0.167,66.67,33.33"), "{text}");
    }
}
