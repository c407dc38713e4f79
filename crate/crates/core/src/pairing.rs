//! Context-matched clip pairs.
//!
//! Two vocal clips are paired when they share scene and location and their
//! activity vectors are nearly parallel. Pairs are ordered, so `(x, y)` and
//! `(y, x)` are distinct, and the label is the ordered pair of host
//! language environments.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{compare_feature_set, FeatureSetId, FeatureVector};
use crate::rng;

pub const ACTIVITY_DIM: usize = 768;
pub const DEFAULT_COS_THRESHOLD: f64 = 0.95;
/// Slack on the cosine comparison so a vector always matches itself.
const COS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scene {
    Alone,
    Bath,
    Eat,
    Fight,
    Play,
    Run,
    Stranger,
    Walk,
}

impl Scene {
    pub const ALL: [Scene; 8] = [
        Scene::Alone,
        Scene::Bath,
        Scene::Eat,
        Scene::Fight,
        Scene::Play,
        Scene::Run,
        Scene::Stranger,
        Scene::Walk,
    ];
}

impl FromStr for Scene {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scene::ALL
            .into_iter()
            .find(|v| format!("{v:?}").eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scene '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LangEnv {
    En,
    Ja,
}

impl fmt::Display for LangEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    DogVocal,
    HostSpeech,
}

impl ClipKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClipKind::DogVocal => "dog_vocal",
            ClipKind::HostSpeech => "host_speech",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub scene: Scene,
    pub location: String,
    pub activity: Vec<f64>,
}

impl Context {
    pub fn validate(&self) -> Result<()> {
        if self.activity.len() != ACTIVITY_DIM {
            return Err(Error::DimensionMismatch {
                expected: ACTIVITY_DIM,
                got: self.activity.len(),
            });
        }
        if self.activity.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("activity vector has a non-finite entry".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub id: String,
    pub kind: ClipKind,
    pub lang_env: LangEnv,
    pub audio_path: PathBuf,
    pub start_s: f64,
    pub end_s: f64,
    pub source_video_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Context>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_path: Option<PathBuf>,
    /// Manually counted syllables; overrides automatic nucleus counting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllable_count: Option<u32>,
}

impl ClipRecord {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairClass {
    EnEn,
    JaJa,
    EnJa,
    JaEn,
}

impl PairClass {
    pub const ALL: [PairClass; 4] = [PairClass::EnEn, PairClass::JaJa, PairClass::EnJa, PairClass::JaEn];

    pub fn from_langs(left: LangEnv, right: LangEnv) -> Self {
        match (left, right) {
            (LangEnv::En, LangEnv::En) => PairClass::EnEn,
            (LangEnv::Ja, LangEnv::Ja) => PairClass::JaJa,
            (LangEnv::En, LangEnv::Ja) => PairClass::EnJa,
            (LangEnv::Ja, LangEnv::En) => PairClass::JaEn,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        PairClass::ALL.get(i).copied()
    }
}

impl fmt::Display for PairClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for PairClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PairClass::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pair class '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClipPair {
    pub left: String,
    pub right: String,
    pub label: PairClass,
}

/// Pairs after quota sampling plus the number eligible per class before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub pairs: Vec<ClipPair>,
    pub available: [usize; 4],
}

impl PairSet {
    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for p in &self.pairs {
            c[p.label.index()] += 1;
        }
        c
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNormActivity);
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

pub fn context_match(a: &Context, b: &Context, cos_threshold: f64) -> Result<bool> {
    let cos = cosine(&a.activity, &b.activity)?;
    Ok(a.scene == b.scene && a.location == b.location && cos >= cos_threshold - COS_EPS)
}

/// Enumerates ordered context-matched pairs and samples up to `quota` per
/// class (all of them when `quota` is `None`). Output is sorted by
/// `(left, right)`.
pub fn build_pairs(
    records: &[ClipRecord],
    quota: Option<usize>,
    seed: u64,
    cos_threshold: f64,
) -> Result<PairSet> {
    type Member<'a> = (&'a ClipRecord, &'a Context, f64);
    let mut groups: BTreeMap<(Scene, &str), Vec<Member>> = BTreeMap::new();
    for r in records {
        if r.kind != ClipKind::DogVocal {
            return Err(Error::InvalidArgument(format!("{} is not a vocal clip", r.id)));
        }
        let ctx = r
            .context
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument(format!("{} has no context", r.id)))?;
        ctx.validate()?;
        let norm = ctx.activity.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNormActivity);
        }
        groups
            .entry((ctx.scene, ctx.location.as_str()))
            .or_default()
            .push((r, ctx, norm));
    }

    let groups: Vec<_> = groups.into_values().collect();
    let matched: Vec<Vec<ClipPair>> = groups
        .par_iter()
        .map(|g| {
            let mut out = Vec::new();
            for i in 0..g.len() {
                for j in i + 1..g.len() {
                    let (a, ca, na) = g[i];
                    let (b, cb, nb) = g[j];
                    let dot: f64 = ca.activity.iter().zip(&cb.activity).map(|(x, y)| x * y).sum();
                    if dot / (na * nb) >= cos_threshold - COS_EPS {
                        out.push(ClipPair {
                            left: a.id.clone(),
                            right: b.id.clone(),
                            label: PairClass::from_langs(a.lang_env, b.lang_env),
                        });
                        out.push(ClipPair {
                            left: b.id.clone(),
                            right: a.id.clone(),
                            label: PairClass::from_langs(b.lang_env, a.lang_env),
                        });
                    }
                }
            }
            out
        })
        .collect();

    let mut by_class: [Vec<ClipPair>; 4] = Default::default();
    for p in matched.into_iter().flatten() {
        if p.left != p.right {
            by_class[p.label.index()].push(p);
        }
    }
    let mut available = [0; 4];
    let mut pairs = Vec::new();
    for (c, mut cand) in by_class.into_iter().enumerate() {
        available[c] = cand.len();
        cand.sort();
        match quota {
            Some(q) if q < cand.len() => {
                let mut r = rng::sub_rng(seed, c as u64);
                let mut keep: Vec<usize> = sample(&mut r, cand.len(), q).into_vec();
                keep.sort_unstable();
                pairs.extend(keep.into_iter().map(|i| cand[i].clone()));
            }
            _ => pairs.extend(cand),
        }
    }
    pairs.sort();
    Ok(PairSet { pairs, available })
}

/// Design matrix of concatenated left/right feature vectors, rows ordered
/// by `(left, right)`. Groups are the left clip ids.
pub fn pair_dataset(
    pairs: &[ClipPair],
    features: &BTreeMap<String, FeatureVector>,
    set: FeatureSetId,
) -> Result<Dataset> {
    let mut sorted: Vec<&ClipPair> = pairs.iter().collect();
    sorted.sort();
    let lookup = |id: &str| -> Result<&FeatureVector> {
        let v = features
            .get(id)
            .ok_or_else(|| Error::MissingFeatures(format!("no {set} features for clip {id}")))?;
        if v.set_id != set {
            return Err(Error::FeatureSetMismatch {
                left: set.to_string(),
                right: v.set_id.to_string(),
            });
        }
        Ok(v)
    };
    let mut names = Vec::new();
    let mut x = Vec::with_capacity(sorted.len());
    let mut y = Vec::with_capacity(sorted.len());
    let mut row_ids = Vec::with_capacity(sorted.len());
    let mut groups = Vec::with_capacity(sorted.len());
    for p in sorted {
        let pv = compare_feature_set(lookup(&p.left)?, lookup(&p.right)?)?;
        if names.is_empty() {
            names = pv.names;
        }
        x.push(pv.values);
        y.push(p.label.index());
        row_ids.push(format!("{}|{}", p.left, p.right));
        groups.push(p.left.clone());
    }
    if names.is_empty() {
        names = pair_feature_names(set);
    }
    let ds = Dataset {
        feature_names: names,
        x,
        y,
        n_classes: 4,
        row_ids,
        groups,
    };
    ds.validate()?;
    Ok(ds)
}

fn pair_feature_names(set: FeatureSetId) -> Vec<String> {
    (0..set.dim())
        .map(|i| format!("{set}_{i:02}_left"))
        .chain((0..set.dim()).map(|i| format!("{set}_{i:02}_right")))
        .collect()
}

pub fn write_pairs(path: &Path, pairs: &[ClipPair]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["left", "right", "label"])?;
    for p in pairs {
        w.write_record([p.left.as_str(), p.right.as_str(), &p.label.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pairs(path: &Path) -> Result<Vec<ClipPair>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::InvalidArgument(format!(
                "{}: expected left,right,label",
                path.display()
            )));
        }
        out.push(ClipPair {
            left: rec[0].to_string(),
            right: rec[1].to_string(),
            label: rec[2].parse()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn activity(dir: usize) -> Vec<f64> {
        let mut v = vec![0.01; ACTIVITY_DIM];
        v[dir] = 1.0;
        v
    }

    fn ctx(scene: Scene, loc: &str, act: Vec<f64>) -> Context {
        Context {
            scene,
            location: loc.into(),
            activity: act,
        }
    }

    fn record(id: &str, lang: LangEnv, c: Context) -> ClipRecord {
        ClipRecord {
            id: id.into(),
            kind: ClipKind::DogVocal,
            lang_env: lang,
            audio_path: format!("{id}.wav").into(),
            start_s: 0.0,
            end_s: 1.0,
            source_video_id: "v".into(),
            context: Some(c),
            annotation_path: None,
            syllable_count: None,
        }
    }

    #[test]
    fn matching_rules() {
        let a = ctx(Scene::Eat, "kitchen", activity(0));
        assert!(context_match(&a, &a, 0.95).unwrap());
        let orth = ctx(Scene::Eat, "kitchen", {
            let mut v = vec![0.0; ACTIVITY_DIM];
            v[1] = 1.0;
            v
        });
        let a0 = ctx(Scene::Eat, "kitchen", {
            let mut v = vec![0.0; ACTIVITY_DIM];
            v[0] = 1.0;
            v
        });
        assert!(!context_match(&a0, &orth, 0.95).unwrap());
        let play = ctx(Scene::Play, "kitchen", activity(0));
        assert!(!context_match(&a, &play, 0.95).unwrap());
        let yard = ctx(Scene::Eat, "yard", activity(0));
        assert!(!context_match(&a, &yard, 0.95).unwrap());
        let zero = ctx(Scene::Eat, "kitchen", vec![0.0; ACTIVITY_DIM]);
        assert!(matches!(context_match(&a, &zero, 0.95), Err(Error::ZeroNormActivity)));
    }

    #[test]
    fn shared_context_counts() {
        let c = ctx(Scene::Walk, "park", activity(3));
        let recs = vec![
            record("e1", LangEnv::En, c.clone()),
            record("e2", LangEnv::En, c.clone()),
            record("j1", LangEnv::Ja, c.clone()),
            record("j2", LangEnv::Ja, c),
        ];
        let ps = build_pairs(&recs, None, 0, 0.95).unwrap();
        assert_eq!(ps.available, [2, 2, 4, 4]);
        assert_eq!(ps.counts(), [2, 2, 4, 4]);
        assert!(ps.pairs.iter().all(|p| p.left != p.right));
    }

    #[test]
    fn distinct_scenes_give_nothing() {
        let recs: Vec<ClipRecord> = Scene::ALL
            .iter()
            .enumerate()
            .map(|(i, s)| record(&format!("c{i}"), LangEnv::En, ctx(*s, "park", activity(0))))
            .collect();
        let ps = build_pairs(&recs, Some(10), 0, 0.95).unwrap();
        assert!(ps.pairs.is_empty());
        assert_eq!(ps.available, [0; 4]);
    }

    #[test]
    fn dataset_shape_and_order() {
        let c = ctx(Scene::Walk, "park", activity(3));
        let recs = vec![
            record("a", LangEnv::En, c.clone()),
            record("b", LangEnv::Ja, c),
        ];
        let ps = build_pairs(&recs, None, 0, 0.95).unwrap();
        let mut feats = BTreeMap::new();
        for (i, id) in ["a", "b"].iter().enumerate() {
            let names = (0..13).map(|k| format!("mfcc_{k:02}")).collect();
            let v = FeatureVector::new(FeatureSetId::Mfcc13, *id, names, vec![i as f64; 13]).unwrap();
            feats.insert(id.to_string(), v);
        }
        let ds = pair_dataset(&ps.pairs, &feats, FeatureSetId::Mfcc13).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 26));
        assert_eq!(ds.y, vec![PairClass::EnJa.index(), PairClass::JaEn.index()]);
        let mut rev = ps.pairs.clone();
        rev.reverse();
        assert_eq!(pair_dataset(&rev, &feats, FeatureSetId::Mfcc13).unwrap(), ds);
        let empty = pair_dataset(&[], &feats, FeatureSetId::Mfcc13).unwrap();
        assert!(empty.is_empty());
        feats.remove("b");
        let err = pair_dataset(&ps.pairs, &feats, FeatureSetId::Mfcc13).unwrap_err();
        assert!(err.to_string().contains('b'));
    }

    #[test]
    fn pairs_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pairs.csv");
        let pairs = vec![ClipPair {
            left: "x".into(),
            right: "y".into(),
            label: PairClass::JaEn,
        }];
        write_pairs(&p, &pairs).unwrap();
        assert_eq!(read_pairs(&p).unwrap(), pairs);
    }

    fn arb_records() -> impl Strategy<Value = Vec<ClipRecord>> {
        prop::collection::vec((0..2usize, 0..2usize, 0..3usize, any::<bool>()), 2..14).prop_map(|spec| {
            spec.into_iter()
                .enumerate()
                .map(|(i, (scene, loc, dir, ja))| {
                    let lang = if ja { LangEnv::Ja } else { LangEnv::En };
                    let c = ctx(Scene::ALL[scene], ["park", "home"][loc], activity(dir));
                    record(&format!("c{i:02}"), lang, c)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn pairs_match_brute_force(recs in arb_records(), quota in 0usize..6, seed in any::<u64>()) {
            let all = build_pairs(&recs, None, seed, 0.95).unwrap();
            let mut oracle = Vec::new();
            for a in &recs {
                for b in &recs {
                    let (ca, cb) = (a.context.as_ref().unwrap(), b.context.as_ref().unwrap());
                    if a.id != b.id && context_match(ca, cb, 0.95).unwrap() {
                        oracle.push(ClipPair {
                            left: a.id.clone(),
                            right: b.id.clone(),
                            label: PairClass::from_langs(a.lang_env, b.lang_env),
                        });
                    }
                }
            }
            oracle.sort();
            prop_assert_eq!(&all.pairs, &oracle);

            let q = build_pairs(&recs, Some(quota), seed, 0.95).unwrap();
            let again = build_pairs(&recs, Some(quota), seed, 0.95).unwrap();
            prop_assert_eq!(&q, &again);
            for c in 0..4 {
                prop_assert_eq!(q.counts()[c], quota.min(q.available[c]));
            }
            let by_id: BTreeMap<&str, &ClipRecord> = recs.iter().map(|r| (r.id.as_str(), r)).collect();
            for p in &q.pairs {
                prop_assert!(oracle.contains(p));
                let want = PairClass::from_langs(by_id[p.left.as_str()].lang_env, by_id[p.right.as_str()].lang_env);
                prop_assert_eq!(p.label, want);
            }
        }

        #[test]
        fn match_is_symmetric(d1 in 0..4usize, d2 in 0..4usize, s in 0..2usize) {
            let a = ctx(Scene::ALL[s], "x", activity(d1));
            let b = ctx(Scene::Eat, "x", activity(d2));
            prop_assert_eq!(context_match(&a, &b, 0.95).unwrap(), context_match(&b, &a, 0.95).unwrap());
            prop_assert!(context_match(&a, &a, 0.95).unwrap());
        }
    }
}
