use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use barklab_core::audio::{load_audio, write_wav, WavEncoding};
use barklab_core::corpus::{load_manifest, run_stages, Manifest, PipelineConfig, RunOptions, Stage};
use barklab_core::synth::{generate, HostSpec, SynthSpec};
use barklab_core::{ClipKind, FeatureSetId};

fn corpus(dir: &Path) -> Manifest {
    let spec = SynthSpec {
        n_clips_per_group: 8,
        seed: 5,
        host: HostSpec {
            clips_per_video: [1, 1],
            ..HostSpec::default()
        },
        ..SynthSpec::default()
    };
    let out = generate(&spec, dir, &PipelineConfig::default()).unwrap();
    load_manifest(&out.manifest_path).unwrap()
}

fn options(out: &Path, seed: u64) -> RunOptions {
    let mut config = PipelineConfig {
        feature_sets: vec![FeatureSetId::GemapsLite],
        ..PipelineConfig::default()
    };
    config.classify.folds = 3;
    RunOptions {
        out_dir: out.to_path_buf(),
        seed,
        config,
        force: false,
    }
}

/// Every file under `dir`, keyed by relative path.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                acc.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(dir, dir, &mut acc);
    acc
}

fn ran(outcomes: &[barklab_core::corpus::StageOutcome]) -> BTreeSet<Stage> {
    outcomes.iter().filter(|o| !o.skipped).map(|o| o.stage).collect()
}

fn halve_gain(path: &Path) {
    let clip = load_audio(path).unwrap();
    write_wav(&clip.scaled(0.5), path, WavEncoding::Float32).unwrap();
}

/// First CSV column, header excluded.
fn ids(bytes: Option<&Vec<u8>>) -> Vec<String> {
    let text = String::from_utf8(bytes.cloned().unwrap_or_default()).unwrap();
    text.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect()
}

/// Which stages must re-run when the audio of one clip of `kind` changes,
/// given the artifact files that actually changed. Each stage lists what it
/// reads; a stage re-runs when any of it differs.
fn expected_reruns(kind: ClipKind, before: &BTreeMap<PathBuf, Vec<u8>>, after: &BTreeMap<PathBuf, Vec<u8>>) -> BTreeSet<Stage> {
    let changed = |p: &str| before.get(Path::new(p)) != after.get(Path::new(p));
    let dog_ids = |t: &BTreeMap<PathBuf, Vec<u8>>| ids(t.get(Path::new("features/dog/gemaps_lite.csv")));
    let mut out = BTreeSet::new();
    let mut add = |s, cond: bool| {
        if cond {
            out.insert(s);
        }
    };
    add(Stage::Segment, kind == ClipKind::DogVocal);
    add(Stage::Extract, true);
    add(Stage::Pair, dog_ids(before) != dog_ids(after));
    add(Stage::Train, changed("pairs.csv") || changed("features/dog/gemaps_lite.csv"));
    add(
        Stage::Explain,
        changed("features/dog/gemaps_lite.csv") || changed("features/host/gemaps_lite.csv"),
    );
    add(Stage::Speed, true);
    add(
        Stage::Report,
        barklab_core::corpus::REPORT_SOURCES.iter().any(|p| changed(p)),
    );
    out
}

fn audio_change_reruns_dependents(kind: ClipKind) -> BTreeSet<Stage> {
    let dir = tempfile::tempdir().unwrap();
    let m = corpus(&dir.path().join("corpus"));
    let run = dir.path().join("run");
    let opts = options(&run, 1);
    assert_eq!(ran(&run_stages(&m, &Stage::ALL, &opts).unwrap()).len(), 7);
    let before = tree(&run);

    let clip = m.clips.iter().find(|c| c.kind == kind).unwrap();
    halve_gain(&clip.audio_path);
    let outcomes = run_stages(&m, &Stage::ALL, &opts).unwrap();
    let after = tree(&run);
    assert_eq!(ran(&outcomes), expected_reruns(kind, &before, &after), "{kind:?}");

    // A skipped stage leaves its outputs untouched.
    for o in outcomes.iter().filter(|o| o.skipped) {
        for p in &o.outputs {
            assert_eq!(before.get(p), after.get(p), "{}", p.display());
        }
    }
    ran(&outcomes)
}

#[test]
fn host_audio_change_skips_segmentation_and_pairing() {
    let ran = audio_change_reruns_dependents(ClipKind::HostSpeech);
    assert!(!ran.contains(&Stage::Segment) && !ran.contains(&Stage::Pair), "{ran:?}");
    assert!(ran.contains(&Stage::Extract) && ran.contains(&Stage::Explain), "{ran:?}");
}

#[test]
fn dog_audio_change_reruns_segmentation() {
    let ran = audio_change_reruns_dependents(ClipKind::DogVocal);
    assert!(ran.contains(&Stage::Segment) && ran.contains(&Stage::Train), "{ran:?}");
}

#[test]
fn rerun_is_a_no_op_and_fresh_runs_match() {
    let dir = tempfile::tempdir().unwrap();
    let m = corpus(&dir.path().join("corpus"));
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run_stages(&m, &Stage::ALL, &options(&a, 9)).unwrap();
    let first = tree(&a);
    let again = run_stages(&m, &Stage::ALL, &options(&a, 9)).unwrap();
    assert!(again.iter().all(|o| o.skipped));
    assert_eq!(first, tree(&a));

    run_stages(&m, &Stage::ALL, &options(&b, 9)).unwrap();
    assert_eq!(first, tree(&b));
}

#[test]
fn missing_dependency_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let m = corpus(&dir.path().join("corpus"));
    let err = run_stages(&m, &[Stage::Train], &options(&dir.path().join("run"), 0)).unwrap_err();
    assert!(err.to_string().contains("extract"), "{err}");
}
