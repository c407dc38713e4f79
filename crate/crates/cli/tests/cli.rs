use std::path::Path;
use std::process::{Command, Output};

fn barklab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_barklab"))
        .args(args)
        .env_remove("BARKLAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_corpus(dir: &Path) -> String {
    let corpus = dir.join("corpus");
    let o = barklab(&["synth", "--out", p(&corpus), "--clips-per-group", "6", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    corpus.join("manifest.jsonl").to_str().unwrap().to_string()
}

#[test]
fn empty_manifest_stats_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(&m, "").unwrap();
    let o = barklab(&["stats", "--manifest", p(&m)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1, "header only: {}", stdout(&o));
}

#[test]
fn invalid_manifest_lists_every_problem_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.jsonl");
    std::fs::write(
        &m,
        concat!(
            "{\"version\":1}\n",
            "{\"id\":\"a\",\"kind\":\"host_speech\",\"lang_env\":\"En\",\"audio_path\":\"missing.wav\",",
            "\"start_s\":0,\"end_s\":1,\"source_video_id\":\"v\"}\n",
            "{\"id\":\"b\",\"kind\":\"host_speech\",\"lang_env\":\"Ja\",\"audio_path\":\"gone.wav\",",
            "\"start_s\":2,\"end_s\":1,\"source_video_id\":\"v\"}\n",
        ),
    )
    .unwrap();
    for cmd in ["stats", "segment"] {
        let mut args = vec![cmd, "--manifest", p(&m)];
        let out = dir.path().join("out");
        if cmd != "stats" {
            args.extend(["--out", p(&out)]);
        }
        let o = barklab(&args);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        let err = stderr(&o);
        assert!(err.contains("line 2") && err.contains("line 3"), "{err}");
        assert!(!out.exists(), "nothing written before validation passes");
    }
}

#[test]
fn unknown_flag_is_a_validation_failure() {
    let o = barklab(&["pipeline", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    let o = barklab(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn pair_without_features_names_extract() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_corpus(dir.path());
    let o = barklab(&["pair", "--manifest", &m, "--out", p(&dir.path().join("run"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("extract"), "{}", stderr(&o));
}

#[test]
fn pipeline_runs_then_skips_and_out_dir_comes_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_corpus(dir.path());
    let run = dir.path().join("run");
    let args = ["pipeline", "--manifest", &m, "--feature-set", "gemaps_lite", "--folds", "3"];
    let o = Command::new(env!("CARGO_BIN_EXE_barklab"))
        .args(args)
        .env("BARKLAB_OUT", &run)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).matches(" done").count(), 7, "{}", stdout(&o));
    let index = std::fs::read_to_string(run.join("report/index.json")).unwrap();
    let index: serde_json::Value = serde_json::from_str(&index).unwrap();
    let sections = index["sections"].as_array().unwrap();
    assert_eq!(sections.len(), 4);
    assert!(sections.iter().all(|s| s["status"] == "ok"), "{index}");

    let o = barklab(&[&args[..], &["--out", p(&run)]].concat());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("up to date").count(), 7, "{}", stdout(&o));

    // A changed setting re-runs the stages that read it.
    let o = barklab(&[&args[..], &["--out", p(&run), "--prominence-cutoff", "0.5"]].concat());
    let s = stdout(&o);
    assert!(s.contains("explain  done") && s.contains("train    up to date"), "{s}");
}

#[test]
fn stats_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_corpus(dir.path());
    let out = dir.path().join("stats");
    let o = barklab(&["stats", "--manifest", &m, "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dog_vocal"));
    let csv = std::fs::read_to_string(out.join("stats.csv")).unwrap();
    assert!(csv.starts_with("kind,n,mean_len_s,var_len_s,en_pct,ja_pct\ndog_vocal,12,"), "{csv}");
    assert!(out.join("scenes.csv").exists() && out.join("stats.json").exists());
}
