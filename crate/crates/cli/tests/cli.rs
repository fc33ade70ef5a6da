//! End-to-end checks of the `storyline` binary on a copy of the bundled
//! dataset.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const INPUTS: [&str; 5] = ["posts.jsonl", "parses.conllu", "lexicon.txt", "stopwords.txt", "storyline.toml"];

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("data");
    std::fs::create_dir_all(&dir).unwrap();
    for f in INPUTS {
        std::fs::copy(data.join(f), dir.join(f)).unwrap();
    }
    (tmp, dir)
}

fn storyline(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_storyline"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `(stage, status)` pairs from the tab-separated stdout.
fn statuses(o: &Output) -> Vec<(String, String)> {
    stdout(o)
        .lines()
        .map(|l| {
            let (s, t) = l.split_once('\t').expect("stage<TAB>status");
            (s.to_string(), t.to_string())
        })
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_lexicon_fails_validation_before_any_stage() {
    let (_tmp, dir) = workspace();
    std::fs::remove_file(dir.join("lexicon.txt")).unwrap();
    let o = storyline(&dir, &["run"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("lexicon"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    assert!(!dir.join("out").exists(), "a stage ran before validation");
}

#[test]
fn missing_parses_names_the_parse_input() {
    let (_tmp, dir) = workspace();
    std::fs::remove_file(dir.join("parses.conllu")).unwrap();
    let o = storyline(&dir, &["extract"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parses.conllu"), "{}", stderr(&o));
}

#[test]
fn stage_without_upstream_names_its_producer() {
    let (_tmp, dir) = workspace();
    let o = storyline(&dir, &["report"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("missing upstream") && err.contains("normalize"), "{err}");
}

#[test]
fn rerun_skips_every_stage() {
    let (_tmp, dir) = workspace();
    let first = storyline(&dir, &["run"]);
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(statuses(&first).len(), 9);
    assert!(statuses(&first).iter().all(|(_, s)| s == "ran"));

    let second = storyline(&dir, &["run"]);
    assert!(second.status.success());
    let st = statuses(&second);
    assert_eq!(st.len(), 9);
    assert!(st.iter().all(|(_, s)| s == "skipped"), "{st:?}");
}

#[test]
fn topics_k_override_is_used() {
    let (_tmp, dir) = workspace();
    assert!(storyline(&dir, &["run"]).status.success());
    let o = storyline(&dir, &["topics", "--k", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(statuses(&o), vec![("topics".to_string(), "ran".to_string())]);
    assert_eq!(json(&dir.join("out/topics/model/meta.json"))["k"], 3);
}

#[test]
fn graph_fraction_one_keeps_every_cluster() {
    let (_tmp, dir) = workspace();
    assert!(storyline(&dir, &["run"]).status.success());
    let o = storyline(&dir, &["graph", "--fraction", "1.0", "--event", "chained_woman"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let clusters = json(&dir.join("out/normalize/chained_woman/clusters.json"));
    for group in ["government_media", "celebrity"] {
        let g = json(&dir.join(format!("out/graph/chained_woman/{group}.json")));
        assert_eq!(g["meta"]["fraction"], 1.0);
        let counts: Vec<u64> = clusters
            .as_array()
            .unwrap()
            .iter()
            .filter_map(|c| c["by_group"][group].as_u64())
            .filter(|&n| n > 0)
            .collect();
        let edges = g["edges"].as_array().unwrap();
        assert_eq!(edges.len(), counts.len(), "{group}");
        let weight: u64 = edges.iter().map(|e| e["weight"].as_u64().unwrap()).sum();
        assert_eq!(weight, counts.iter().sum::<u64>(), "{group}");
    }
}

#[test]
fn unknown_event_is_a_validation_error() {
    let (_tmp, dir) = workspace();
    let o = storyline(&dir, &["graph", "--event", "no_such_event"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no_such_event"));
}

#[test]
fn stderr_is_json_lines() {
    let (_tmp, dir) = workspace();
    let ok = storyline(&dir, &["ingest"]);
    let bad = storyline(&dir, &["report"]);
    for o in [&ok, &bad] {
        let err = stderr(o);
        assert!(!err.trim().is_empty());
        for line in err.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap_or_else(|e| panic!("{line:?}: {e}"));
            assert!(v["level"].is_string() && v["fields"].is_object(), "{line}");
        }
    }
}
