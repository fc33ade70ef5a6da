//! Manifest soundness and incremental-run equivalence on a small synthetic
//! dataset.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use storyline::pipeline::{
    run_pipeline, sha256_hex, Manifest, Overrides, PipelineConfig, Stage, StageOutcome, StageStatus, MANIFEST_FILE,
};
use storyline::synth::write_dataset;

const POSTS: usize = 400;
const INPUTS: [&str; 5] = ["posts.jsonl", "parses.conllu", "lexicon.txt", "stopwords.txt", "config.toml"];

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn run(dir: &Path) -> Vec<StageOutcome> {
    run_with(dir, &Overrides::default())
}

fn run_with(dir: &Path, o: &Overrides) -> Vec<StageOutcome> {
    let mut cfg = PipelineConfig::load(&dir.join("config.toml")).unwrap();
    cfg.apply(o).unwrap();
    run_pipeline(&cfg).unwrap()
}

fn ran(outcomes: &[StageOutcome]) -> Vec<Stage> {
    outcomes.iter().filter(|o| o.status == StageStatus::Ran).map(|o| o.stage).collect()
}

fn dataset(tmp: &Path, name: &str) -> PathBuf {
    let dir = tmp.join(name);
    write_dataset(&dir, POSTS, 11).unwrap();
    dir
}

/// Copies the inputs (not the outputs) of `from` into a fresh directory.
fn fresh_copy(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for f in INPUTS {
        std::fs::copy(from.join(f), to.join(f)).unwrap();
    }
}

/// Runs a fresh pipeline over a copy of `dir`'s inputs and checks its
/// output tree, manifest included, matches `dir`'s incremental one.
fn assert_matches_fresh(dir: &Path, tmp: &Path, label: &str) {
    let fresh = tmp.join(format!("fresh-{label}"));
    fresh_copy(dir, &fresh);
    assert!(ran(&run(&fresh)).len() == Stage::ALL.len());
    let a = tree(&dir.join("out"));
    let b = tree(&fresh.join("out"));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>(), "{label}: file sets differ");
    for (path, bytes) in &a {
        assert!(bytes == &b[path], "{label}: {path} differs from a fresh run");
    }
}

#[test]
fn manifest_records_every_output_with_its_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    let outcomes = run(&dir);
    assert_eq!(ran(&outcomes), Stage::ALL.to_vec());

    let out = dir.join("out");
    let manifest = Manifest::load(&out).unwrap();
    assert_eq!(manifest.records.iter().map(|r| r.stage).collect::<Vec<_>>(), Stage::ALL.to_vec());
    let files = tree(&out);
    let mut recorded = BTreeMap::new();
    for r in &manifest.records {
        assert!(r.outputs_intact(&out), "{} outputs drifted", r.stage);
        for o in &r.outputs {
            assert_eq!(sha256_hex(&files[&o.path]), o.sha256, "{}", o.path);
            assert!(recorded.insert(o.path.clone(), r.stage).is_none(), "{} claimed twice", o.path);
        }
    }
    let untracked: Vec<_> = files.keys().filter(|p| *p != MANIFEST_FILE && !recorded.contains_key(*p)).collect();
    assert!(untracked.is_empty(), "untracked outputs: {untracked:?}");
}

#[test]
fn rerun_skips_everything_and_changes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    run(&dir);
    let before = tree(&dir.join("out"));
    let again = run(&dir);
    assert!(ran(&again).is_empty(), "reran {:?}", ran(&again));
    assert_eq!(tree(&dir.join("out")), before);
}

#[test]
fn damaged_output_is_regenerated() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    run(&dir);
    let before = tree(&dir.join("out"));
    let manifest = Manifest::load(&dir.join("out")).unwrap();
    let victim = &manifest.get(Stage::Report).unwrap().outputs[0].path;
    std::fs::write(dir.join("out").join(victim), b"tampered").unwrap();
    assert!(ran(&run(&dir)).contains(&Stage::Report));
    assert_eq!(tree(&dir.join("out")), before);
}

#[test]
fn edited_posts_match_a_fresh_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    run(&dir);

    let path = dir.join("posts.jsonl");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    lines.truncate(lines.len() - 25);
    let first = lines[0]["text"].as_str().unwrap().to_string();
    lines[0]["text"] = serde_json::Value::String(format!("{first} sanctions Russia sanctions"));
    let body: String = lines.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(&path, body).unwrap();

    let outcomes = run(&dir);
    assert_eq!(ran(&outcomes).first(), Some(&Stage::Ingest));
    assert_matches_fresh(&dir, tmp.path(), "posts");
}

#[test]
fn edited_lexicon_reruns_only_downstream_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    run(&dir);

    let path = dir.join("lexicon.txt");
    let lexicon = std::fs::read_to_string(&path).unwrap();
    let edited = lexicon.replacen("[object]\n", "[object]\nthe Kremlin <= Russia\n", 1);
    assert_ne!(edited, lexicon);
    std::fs::write(&path, edited).unwrap();

    let outcomes = run(&dir);
    let reran = ran(&outcomes);
    assert_eq!(reran.first(), Some(&Stage::Normalize), "reran {reran:?}");
    assert_matches_fresh(&dir, tmp.path(), "lexicon");
}

#[test]
fn changed_parameter_reruns_only_its_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    run(&dir);

    let path = dir.join("config.toml");
    let config = std::fs::read_to_string(&path).unwrap();
    let edited = config.replacen("[graph]\nfraction = 0.2", "[graph]\nfraction = 0.5", 1);
    assert_ne!(edited, config);
    std::fs::write(&path, edited).unwrap();

    assert_eq!(ran(&run(&dir)), vec![Stage::Graph]);
    assert_matches_fresh(&dir, tmp.path(), "config");
}

#[test]
fn overrides_behave_like_config_edits() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = dataset(tmp.path(), "data");
    run(&dir);
    let o = Overrides {
        samples: Some(1),
        ..Default::default()
    };
    assert_eq!(ran(&run_with(&dir, &o)), vec![Stage::Report]);
    // returning to the configured value restores the original report
    assert_eq!(ran(&run(&dir)), vec![Stage::Report]);
    assert!(ran(&run(&dir)).is_empty());
}
