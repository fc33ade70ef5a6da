//! Regression check of the bundled dataset against its recorded artifact
//! hashes. Regenerate `data/golden.sha256` only for intended output changes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use storyline::pipeline::{run_pipeline, sha256_hex, Overrides, PipelineConfig};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn hashes(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            hashes(root, &path, out);
        } else {
            let rel = path.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
            out.insert(rel, sha256_hex(&std::fs::read(&path).unwrap()));
        }
    }
}

#[test]
fn bundled_dataset_reproduces_recorded_hashes() {
    let golden: BTreeMap<String, String> = std::fs::read_to_string(data_dir().join("golden.sha256"))
        .unwrap()
        .lines()
        .map(|l| {
            let (hash, path) = l.split_once("  ").expect("`<sha256>  <path>` lines");
            (path.to_string(), hash.to_string())
        })
        .collect();
    assert!(!golden.is_empty());

    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::load(&data_dir().join("storyline.toml")).unwrap();
    cfg.apply(&Overrides {
        out: Some(tmp.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    run_pipeline(&cfg).unwrap();

    let mut got = BTreeMap::new();
    hashes(tmp.path(), tmp.path(), &mut got);
    let missing: Vec<_> = golden.keys().filter(|p| !got.contains_key(*p)).collect();
    let extra: Vec<_> = got.keys().filter(|p| !golden.contains_key(*p)).collect();
    assert!(missing.is_empty() && extra.is_empty(), "missing {missing:?}, unexpected {extra:?}");
    let changed: Vec<_> = golden.iter().filter(|(p, h)| &got[*p] != *h).map(|(p, _)| p).collect();
    assert!(changed.is_empty(), "artifacts changed: {changed:?}");
}
