//! Content-hashed stage manifest (`manifest.jsonl`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, Stage};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of `label<TAB>hash` lines in the given order.
pub fn combine<'a>(items: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut h = Sha256::new();
    for (label, hash) in items {
        h.update(label.as_bytes());
        h.update(b"\t");
        h.update(hash.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Per-stage seed: the first eight bytes of `sha256(seed_le ‖ name)`.
pub fn derive_seed(global: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("eight bytes"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub input_hash: String,
    pub params_hash: String,
    pub output_hash: String,
    pub outputs: Vec<OutputRecord>,
}

impl StageRecord {
    /// True when every recorded output still exists with its recorded bytes.
    pub fn outputs_intact(&self, out_dir: &Path) -> bool {
        self.outputs.iter().all(|o| {
            std::fs::read(out_dir.join(&o.path))
                .map(|b| sha256_hex(&b) == o.sha256)
                .unwrap_or(false)
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub records: Vec<StageRecord>,
}

impl Manifest {
    pub fn load(out_dir: &Path) -> Result<Manifest, PipelineError> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Manifest::default()),
            Err(e) => return Err(PipelineError::io(&path, e)),
        };
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let r: StageRecord = serde_json::from_str(line)
                .map_err(|e| PipelineError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))?;
            records.push(r);
        }
        Ok(Manifest { records })
    }

    pub fn get(&self, stage: Stage) -> Option<&StageRecord> {
        self.records.iter().find(|r| r.stage == stage)
    }

    /// Replaces the record of `record.stage`, keeping stage order.
    pub fn upsert(&mut self, record: StageRecord) {
        self.records.retain(|r| r.stage != record.stage);
        self.records.push(record);
        self.records.sort_by_key(|r| r.stage);
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&serde_json::to_string(r).expect("record serializes"));
            text.push('\n');
        }
        let path = out_dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_stage_and_global() {
        assert_ne!(derive_seed(7, "topics"), derive_seed(7, "subset"));
        assert_ne!(derive_seed(7, "topics"), derive_seed(8, "topics"));
        assert_eq!(derive_seed(7, "topics"), derive_seed(7, "topics"));
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_roundtrip_and_upsert() {
        let dir = tempfile::tempdir().unwrap();
        assert!(Manifest::load(dir.path()).unwrap().records.is_empty());
        let rec = |stage, h: &str| StageRecord {
            stage,
            input_hash: h.into(),
            params_hash: h.into(),
            output_hash: h.into(),
            outputs: vec![],
        };
        let mut m = Manifest::default();
        m.upsert(rec(Stage::Topics, "a"));
        m.upsert(rec(Stage::Ingest, "b"));
        m.upsert(rec(Stage::Topics, "c"));
        assert_eq!(m.records.len(), 2);
        assert_eq!(m.records[0].stage, Stage::Ingest);
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), m);
    }
}
