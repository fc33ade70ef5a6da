//! On-disk layout of matrices and fitted models.
//!
//! Model directory:
//!
//! ```text
//! meta.json        k, seed, iterations, dtype, vocab, doc ids
//! W.bin, H.bin     binary arrays (see below)
//! loss.csv         iteration,loss
//! coherence.json   optional C_V report
//! ```
//!
//! Binary arrays are an 8-byte magic, a 4-byte NUL-padded dtype name, then
//! rows, cols and seed as little-endian `u64`, then row-major little-endian
//! elements.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::coherence::CoherenceReport;
use super::dense::Dense;
use super::matrix::{TermDocMatrix, Weighting};
use super::nmf::NmfModel;
use super::TopicsError;

pub const ARRAY_MAGIC: &[u8; 8] = b"SLARRAY1";
const HEADER_LEN: usize = 8 + 4 + 8 * 3;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TopicsError + '_ {
    move |source| TopicsError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), TopicsError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_file(path: &Path) -> Result<Vec<u8>, TopicsError> {
    fs::read(path).map_err(io_err(path))
}

pub fn write_array<T: Scalar>(m: &Dense<T>, seed: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * T::BYTES);
    out.extend_from_slice(ARRAY_MAGIC);
    let mut dtype = [0u8; 4];
    dtype[..T::DTYPE.len()].copy_from_slice(T::DTYPE.as_bytes());
    out.extend_from_slice(&dtype);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    out.extend_from_slice(&seed.to_le_bytes());
    for &v in m.as_slice() {
        v.write_le(&mut out);
    }
    out
}

/// Returns the array and the seed stored in its header.
pub fn read_array<T: Scalar>(bytes: &[u8]) -> Result<(Dense<T>, u64), TopicsError> {
    let bad = |msg: &str| TopicsError::Artifact(msg.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..8] != ARRAY_MAGIC {
        return Err(bad("not a binary array"));
    }
    let dtype = std::str::from_utf8(&bytes[8..12])
        .map_err(|_| bad("bad dtype"))?
        .trim_end_matches('\0');
    if dtype != T::DTYPE {
        return Err(TopicsError::Artifact(format!("dtype {dtype} does not match {}", T::DTYPE)));
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let rows = u64_at(12) as usize;
    let cols = u64_at(20) as usize;
    let seed = u64_at(28);
    let body = &bytes[HEADER_LEN..];
    if body.len() != rows * cols * T::BYTES {
        return Err(bad("array body length does not match header"));
    }
    let data = body.chunks_exact(T::BYTES).map(T::read_le).collect();
    Ok((Dense::from_vec(rows, cols, data), seed))
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    k: usize,
    seed: u64,
    iterations_run: usize,
    dtype: String,
    n_docs: usize,
    n_terms: usize,
    vocab: Vec<String>,
    doc_ids: Vec<String>,
}

pub fn write_model<T: Scalar>(
    dir: &Path,
    model: &NmfModel<T>,
    coherence: Option<&CoherenceReport<T>>,
) -> Result<(), TopicsError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = ModelMeta {
        k: model.k,
        seed: model.seed,
        iterations_run: model.iterations_run,
        dtype: T::DTYPE.to_string(),
        n_docs: model.doc_ids.len(),
        n_terms: model.vocab.len(),
        vocab: model.vocab.clone(),
        doc_ids: model.doc_ids.clone(),
    };
    let json = serde_json::to_vec_pretty(&meta).expect("meta serializes");
    write_file(&dir.join("meta.json"), &json)?;
    write_file(&dir.join("W.bin"), &write_array(&model.doc_topic, model.seed))?;
    write_file(&dir.join("H.bin"), &write_array(&model.topic_term, model.seed))?;
    let mut csv = String::from("iteration,loss\n");
    for (i, l) in model.loss_history.iter().enumerate() {
        csv.push_str(&format!("{i},{l}\n"));
    }
    write_file(&dir.join("loss.csv"), csv.as_bytes())?;
    if let Some(report) = coherence {
        let json = serde_json::to_vec_pretty(report).expect("report serializes");
        write_file(&dir.join("coherence.json"), &json)?;
    }
    Ok(())
}

pub fn read_model<T: Scalar>(dir: &Path) -> Result<NmfModel<T>, TopicsError> {
    let meta: ModelMeta = serde_json::from_slice(&read_file(&dir.join("meta.json"))?)
        .map_err(|e| TopicsError::Artifact(format!("meta.json: {e}")))?;
    let (w, seed_w) = read_array::<T>(&read_file(&dir.join("W.bin"))?)?;
    let (h, seed_h) = read_array::<T>(&read_file(&dir.join("H.bin"))?)?;
    if seed_w != meta.seed || seed_h != meta.seed {
        return Err(TopicsError::Artifact("seed mismatch between arrays and meta".into()));
    }
    if w.rows() != meta.n_docs || w.cols() != meta.k || h.rows() != meta.k || h.cols() != meta.n_terms {
        return Err(TopicsError::Artifact("array shapes do not match meta".into()));
    }
    let csv = String::from_utf8(read_file(&dir.join("loss.csv"))?)
        .map_err(|_| TopicsError::Artifact("loss.csv is not utf-8".into()))?;
    let loss_history = csv
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .nth(1)
                .and_then(|v| v.parse::<T>().ok())
                .ok_or_else(|| TopicsError::Artifact(format!("bad loss line {l:?}")))
        })
        .collect::<Result<Vec<T>, _>>()?;
    Ok(NmfModel {
        k: meta.k,
        doc_topic: w,
        topic_term: h,
        loss_history,
        seed: meta.seed,
        iterations_run: meta.iterations_run,
        vocab: meta.vocab,
        doc_ids: meta.doc_ids,
    })
}

#[derive(Serialize, Deserialize)]
struct MatrixMeta {
    dtype: String,
    weighting: Weighting,
    vocab: Vec<String>,
    doc_ids: Vec<String>,
    empty_docs: Vec<usize>,
}

/// Writes `meta.json` and `entries.tsv` (`doc<TAB>term<TAB>weight`).
pub fn write_matrix<T: Scalar>(dir: &Path, m: &TermDocMatrix<T>) -> Result<(), TopicsError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let meta = MatrixMeta {
        dtype: T::DTYPE.to_string(),
        weighting: m.weighting,
        vocab: m.vocab.clone(),
        doc_ids: m.doc_ids.clone(),
        empty_docs: m.empty_docs.clone(),
    };
    write_file(&dir.join("meta.json"), &serde_json::to_vec_pretty(&meta).expect("meta serializes"))?;
    let mut tsv = String::new();
    for (d, j, w) in m.entries() {
        tsv.push_str(&format!("{d}\t{j}\t{w}\n"));
    }
    write_file(&dir.join("entries.tsv"), tsv.as_bytes())
}

pub fn read_matrix<T: Scalar>(dir: &Path) -> Result<TermDocMatrix<T>, TopicsError> {
    let meta: MatrixMeta = serde_json::from_slice(&read_file(&dir.join("meta.json"))?)
        .map_err(|e| TopicsError::Artifact(format!("meta.json: {e}")))?;
    if meta.dtype != T::DTYPE {
        return Err(TopicsError::Artifact(format!("dtype {} does not match {}", meta.dtype, T::DTYPE)));
    }
    let tsv = String::from_utf8(read_file(&dir.join("entries.tsv"))?)
        .map_err(|_| TopicsError::Artifact("entries.tsv is not utf-8".into()))?;
    let mut entries = Vec::new();
    for line in tsv.lines() {
        let mut it = line.split('\t');
        let parsed = (|| {
            let d = it.next()?.parse().ok()?;
            let j = it.next()?.parse().ok()?;
            let w = it.next()?.parse::<T>().ok()?;
            Some((d, j, w))
        })();
        entries.push(parsed.ok_or_else(|| TopicsError::Artifact(format!("bad entry line {line:?}")))?);
    }
    TermDocMatrix::from_entries(meta.vocab, meta.doc_ids, meta.weighting, &entries)
}
