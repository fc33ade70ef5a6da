//! Config-driven, resumable pipeline: ingest → clean → matrix → topics →
//! subset → extract → normalize → report → graph.
//!
//! Every stage hashes its inputs and parameters; a stage whose hashes and
//! recorded outputs are unchanged is skipped.

mod config;
mod manifest;
mod stages;

pub use config::{
    CleanConfig, CoherenceConfig, EventConfig, GraphConfig, GraphMode, MatrixConfig, Overrides, PathsConfig, PipelineConfig,
    ReportConfig, SampleConfig, TopicsConfig,
};
pub use manifest::{combine, derive_seed, sha256_hex, Manifest, OutputRecord, StageRecord, MANIFEST_FILE};

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Clean,
    Matrix,
    Topics,
    Subset,
    Extract,
    Normalize,
    Report,
    Graph,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Ingest,
        Stage::Clean,
        Stage::Matrix,
        Stage::Topics,
        Stage::Subset,
        Stage::Extract,
        Stage::Normalize,
        Stage::Report,
        Stage::Graph,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Clean => "clean",
            Stage::Matrix => "matrix",
            Stage::Topics => "topics",
            Stage::Subset => "subset",
            Stage::Extract => "extract",
            Stage::Normalize => "normalize",
            Stage::Report => "report",
            Stage::Graph => "graph",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("stage {stage}: missing upstream artifact {} (produced by {producer})", path.display())]
    MissingUpstream { stage: Stage, path: PathBuf, producer: String },
    #[error("stage {stage} failed: {message}; completed stages are recorded in {}, rerunning resumes at {stage}", manifest.display())]
    Stage { stage: Stage, message: String, manifest: PathBuf },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 1 for configuration problems, 2 for failures while running a stage.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub status: StageStatus,
    pub outputs: usize,
}

/// Runs `f` on a pool of `threads` workers, or on rayon's global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(PipelineError::Validation("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| PipelineError::Validation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Validates the config, then runs all stages in order, skipping those
/// that are up to date.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<StageOutcome>, PipelineError> {
    cfg.validate()?;
    Stage::ALL.iter().map(|&s| execute(cfg, s)).collect()
}

/// Validates the config and runs one stage; only that stage's manifest
/// record is touched.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<StageOutcome, PipelineError> {
    cfg.validate()?;
    execute(cfg, stage)
}

fn execute(cfg: &PipelineConfig, stage: Stage) -> Result<StageOutcome, PipelineError> {
    let out = cfg.paths.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
    let started = Instant::now();
    let plan = stages::plan(cfg, stage);

    let mut hashed = Vec::with_capacity(plan.inputs.len());
    for input in &plan.inputs {
        let bytes = std::fs::read(&input.path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                PipelineError::MissingUpstream {
                    stage,
                    path: input.path.clone(),
                    producer: input.producer.clone(),
                }
            } else {
                PipelineError::io(&input.path, e)
            }
        })?;
        hashed.push((input.label.clone(), sha256_hex(&bytes)));
    }
    let input_hash = combine(hashed.iter().map(|(l, h)| (l.as_str(), h.as_str())));
    let params_hash = sha256_hex(plan.params.to_string().as_bytes());

    let mut manifest = Manifest::load(out)?;
    if let Some(rec) = manifest.get(stage) {
        if rec.input_hash == input_hash && rec.params_hash == params_hash && rec.outputs_intact(out) {
            tracing::info!(stage = stage.name(), status = "skipped", outputs = rec.outputs.len());
            return Ok(StageOutcome {
                stage,
                status: StageStatus::Skipped,
                outputs: rec.outputs.len(),
            });
        }
    }

    let mut sink = stages::Sink::new(out);
    stages::run(cfg, stage, &mut sink).map_err(|e| match e {
        stages::StageFailure::Pipeline(p) => p,
        stages::StageFailure::Other(message) => PipelineError::Stage {
            stage,
            message,
            manifest: out.join(MANIFEST_FILE),
        },
    })?;
    let outputs = sink.finish();
    let output_hash = combine(outputs.iter().map(|o| (o.path.as_str(), o.sha256.as_str())));
    let n = outputs.len();
    manifest.upsert(StageRecord {
        stage,
        input_hash,
        params_hash,
        output_hash,
        outputs,
    });
    manifest.save(out)?;
    tracing::info!(
        stage = stage.name(),
        status = "ran",
        outputs = n,
        elapsed_ms = started.elapsed().as_millis() as u64
    );
    Ok(StageOutcome {
        stage,
        status: StageStatus::Ran,
        outputs: n,
    })
}
