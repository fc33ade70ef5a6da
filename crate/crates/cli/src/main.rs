use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use storyline::pipeline::{run_pipeline, run_stage, with_threads, Overrides, PipelineConfig, PipelineError, Stage, StageOutcome};
use tracing_subscriber::EnvFilter;

/// Narrative analysis pipeline: topics, triplets, clusters, reports and graphs.
#[derive(Parser, Debug)]
#[command(name = "storyline", version)]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "storyline.toml")]
    config: PathBuf,
    /// Overrides the configured global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct EventArg {
    /// Only this event.
    #[arg(long)]
    event: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate the posts file.
    Ingest,
    /// Deduplicate, filter accounts and tokenize.
    Clean,
    /// Build the term-document matrix.
    Matrix,
    /// Sweep K, score coherence and save the selected model.
    Topics {
        /// Use this K instead of the coherence argmax.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Select each event's posts and draw its review sample.
    Subset {
        #[command(flatten)]
        event: EventArg,
    },
    /// Extract subject-verb-object triplets from the parses.
    Extract,
    /// Canonicalize and cluster triplets per event.
    Normalize {
        #[command(flatten)]
        event: EventArg,
    },
    /// Write top-k narrative tables.
    Report {
        #[command(flatten)]
        event: EventArg,
        /// Rows per group.
        #[arg(long)]
        top: Option<usize>,
        /// Sample posts per row.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Build and export narrative graphs.
    Graph {
        #[command(flatten)]
        event: EventArg,
        /// Share of clusters kept, in (0, 1].
        #[arg(long)]
        fraction: Option<f64>,
        /// Select the top fraction over all groups before splitting.
        #[arg(long)]
        pooled: bool,
    },
    /// Run every stage, skipping those already up to date.
    Run {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Write a synthetic dataset with a matching config.
    Synth {
        /// Target directory.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        posts: usize,
    },
}

fn init_logging() {
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info"));
    tracing_subscriber::fmt()
        .json()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_current_span(false)
        .init();
}

fn stage_and_overrides(cli: &Cli) -> (Option<Stage>, Overrides) {
    let mut o = Overrides {
        seed: cli.seed,
        out: cli.out.clone(),
        ..Default::default()
    };
    let stage = match &cli.command {
        Command::Ingest => Some(Stage::Ingest),
        Command::Clean => Some(Stage::Clean),
        Command::Matrix => Some(Stage::Matrix),
        Command::Topics { k } => {
            o.k = *k;
            Some(Stage::Topics)
        }
        Command::Subset { event } => {
            o.event = event.event.clone();
            Some(Stage::Subset)
        }
        Command::Extract => Some(Stage::Extract),
        Command::Normalize { event } => {
            o.event = event.event.clone();
            Some(Stage::Normalize)
        }
        Command::Report { event, top, samples } => {
            o.event = event.event.clone();
            o.top = *top;
            o.samples = *samples;
            Some(Stage::Report)
        }
        Command::Graph { event, fraction, pooled } => {
            o.event = event.event.clone();
            o.fraction = *fraction;
            o.pooled = *pooled;
            Some(Stage::Graph)
        }
        Command::Run { k } => {
            o.k = *k;
            None
        }
        Command::Synth { .. } => None,
    };
    (stage, o)
}

fn execute(cli: &Cli) -> Result<Vec<StageOutcome>, PipelineError> {
    if let Command::Synth { dir, posts } = &cli.command {
        let seed = cli.seed.unwrap_or(7);
        storyline::synth::write_dataset(dir, *posts, seed).map_err(|e| PipelineError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        tracing::info!(command = "synth", dir = %dir.display(), posts = *posts, seed);
        return Ok(Vec::new());
    }
    let (stage, overrides) = stage_and_overrides(cli);
    let mut cfg = PipelineConfig::load(&cli.config)?;
    cfg.apply(&overrides)?;
    with_threads(cli.threads, || match stage {
        Some(s) => run_stage(&cfg, s).map(|o| vec![o]),
        None => run_pipeline(&cfg),
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_logging();
    match execute(&cli) {
        Ok(outcomes) => {
            for o in outcomes {
                println!("{}\t{}", o.stage, serde_status(&o));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            tracing::error!(error = %e, exit_code = code);
            ExitCode::from(code as u8)
        }
    }
}

fn serde_status(o: &StageOutcome) -> &'static str {
    match o.status {
        storyline::pipeline::StageStatus::Ran => "ran",
        storyline::pipeline::StageStatus::Skipped => "skipped",
    }
}
