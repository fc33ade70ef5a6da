//! Stage bodies, their declared inputs and their parameter fingerprints.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{GraphMode, PipelineConfig};
use super::manifest::{derive_seed, sha256_hex, OutputRecord};
use super::{PipelineError, Stage};
use crate::corpus::{deduplicate, filter_accounts, keyword_subset, load_posts, load_stopwords, load_user_words, Corpus, FieldMap};
use crate::network::{build_graph, top_fraction};
use crate::normalize::{clusters_for_group, cluster, load_lexicon, sample_fraction, top_table, NarrativeCluster, ReportGroup};
use crate::topics::{
    assign_and_subset, coherence_cv, fit_nmf, read_matrix, read_model, render_terms, sweep_k, top_terms, topic_for_term,
    write_matrix, write_model, build_matrix_from_tokens, SweepEntry, TokenStreams,
};
use crate::triplets::{attach_frames, extract_all, read_conllu, read_frame_sidecar, Triplet};

pub(super) enum StageFailure {
    Pipeline(PipelineError),
    Other(String),
}

impl<E: std::fmt::Display> From<E> for StageFailure {
    fn from(e: E) -> Self {
        StageFailure::Other(e.to_string())
    }
}

type StageResult = Result<(), StageFailure>;

pub(super) struct Input {
    pub label: String,
    pub path: PathBuf,
    pub producer: String,
}

pub(super) struct Plan {
    pub inputs: Vec<Input>,
    pub params: serde_json::Value,
}

/// Writes stage outputs under the output directory and records their hashes.
pub(super) struct Sink {
    root: PathBuf,
    written: BTreeMap<String, String>,
}

impl Sink {
    pub fn new(root: &Path) -> Self {
        Sink {
            root: root.to_path_buf(),
            written: BTreeMap::new(),
        }
    }

    fn put(&mut self, rel: &str, bytes: &[u8]) -> StageResult {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| StageFailure::Pipeline(PipelineError::io(dir, e)))?;
        }
        std::fs::write(&path, bytes).map_err(|e| StageFailure::Pipeline(PipelineError::io(&path, e)))?;
        self.written.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Records a file some other writer produced.
    fn adopt(&mut self, rel: &str) -> StageResult {
        let path = self.root.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| StageFailure::Pipeline(PipelineError::io(&path, e)))?;
        self.written.insert(rel.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(self) -> Vec<OutputRecord> {
        self.written
            .into_iter()
            .map(|(path, sha256)| OutputRecord { path, sha256 })
            .collect()
    }
}

const INGEST_CORPUS: &str = "ingest/corpus.jsonl";
const INGEST_REPORT: &str = "ingest/load_report.json";
const CLEAN_CORPUS: &str = "clean/corpus.jsonl";
const CLEAN_TOKENS: &str = "clean/tokens.jsonl";
const CLEAN_SUMMARY: &str = "clean/summary.json";
const MATRIX_DIR: &str = "matrix";
const MATRIX_FILES: [&str; 2] = ["meta.json", "entries.tsv"];
const SWEEP_CSV: &str = "topics/sweep.csv";
const SWEEP_JSON: &str = "topics/sweep.json";
const TOP_TERMS: &str = "topics/top_terms.txt";
const MODEL_DIR: &str = "topics/model";
const MODEL_FILES: [&str; 5] = ["meta.json", "W.bin", "H.bin", "loss.csv", "coherence.json"];
const TRIPLETS: &str = "extract/triplets.jsonl";
const EXTRACT_SUMMARY: &str = "extract/summary.json";

fn subset_corpus(event: &str) -> String {
    format!("subset/{event}/corpus.jsonl")
}

fn clusters_file(event: &str) -> String {
    format!("normalize/{event}/clusters.json")
}

fn artifact(cfg: &PipelineConfig, rel: &str, producer: Stage) -> Input {
    Input {
        label: rel.to_string(),
        path: cfg.paths.out.join(rel),
        producer: format!("stage `{producer}`"),
    }
}

fn raw(label: &str, path: &Path, what: &str) -> Input {
    Input {
        label: label.to_string(),
        path: path.to_path_buf(),
        producer: what.to_string(),
    }
}

fn parse_inputs(cfg: &PipelineConfig) -> Vec<Input> {
    let p = &cfg.paths.parses;
    let what = format!("the parse input paths.parses = {}", p.display());
    if p.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(p)
            .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
            .unwrap_or_default();
        files.retain(|f| f.extension().is_some_and(|x| x == "conllu"));
        files.sort();
        if files.is_empty() {
            return vec![raw("parses", &p.join("*.conllu"), &what)];
        }
        return files
            .iter()
            .map(|f| {
                let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                raw(&format!("parses/{name}"), f, &what)
            })
            .collect();
    }
    vec![raw("parses", p, &what)]
}

fn events_json(cfg: &PipelineConfig) -> serde_json::Value {
    serde_json::to_value(&cfg.events).expect("events serialize")
}

pub(super) fn plan(cfg: &PipelineConfig, stage: Stage) -> Plan {
    let seed = derive_seed(cfg.seed, stage.name());
    let mut inputs = Vec::new();
    let params = match stage {
        Stage::Ingest => {
            inputs.push(raw("posts", &cfg.paths.posts, "the posts file paths.posts"));
            json!({ "fields": cfg.fields })
        }
        Stage::Clean => {
            inputs.push(artifact(cfg, INGEST_CORPUS, Stage::Ingest));
            if let Some(s) = &cfg.paths.stopwords {
                inputs.push(raw("stopwords", s, "the stopwords file paths.stopwords"));
            }
            if let Some(u) = &cfg.paths.user_words {
                inputs.push(raw("user_words", u, "the user word list paths.user_words"));
            }
            json!({ "clean": cfg.clean })
        }
        Stage::Matrix => {
            inputs.push(artifact(cfg, CLEAN_TOKENS, Stage::Clean));
            json!({ "matrix": cfg.matrix })
        }
        Stage::Topics => {
            for f in MATRIX_FILES {
                inputs.push(artifact(cfg, &format!("{MATRIX_DIR}/{f}"), Stage::Matrix));
            }
            inputs.push(artifact(cfg, CLEAN_TOKENS, Stage::Clean));
            json!({ "topics": cfg.topics, "coherence": cfg.coherence, "seed": seed })
        }
        Stage::Subset => {
            inputs.push(artifact(cfg, CLEAN_CORPUS, Stage::Clean));
            if cfg.events.iter().any(|e| e.uses_topics()) {
                for f in MODEL_FILES {
                    inputs.push(artifact(cfg, &format!("{MODEL_DIR}/{f}"), Stage::Topics));
                }
            }
            json!({ "events": events_json(cfg), "sample": cfg.sample, "seed": seed })
        }
        Stage::Extract => {
            inputs.extend(parse_inputs(cfg));
            if let Some(f) = &cfg.paths.frames {
                inputs.push(raw("frames", f, "the frame sidecar paths.frames"));
            }
            inputs.push(artifact(cfg, CLEAN_CORPUS, Stage::Clean));
            json!({})
        }
        Stage::Normalize => {
            inputs.push(raw("lexicon", &cfg.paths.lexicon, "the lexicon paths.lexicon"));
            inputs.push(artifact(cfg, TRIPLETS, Stage::Extract));
            for e in &cfg.events {
                inputs.push(artifact(cfg, &subset_corpus(&e.name), Stage::Subset));
            }
            json!({ "events": cfg.events.iter().map(|e| &e.name).collect::<Vec<_>>() })
        }
        Stage::Report => {
            for e in &cfg.events {
                inputs.push(artifact(cfg, &clusters_file(&e.name), Stage::Normalize));
                inputs.push(artifact(cfg, &subset_corpus(&e.name), Stage::Subset));
            }
            json!({ "report": cfg.report, "events": events_json(cfg) })
        }
        Stage::Graph => {
            for e in &cfg.events {
                inputs.push(artifact(cfg, &clusters_file(&e.name), Stage::Normalize));
                inputs.push(artifact(cfg, &subset_corpus(&e.name), Stage::Subset));
            }
            json!({ "graph": cfg.graph, "events": events_json(cfg) })
        }
    };
    Plan { inputs, params }
}

pub(super) fn run(cfg: &PipelineConfig, stage: Stage, sink: &mut Sink) -> StageResult {
    match stage {
        Stage::Ingest => ingest(cfg, sink),
        Stage::Clean => clean(cfg, sink),
        Stage::Matrix => matrix(cfg, sink),
        Stage::Topics => topics(cfg, sink),
        Stage::Subset => subset(cfg, sink),
        Stage::Extract => extract(cfg, sink),
        Stage::Normalize => normalize(cfg, sink),
        Stage::Report => report(cfg, sink),
        Stage::Graph => graph(cfg, sink),
    }
}

fn read_corpus(cfg: &PipelineConfig, rel: &str) -> Result<Corpus, StageFailure> {
    let (corpus, _) = load_posts(&cfg.paths.out.join(rel), &FieldMap::new())?;
    Ok(corpus)
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("value serializes");
    s.push(b'\n');
    s
}

fn ingest(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let schema = cfg.fields.iter().fold(FieldMap::new(), |m, (field, key)| m.rename(field, key));
    let (corpus, report) = load_posts(&cfg.paths.posts, &schema)?;
    tracing::info!(stage = "ingest", accepted = report.accepted, rejected = report.rejected.len());
    sink.put(INGEST_CORPUS, corpus.to_jsonl().as_bytes())?;
    sink.put(INGEST_REPORT, &pretty(&report))
}

#[derive(Serialize, Deserialize)]
struct TokenLine {
    id: String,
    tokens: Vec<String>,
}

fn read_tokens(cfg: &PipelineConfig) -> Result<TokenStreams, StageFailure> {
    let path = cfg.paths.out.join(CLEAN_TOKENS);
    let text = std::fs::read_to_string(&path).map_err(|e| StageFailure::Pipeline(PipelineError::io(&path, e)))?;
    let mut streams = TokenStreams {
        doc_ids: Vec::new(),
        streams: Vec::new(),
    };
    for line in text.lines().filter(|l| !l.is_empty()) {
        let t: TokenLine = serde_json::from_str(line)?;
        streams.doc_ids.push(t.id);
        streams.streams.push(t.tokens);
    }
    Ok(streams)
}

fn clean(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let corpus = read_corpus(cfg, INGEST_CORPUS)?;
    let before = corpus.len();
    let corpus = if cfg.clean.dedup { deduplicate(&corpus) } else { corpus };
    let after_dedup = corpus.len();
    let corpus = match &cfg.clean.accounts {
        Some(keep) => filter_accounts(&corpus, keep)?,
        None => corpus,
    };
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => load_stopwords(p)?,
        None => BTreeSet::new(),
    };
    let lexicon = cfg.paths.user_words.as_deref().map(load_user_words).transpose()?;
    let streams = TokenStreams::from_corpus(&corpus, &cfg.clean.rules(stopwords), lexicon.as_ref());
    let mut tokens = String::new();
    for (id, toks) in streams.doc_ids.iter().zip(&streams.streams) {
        let line = TokenLine {
            id: id.clone(),
            tokens: toks.clone(),
        };
        tokens.push_str(&serde_json::to_string(&line)?);
        tokens.push('\n');
    }
    tracing::info!(stage = "clean", posts_in = before, after_dedup, posts_out = corpus.len());
    sink.put(CLEAN_CORPUS, corpus.to_jsonl().as_bytes())?;
    sink.put(CLEAN_TOKENS, tokens.as_bytes())?;
    sink.put(
        CLEAN_SUMMARY,
        &pretty(&json!({ "posts_in": before, "after_dedup": after_dedup, "posts_out": corpus.len() })),
    )
}

fn matrix(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let streams = read_tokens(cfg)?;
    let m = build_matrix_from_tokens::<f64>(&streams, &cfg.matrix.params())?;
    tracing::info!(stage = "matrix", docs = m.n_docs(), terms = m.n_terms(), nnz = m.nnz(), empty_docs = m.empty_docs.len());
    write_matrix(&cfg.paths.out.join(MATRIX_DIR), &m)?;
    for f in MATRIX_FILES {
        sink.adopt(&format!("{MATRIX_DIR}/{f}"))?;
    }
    Ok(())
}

fn topics(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let seed = derive_seed(cfg.seed, Stage::Topics.name());
    let m = read_matrix::<f64>(&cfg.paths.out.join(MATRIX_DIR))?;
    let streams = read_tokens(cfg)?;
    let t = &cfg.topics;
    let nmf = t.nmf();
    let coh = cfg.coherence.params();
    let mut sweep = sweep_k(&m, &streams, t.k_min, t.k_max, seed, &nmf, &coh)?;
    if let Some(k) = t.k {
        if sweep.entry(k).is_none() {
            let model = fit_nmf(&m, k, seed, &nmf)?;
            let coherence = coherence_cv(&model, &streams, &coh)?;
            sweep.entries.push(SweepEntry {
                k,
                mean_coherence: coherence.mean,
                coherence,
                model,
            });
            sweep.entries.sort_by_key(|e| e.k);
        }
        sweep.override_k(k)?;
    }
    let chosen = sweep.selected();
    tracing::info!(stage = "topics", selected_k = sweep.selected_k, overridden = sweep.overridden, mean_coherence = chosen.mean_coherence);

    let curve: Vec<_> = sweep
        .entries
        .iter()
        .map(|e| {
            json!({
                "k": e.k,
                "mean_coherence": e.mean_coherence,
                "per_topic": e.coherence.per_topic,
                "flagged": e.coherence.flagged,
                "iterations": e.model.iterations_run,
                "final_loss": e.model.final_loss(),
            })
        })
        .collect();
    let mut terms = String::new();
    for topic in 0..chosen.model.k {
        let top = top_terms(&chosen.model, topic, cfg.coherence.top_n)?;
        terms.push_str(&format!("Topic {topic}: {}\n", render_terms(&top)));
    }
    sink.put(SWEEP_CSV, sweep.curve_csv().as_bytes())?;
    sink.put(
        SWEEP_JSON,
        &pretty(&json!({ "selected_k": sweep.selected_k, "overridden": sweep.overridden, "seed": seed, "curve": curve })),
    )?;
    sink.put(TOP_TERMS, terms.as_bytes())?;
    write_model(&cfg.paths.out.join(MODEL_DIR), &chosen.model, Some(&chosen.coherence))?;
    for f in MODEL_FILES {
        sink.adopt(&format!("{MODEL_DIR}/{f}"))?;
    }
    Ok(())
}

fn subset(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let seed = derive_seed(cfg.seed, Stage::Subset.name());
    let corpus = read_corpus(cfg, CLEAN_CORPUS)?;
    let model = if cfg.events.iter().any(|e| e.uses_topics()) {
        Some(read_model::<f64>(&cfg.paths.out.join(MODEL_DIR))?)
    } else {
        None
    };
    for e in &cfg.events {
        let (sub, summary) = if let Some(keywords) = &e.keywords {
            let sub = keyword_subset(&corpus, keywords)?;
            let summary = json!({ "event": e.name, "selector": "keywords", "keywords": keywords, "considered": corpus.len(), "kept": sub.len() });
            (sub, summary)
        } else {
            let model = model.as_ref().expect("model loaded for topic events");
            let topic = match (e.topic, &e.anchor) {
                (Some(t), _) => t,
                (None, Some(a)) => topic_for_term(model, a)
                    .ok_or_else(|| StageFailure::Other(format!("event {:?}: anchor term {a:?} has no topic in the model vocabulary", e.name)))?,
                (None, None) => unreachable!("validated: one selector per event"),
            };
            let (sub, rep) = assign_and_subset(model, &corpus, topic, e.min_share)?;
            let summary = json!({
                "event": e.name,
                "selector": if e.topic.is_some() { "topic" } else { "anchor" },
                "anchor": e.anchor,
                "topic": topic,
                "min_share": e.min_share,
                "considered": rep.considered,
                "kept": rep.kept,
                "zero_rows": rep.zero_rows.len(),
            });
            (sub, summary)
        };
        tracing::info!(stage = "subset", event = %e.name, posts = sub.len());
        let sample = if sub.is_empty() {
            String::new()
        } else {
            sample_fraction(&sub, cfg.sample.fraction, derive_seed(seed, &e.name))?.to_jsonl()
        };
        sink.put(&subset_corpus(&e.name), sub.to_jsonl().as_bytes())?;
        sink.put(&format!("subset/{}/summary.json", e.name), &pretty(&summary))?;
        sink.put(&format!("subset/{}/review_sample.jsonl", e.name), sample.as_bytes())?;
    }
    Ok(())
}

fn extract(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let corpus = read_corpus(cfg, CLEAN_CORPUS)?;
    let mut sentences = read_conllu(&cfg.paths.parses)?;
    if let Some(f) = &cfg.paths.frames {
        attach_frames(&mut sentences, read_frame_sidecar(f)?)?;
    }
    let ids = corpus.ids();
    let total = sentences.len();
    sentences.retain(|s| ids.contains(s.post_id.as_str()));
    let framed = sentences.iter().filter(|s| !s.frames.is_empty()).count();
    let triplets = extract_all(&sentences)?;
    let mut text = String::new();
    for t in &triplets {
        text.push_str(&serde_json::to_string(t)?);
        text.push('\n');
    }
    let srl = triplets.iter().filter(|t| t.source == crate::triplets::TripletSource::Srl).count();
    tracing::info!(stage = "extract", sentences = sentences.len(), triplets = triplets.len());
    sink.put(TRIPLETS, text.as_bytes())?;
    sink.put(
        EXTRACT_SUMMARY,
        &pretty(&json!({
            "sentences_read": total,
            "sentences_in_corpus": sentences.len(),
            "sentences_with_frames": framed,
            "triplets": triplets.len(),
            "triplets_srl": srl,
            "triplets_dependency": triplets.len() - srl,
        })),
    )
}

fn read_triplets(cfg: &PipelineConfig) -> Result<Vec<Triplet>, StageFailure> {
    let path = cfg.paths.out.join(TRIPLETS);
    let text = std::fs::read_to_string(&path).map_err(|e| StageFailure::Pipeline(PipelineError::io(&path, e)))?;
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(StageFailure::from))
        .collect()
}

fn read_clusters(cfg: &PipelineConfig, event: &str) -> Result<Vec<NarrativeCluster>, StageFailure> {
    let path = cfg.paths.out.join(clusters_file(event));
    let bytes = std::fs::read(&path).map_err(|e| StageFailure::Pipeline(PipelineError::io(&path, e)))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn normalize(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let lexicon = load_lexicon(&cfg.paths.lexicon)?;
    let triplets = read_triplets(cfg)?;
    for e in &cfg.events {
        let sub = read_corpus(cfg, &subset_corpus(&e.name))?;
        let ids: HashSet<&str> = sub.posts().iter().map(|p| p.id.as_str()).collect();
        let mine: Vec<Triplet> = triplets.iter().filter(|t| ids.contains(t.post_id.as_str())).cloned().collect();
        let clusters = cluster(&mine, &lexicon, &sub)?;
        tracing::info!(stage = "normalize", event = %e.name, triplets = mine.len(), clusters = clusters.len());
        sink.put(&clusters_file(&e.name), &pretty(&clusters))?;
    }
    Ok(())
}

fn groups(names: &[String]) -> Vec<ReportGroup> {
    names.iter().filter_map(|g| ReportGroup::parse(g)).collect()
}

fn report(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let groups = groups(&cfg.report.groups);
    for e in &cfg.events {
        let clusters = read_clusters(cfg, &e.name)?;
        let sub = read_corpus(cfg, &subset_corpus(&e.name))?;
        let r = top_table(&clusters, cfg.report.k, &sub, cfg.report.samples_per_row, &groups, e.label())?;
        sink.put(&format!("report/{}.txt", e.name), r.to_text().as_bytes())?;
        sink.put(&format!("report/{}.json", e.name), r.to_json().as_bytes())?;
    }
    Ok(())
}

fn graph(cfg: &PipelineConfig, sink: &mut Sink) -> StageResult {
    let groups = groups(&cfg.graph.groups);
    for e in &cfg.events {
        let clusters = read_clusters(cfg, &e.name)?;
        let sub = read_corpus(cfg, &subset_corpus(&e.name))?;
        let fraction = e.graph_fraction.unwrap_or(cfg.graph.fraction);
        let pooled = match cfg.graph.mode {
            GraphMode::Pooled => Some(top_fraction(&clusters, fraction)?),
            GraphMode::PerGroup => None,
        };
        for &g in &groups {
            let base = pooled.as_deref().unwrap_or(&clusters);
            let scoped = match g {
                ReportGroup::All => base.to_vec(),
                ReportGroup::Category(c) => clusters_for_group(base, c, &sub),
            };
            let keep = if pooled.is_some() { 1.0 } else { fraction };
            let mut graph = build_graph(&scoped, keep, &e.name, g.key())?;
            graph.meta.fraction = fraction;
            tracing::info!(stage = "graph", event = %e.name, group = g.key(), nodes = graph.nodes.len(), edges = graph.edges.len());
            let stem = format!("graph/{}/{}", e.name, g.key());
            sink.put(&format!("{stem}.dot"), graph.to_dot().as_bytes())?;
            sink.put(&format!("{stem}.json"), graph.to_json().as_bytes())?;
            sink.put(&format!("{stem}.graphml"), graph.to_graphml().as_bytes())?;
        }
    }
    Ok(())
}
