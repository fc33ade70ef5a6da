//! TOML pipeline configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{AuthorCategory, CleanRules};
use crate::normalize::{check_fraction, load_lexicon, ReportGroup};
use crate::topics::{CoherenceParams, NmfParams, VectorizerParams, Weighting};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub posts: PathBuf,
    /// A `.conllu` file or a directory of them.
    pub parses: PathBuf,
    #[serde(default)]
    pub frames: Option<PathBuf>,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub user_words: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub unwrap_hashtags: bool,
    pub drop_digits: bool,
    pub drop_symbols: bool,
    pub dedup: bool,
    /// Author categories kept; all when absent.
    pub accounts: Option<BTreeSet<AuthorCategory>>,
}

impl Default for CleanConfig {
    fn default() -> Self {
        let r = CleanRules::default();
        CleanConfig {
            strip_urls: r.strip_urls,
            strip_mentions: r.strip_mentions,
            unwrap_hashtags: r.unwrap_hashtags,
            drop_digits: r.drop_digits,
            drop_symbols: r.drop_symbols,
            dedup: true,
            accounts: None,
        }
    }
}

impl CleanConfig {
    pub fn rules(&self, stopwords: BTreeSet<String>) -> CleanRules {
        CleanRules {
            strip_urls: self.strip_urls,
            strip_mentions: self.strip_mentions,
            unwrap_hashtags: self.unwrap_hashtags,
            drop_digits: self.drop_digits,
            drop_symbols: self.drop_symbols,
            stopword_list: stopwords,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub weighting: Weighting,
    pub min_df: usize,
    pub max_df_ratio: f64,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        let v = VectorizerParams::default();
        MatrixConfig {
            weighting: v.weighting,
            min_df: v.min_df,
            max_df_ratio: v.max_df_ratio,
        }
    }
}

impl MatrixConfig {
    pub fn params(&self) -> VectorizerParams {
        VectorizerParams {
            weighting: self.weighting,
            min_df: self.min_df,
            max_df_ratio: self.max_df_ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    pub k_min: usize,
    pub k_max: usize,
    /// Manual choice of K; overrides the coherence argmax.
    pub k: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        let n = NmfParams::default();
        TopicsConfig {
            k_min: 2,
            k_max: 20,
            k: None,
            max_iter: n.max_iter,
            tol: n.tol,
        }
    }
}

impl TopicsConfig {
    pub fn nmf(&self) -> NmfParams {
        NmfParams {
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherenceConfig {
    pub top_n: usize,
    pub window: usize,
}

impl Default for CoherenceConfig {
    fn default() -> Self {
        let c = CoherenceParams::default();
        CoherenceConfig {
            top_n: c.top_n,
            window: c.window,
        }
    }
}

impl CoherenceConfig {
    pub fn params(&self) -> CoherenceParams {
        CoherenceParams {
            top_n: self.top_n,
            window: self.window,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub name: String,
    #[serde(default)]
    pub label: Option<String>,
    /// Exactly one of `topic`, `anchor` and `keywords` selects the posts.
    #[serde(default)]
    pub topic: Option<usize>,
    #[serde(default)]
    pub anchor: Option<String>,
    #[serde(default)]
    pub keywords: Option<Vec<String>>,
    #[serde(default)]
    pub min_share: f64,
    #[serde(default)]
    pub graph_fraction: Option<f64>,
}

impl EventConfig {
    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }

    pub fn uses_topics(&self) -> bool {
        self.keywords.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub k: usize,
    pub samples_per_row: usize,
    /// Author categories or `all`.
    pub groups: Vec<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            k: 5,
            samples_per_row: 3,
            groups: vec!["government_media".into(), "celebrity".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphMode {
    /// Top fraction computed within each group.
    PerGroup,
    /// Top fraction computed over all clusters, then split by group.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub fraction: f64,
    pub mode: GraphMode,
    pub groups: Vec<String>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            fraction: 0.2,
            mode: GraphMode::PerGroup,
            groups: vec!["government_media".into(), "celebrity".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub fraction: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { fraction: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    /// Canonical post field → key in the posts file.
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub clean: CleanConfig,
    #[serde(default)]
    pub matrix: MatrixConfig,
    #[serde(default)]
    pub topics: TopicsConfig,
    #[serde(default)]
    pub coherence: CoherenceConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub events: Vec<EventConfig>,
}

/// Command-line adjustments applied on top of a loaded configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub k: Option<usize>,
    /// Graph fraction for the selected events.
    pub fraction: Option<f64>,
    /// Restricts per-event stages to one event.
    pub event: Option<String>,
    pub top: Option<usize>,
    pub samples: Option<usize>,
    pub pooled: bool,
}

fn invalid(msg: impl Into<String>) -> PipelineError {
    PipelineError::Validation(msg.into())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))
    }

    /// Reads a config file; relative paths are taken from its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    pub fn rebase(&mut self, base: &Path) {
        let p = &mut self.paths;
        p.posts = resolve(base, &p.posts);
        p.parses = resolve(base, &p.parses);
        p.lexicon = resolve(base, &p.lexicon);
        p.out = resolve(base, &p.out);
        for opt in [&mut p.frames, &mut p.stopwords, &mut p.user_words] {
            if let Some(x) = opt {
                *x = resolve(base, x);
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), PipelineError> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.paths.out = out.clone();
        }
        if let Some(k) = o.k {
            self.topics.k = Some(k);
        }
        if let Some(top) = o.top {
            self.report.k = top;
        }
        if let Some(s) = o.samples {
            self.report.samples_per_row = s;
        }
        if o.pooled {
            self.graph.mode = GraphMode::Pooled;
        }
        if let Some(name) = &o.event {
            self.events.retain(|e| &e.name == name);
            if self.events.is_empty() {
                return Err(invalid(format!("no event named {name:?} in the config")));
            }
        }
        if let Some(f) = o.fraction {
            for e in &mut self.events {
                e.graph_fraction = Some(f);
            }
        }
        Ok(())
    }

    /// Checks paths, ranges and event definitions before any stage runs.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let p = &self.paths;
        let must_exist = |what: &str, path: &Path| {
            if path.exists() {
                Ok(())
            } else {
                Err(invalid(format!("{what} {} does not exist", path.display())))
            }
        };
        must_exist("posts file", &p.posts)?;
        must_exist("parse input", &p.parses)?;
        must_exist("lexicon", &p.lexicon)?;
        for (what, opt) in [("frame sidecar", &p.frames), ("stopwords file", &p.stopwords), ("user word list", &p.user_words)] {
            if let Some(path) = opt {
                must_exist(what, path)?;
            }
        }
        load_lexicon(&p.lexicon).map_err(|e| invalid(format!("lexicon {}: {e}", p.lexicon.display())))?;
        for field in self.fields.keys() {
            if !crate::corpus::FieldMap::FIELDS.contains(&field.as_str()) {
                return Err(invalid(format!("[fields]: unknown post field {field:?}")));
            }
        }
        if matches!(&self.clean.accounts, Some(a) if a.is_empty()) {
            return Err(invalid("clean.accounts must not be empty"));
        }
        if self.matrix.min_df < 1 || !(self.matrix.max_df_ratio > 0.0 && self.matrix.max_df_ratio <= 1.0) {
            return Err(invalid("matrix: need min_df >= 1 and max_df_ratio in (0, 1]"));
        }
        let t = &self.topics;
        if t.k_min < 1 || t.k_min > t.k_max {
            return Err(invalid(format!("topics: bad K range {}..={}", t.k_min, t.k_max)));
        }
        if t.k == Some(0) {
            return Err(invalid("topics.k must be at least 1"));
        }
        if t.max_iter < 1 || !(t.tol >= 0.0) {
            return Err(invalid("topics: need max_iter >= 1 and tol >= 0"));
        }
        if self.coherence.top_n < 2 || self.coherence.window < 1 {
            return Err(invalid("coherence: need top_n >= 2 and window >= 1"));
        }
        if self.report.k < 1 {
            return Err(invalid("report.k must be at least 1"));
        }
        for g in self.report.groups.iter().chain(&self.graph.groups) {
            if ReportGroup::parse(g).is_none() {
                return Err(invalid(format!("unknown group {g:?}")));
            }
        }
        let frac = |what: &str, f: f64| check_fraction(f).map_err(|_| invalid(format!("{what} = {f} outside (0, 1]")));
        frac("graph.fraction", self.graph.fraction)?;
        frac("sample.fraction", self.sample.fraction)?;
        let mut names = BTreeSet::new();
        for e in &self.events {
            if e.name.is_empty() || !e.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(invalid(format!("event name {:?} must be non-empty ASCII letters, digits, _ or -", e.name)));
            }
            if !names.insert(&e.name) {
                return Err(invalid(format!("duplicate event {:?}", e.name)));
            }
            let selectors = usize::from(e.topic.is_some()) + usize::from(e.anchor.is_some()) + usize::from(e.keywords.is_some());
            if selectors != 1 {
                return Err(invalid(format!("event {:?}: set exactly one of topic, anchor, keywords", e.name)));
            }
            if matches!(&e.keywords, Some(k) if k.is_empty() || k.iter().any(String::is_empty)) {
                return Err(invalid(format!("event {:?}: keywords must be non-empty", e.name)));
            }
            if !(0.0..=1.0).contains(&e.min_share) {
                return Err(invalid(format!("event {:?}: min_share outside [0, 1]", e.name)));
            }
            if let Some(f) = e.graph_fraction {
                frac(&format!("event {:?} graph_fraction", e.name), f)?;
            }
        }
        Ok(())
    }
}
