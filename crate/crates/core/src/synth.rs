//! Seeded synthetic data: planted-topic corpora and a multi-event social
//! media dataset with matching CoNLL-U parses.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AuthorCategory, Corpus, Post};
use crate::triplets::{write_conllu, Argument, ParsedSentence, Span, SrlFrame, Token};

/// Two-letter code for `n < 676`, letters only so cleaning keeps it whole.
fn letters(n: usize) -> String {
    let a = (b'a' + (n / 26 % 26) as u8) as char;
    let b = (b'a' + (n % 26) as u8) as char;
    format!("{a}{b}")
}

pub fn planted_word(topic: usize, j: usize) -> String {
    format!("{}{}", letters(topic), letters(j))
}

pub struct PlantedCorpus {
    pub corpus: Corpus,
    /// Post id → planted topic.
    pub labels: BTreeMap<String, usize>,
}

/// `topics` disjoint vocabularies of `vocab` words; each document draws
/// `doc_len` tokens uniformly from one vocabulary.
pub fn planted_topics_with(topics: usize, vocab: usize, docs_per_topic: usize, doc_len: usize, seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();
    let mut posts = Vec::new();
    let mut labels = BTreeMap::new();
    for d in 0..topics * docs_per_topic {
        let topic = d / docs_per_topic;
        let words: Vec<String> = (0..doc_len).map(|_| planted_word(topic, rng.gen_range(0..vocab))).collect();
        let id = format!("d{d:05}");
        labels.insert(id.clone(), topic);
        posts.push(Post {
            id,
            author_id: format!("u{}", d % 17),
            author_category: AuthorCategory::Other,
            timestamp: start + Duration::minutes(d as i64),
            text: words.join(" "),
            attitude_count: 0,
            comments_count: 0,
            reposts_count: 0,
        });
    }
    PlantedCorpus {
        corpus: Corpus::new(posts, format!("planted topics={topics} seed={seed}")),
        labels,
    }
}

/// Two 50-word vocabularies, 100 documents each, 30 tokens per document.
pub fn planted_topics(seed: u64) -> PlantedCorpus {
    planted_topics_with(2, 50, 100, 30, seed)
}

struct Phrase {
    canonical: &'static str,
    variants: &'static [&'static str],
}

struct Verb {
    present: &'static str,
    variants: &'static [&'static str],
    participle: &'static str,
}

struct Event {
    name: &'static str,
    label: &'static str,
    month: u32,
    share: f64,
    subjects: &'static [Phrase],
    verbs: &'static [Verb],
    objects: &'static [Phrase],
    filler: &'static [&'static str],
}

const fn p(canonical: &'static str, variants: &'static [&'static str]) -> Phrase {
    Phrase { canonical, variants }
}

const fn v(present: &'static str, variants: &'static [&'static str], participle: &'static str) -> Verb {
    Verb {
        present,
        variants,
        participle,
    }
}

const EVENTS: &[Event] = &[
    Event {
        name: "war",
        label: "Russia Ukraine War",
        month: 3,
        share: 0.35,
        subjects: &[
            p("USA", &["US", "the United States"]),
            p("Russia", &[]),
            p("Ukraine", &[]),
            p("NATO", &[]),
            p("EU", &["the European Union"]),
        ],
        verbs: &[
            v("sanctions", &["punishes"], "sanctioned"),
            v("invades", &["attacks"], "invaded"),
            v("supports", &["backs"], "supported"),
            v("joins", &[], "joined"),
            v("condemns", &[], "condemned"),
        ],
        objects: &[
            p("Russia", &[]),
            p("Ukraine", &[]),
            p("NATO", &[]),
            p("the national emergency", &["the emergency"]),
            p("new sanctions", &["more sanctions"]),
        ],
        filler: &[
            "troops", "border", "missile", "tanks", "frontline", "ceasefire", "refugees", "shelling", "artillery", "convoy", "invasion",
            "military", "soldiers", "airstrike", "offensive", "blockade", "diplomats", "embassy", "treaty", "negotiation",
        ],
    },
    Event {
        name: "covid",
        label: "Shanghai Lockdown",
        month: 4,
        share: 0.3,
        subjects: &[
            p("Shanghai", &["Shanghai city"]),
            p("Beijing", &[]),
            p("health officials", &["officials"]),
            p("residents", &["citizens"]),
        ],
        verbs: &[
            v("has", &["add", "had", "increased"], "added"),
            v("reports", &["announces"], "reported"),
            v("lifts", &["eases"], "lifted"),
            v("extends", &[], "extended"),
        ],
        objects: &[
            p("new patients/deaths", &["new affected", "patients/deaths"]),
            p("the lockdown", &["lockdown"]),
            p("testing", &["mass testing"]),
            p("supplies", &["food supplies"]),
        ],
        filler: &[
            "lockdown", "quarantine", "vaccine", "testing", "infections", "pandemic", "hospital", "masks", "outbreak", "isolation",
            "swab", "positive", "negative", "symptoms", "clinic", "epidemic", "community", "shelter", "delivery", "groceries",
        ],
    },
    Event {
        name: "chained_woman",
        label: "Chained Woman",
        month: 2,
        share: 0.15,
        subjects: &[
            p("Xuzhou officials", &["Xuzhou government"]),
            p("the investigation team", &["investigators"]),
            p("netizens", &["users"]),
        ],
        verbs: &[
            v("investigates", &["probes"], "investigated"),
            v("releases", &["publishes"], "released"),
            v("questions", &["doubts"], "questioned"),
        ],
        objects: &[
            p("the chained woman", &["the woman"]),
            p("the report", &["the statement"]),
            p("trafficking", &["human trafficking"]),
        ],
        filler: &[
            "chained", "woman", "village", "trafficking", "Xuzhou", "Fengxian", "hut", "mother", "children", "rescue", "abduction",
            "rights", "justice", "inquiry", "police", "hospitalized", "identity", "dna", "province", "documents",
        ],
    },
    Event {
        name: "pelosi",
        label: "Pelosi Taiwan Visit",
        month: 8,
        share: 0.1,
        subjects: &[
            p("Pelosi", &["Nancy Pelosi"]),
            p("China", &["Beijing government"]),
            p("Taiwan", &[]),
        ],
        verbs: &[
            v("visits", &["tours"], "visited"),
            v("warns", &["threatens"], "warned"),
            v("welcomes", &[], "welcomed"),
        ],
        objects: &[
            p("Taiwan", &[]),
            p("Pelosi", &["Nancy Pelosi"]),
            p("military drills", &["drills"]),
        ],
        filler: &[
            "strait", "visit", "speaker", "congress", "flight", "drills", "sovereignty", "island", "delegation", "airport", "aircraft",
            "warships", "tension", "provocation", "independence", "reunification", "exercises", "navy", "coast", "sanctuary",
        ],
    },
];

const DAILY: &[&str] = &[
    "coffee", "weekend", "movie", "dinner", "weather", "music", "travel", "friends", "photos", "shopping", "game", "cooking",
    "birthday", "concert", "sunset", "puppy", "garden", "books", "running", "holiday",
];

const STOPWORDS: &str = "# function words removed before vectorizing\nthe\na\nan\nis\nwas\nby\nof\nand\nto\nin\non\n";

pub struct SynthDataset {
    pub posts: Vec<Post>,
    pub sentences: Vec<ParsedSentence>,
}

struct Built {
    text: String,
    tokens: Vec<Token>,
    frames: Vec<SrlFrame>,
}

fn token(index: usize, surface: &str, upos: &str, head: usize, deprel: &str) -> Token {
    Token {
        index,
        surface: surface.to_string(),
        lemma: None,
        upos: upos.to_string(),
        head,
        deprel: deprel.to_string(),
    }
}

/// Appends a noun phrase whose last word heads the rest; returns the span.
fn push_phrase(tokens: &mut Vec<Token>, phrase: &str, head: usize, deprel: &str, prefix: Option<&str>) -> Span {
    let words: Vec<&str> = phrase.split(' ').collect();
    let start = tokens.len() + 1;
    let extra = usize::from(prefix.is_some());
    let head_idx = start + extra + words.len() - 1;
    if let Some(case) = prefix {
        tokens.push(token(start, case, "ADP", head_idx, "case"));
    }
    for (i, w) in words.iter().enumerate() {
        let idx = start + extra + i;
        if idx == head_idx {
            tokens.push(token(idx, w, "NOUN", head, deprel));
        } else if *w == "the" {
            tokens.push(token(idx, w, "DET", head_idx, "det"));
        } else {
            tokens.push(token(idx, w, "NOUN", head_idx, "compound"));
        }
    }
    Span::new(start + extra, head_idx)
}

fn surface_text(tokens: &[Token]) -> String {
    let mut s = String::new();
    for t in tokens {
        if !s.is_empty() && t.deprel != "punct" {
            s.push(' ');
        }
        s.push_str(&t.surface);
    }
    s
}

/// Active `S V O .` or passive `O was V-ed by S .`, with or without a frame.
fn svo_sentence(subject: &str, verb: &Verb, verb_form: &str, object: &str, passive: bool, with_frame: bool) -> Built {
    let mut tokens = Vec::new();
    let mut frames = Vec::new();
    if passive {
        let obj_len = object.split(' ').count();
        let pred = obj_len + 2;
        let o = push_phrase(&mut tokens, object, pred, "nsubj:pass", None);
        tokens.push(token(obj_len + 1, "was", "AUX", pred, "aux:pass"));
        tokens.push(token(pred, verb.participle, "VERB", 0, "root"));
        let s = push_phrase(&mut tokens, subject, pred, "obl:agent", Some("by"));
        let n = tokens.len() + 1;
        tokens.push(token(n, ".", "PUNCT", pred, "punct"));
        if with_frame {
            frames.push(SrlFrame {
                predicate: pred,
                arguments: vec![
                    Argument { role: "ARG1".into(), span: o },
                    Argument { role: "ARG0".into(), span: s },
                ],
            });
        }
    } else {
        let subj_len = subject.split(' ').count();
        let pred = subj_len + 1;
        let s = push_phrase(&mut tokens, subject, pred, "nsubj", None);
        tokens.push(token(pred, verb_form, "VERB", 0, "root"));
        let o = push_phrase(&mut tokens, object, pred, "obj", None);
        let n = tokens.len() + 1;
        tokens.push(token(n, ".", "PUNCT", pred, "punct"));
        if with_frame {
            frames.push(SrlFrame {
                predicate: pred,
                arguments: vec![
                    Argument { role: "ARG0".into(), span: s },
                    Argument { role: "ARG1".into(), span: o },
                ],
            });
        }
    }
    Built {
        text: surface_text(&tokens),
        tokens,
        frames,
    }
}

/// A verbless list of topical words; yields no triplets.
fn filler_sentence(words: &[&str]) -> Built {
    let mut tokens = vec![token(1, words[0], "NOUN", 0, "root")];
    for (i, w) in words.iter().enumerate().skip(1) {
        tokens.push(token(i + 1, w, "NOUN", 1, "list"));
    }
    let n = tokens.len() + 1;
    tokens.push(token(n, ".", "PUNCT", 1, "punct"));
    Built {
        text: surface_text(&tokens),
        tokens,
        frames: Vec::new(),
    }
}

/// Index drawn with probability proportional to `1 / (i + 1)`.
fn zipf(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let total: f64 = (1..=n).map(|i| 1.0 / i as f64).sum();
    let mut u = rng.gen::<f64>() * total;
    for i in 0..n {
        u -= 1.0 / (i + 1) as f64;
        if u <= 0.0 {
            return i;
        }
    }
    n - 1
}

fn pick_form<'a>(rng: &mut ChaCha8Rng, canonical: &'a str, variants: &'a [&'a str]) -> &'a str {
    if variants.is_empty() || rng.gen_bool(0.6) {
        canonical
    } else {
        variants.choose(rng).copied().unwrap_or(canonical)
    }
}

fn engagement(rng: &mut ChaCha8Rng, scale: f64) -> u64 {
    let u: f64 = rng.gen_range(1e-6..1.0);
    (scale * (u.powf(-0.8) - 1.0)).floor().min(1e7) as u64
}

/// `n_posts` posts over four events plus everyday chatter, with one CoNLL-U
/// parse per sentence; about half the event sentences carry SRL frames.
pub fn synth_dataset(n_posts: usize, seed: u64) -> SynthDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_authors = (n_posts / 20).max(10);
    let authors: Vec<AuthorCategory> = (0..n_authors)
        .map(|_| match rng.gen_range(0..100) {
            0..=14 => AuthorCategory::GovernmentMedia,
            15..=24 => AuthorCategory::Celebrity,
            _ => AuthorCategory::Other,
        })
        .collect();
    let year_start = Utc.with_ymd_and_hms(2022, 1, 1, 0, 0, 0).unwrap();

    let mut posts: Vec<Post> = Vec::with_capacity(n_posts);
    let mut sentences = Vec::new();
    let mut i = 0;
    while posts.len() < n_posts {
        let id = format!("p{i:06}");
        i += 1;
        // occasional verbatim repost by the same author
        if !posts.is_empty() && rng.gen_bool(0.02) {
            let src = posts[rng.gen_range(0..posts.len())].clone();
            let dup_sents: Vec<ParsedSentence> = sentences
                .iter()
                .filter(|s: &&ParsedSentence| s.post_id == src.id)
                .map(|s| ParsedSentence {
                    post_id: id.clone(),
                    ..s.clone()
                })
                .collect();
            sentences.extend(dup_sents);
            posts.push(Post {
                id,
                timestamp: src.timestamp + Duration::hours(rng.gen_range(1..48)),
                attitude_count: engagement(&mut rng, 2.0),
                comments_count: engagement(&mut rng, 1.0),
                reposts_count: engagement(&mut rng, 1.0),
                ..src
            });
            continue;
        }

        let author = rng.gen_range(0..n_authors);
        let category = authors[author];
        let roll: f64 = rng.gen();
        let mut acc = 0.0;
        let event = EVENTS.iter().find(|e| {
            acc += e.share;
            roll < acc
        });
        let mut built = Vec::new();
        let timestamp: DateTime<Utc>;
        match event {
            Some(e) => {
                let day = rng.gen_range(0..28);
                let secs = rng.gen_range(0..86_400);
                timestamp = Utc.with_ymd_and_hms(2022, e.month, 1, 0, 0, 0).unwrap() + Duration::days(day) + Duration::seconds(secs);
                let n_svo = rng.gen_range(1..=2);
                for _ in 0..n_svo {
                    let s = &e.subjects[zipf(&mut rng, e.subjects.len())];
                    let verb = &e.verbs[zipf(&mut rng, e.verbs.len())];
                    let mut o = &e.objects[zipf(&mut rng, e.objects.len())];
                    if o.canonical == s.canonical {
                        o = &e.objects[(e.objects.iter().position(|x| x.canonical == o.canonical).unwrap() + 1) % e.objects.len()];
                    }
                    let subject = pick_form(&mut rng, s.canonical, s.variants);
                    let object = pick_form(&mut rng, o.canonical, o.variants);
                    let verb_form = pick_form(&mut rng, verb.present, verb.variants);
                    let passive = rng.gen_bool(0.15);
                    let with_frame = rng.gen_bool(0.5);
                    built.push(svo_sentence(subject, verb, verb_form, object, passive, with_frame));
                }
                let k = rng.gen_range(4..=8);
                let words: Vec<&str> = (0..k).map(|_| *e.filler.choose(&mut rng).unwrap()).collect();
                built.push(filler_sentence(&words));
            }
            None => {
                timestamp = year_start + Duration::seconds(rng.gen_range(0..365 * 86_400));
                let k = rng.gen_range(4..=8);
                let words: Vec<&str> = (0..k).map(|_| *DAILY.choose(&mut rng).unwrap()).collect();
                built.push(filler_sentence(&words));
            }
        }
        let scale = match category {
            AuthorCategory::GovernmentMedia => 40.0,
            AuthorCategory::Celebrity => 80.0,
            AuthorCategory::Other => 2.0,
        };
        let mut text = built.iter().map(|b| b.text.as_str()).collect::<Vec<_>>().join(" ");
        if let Some(e) = event {
            if rng.gen_bool(0.1) {
                text = format!("#{}# {text}", e.label.replace(' ', ""));
            }
        }
        if rng.gen_bool(0.05) {
            text.push_str(" http://t.cn/A6x");
        }
        for (sent_index, b) in built.into_iter().enumerate() {
            sentences.push(ParsedSentence {
                post_id: id.clone(),
                sent_index,
                tokens: b.tokens,
                frames: b.frames,
            });
        }
        posts.push(Post {
            id,
            author_id: format!("u{author:05}"),
            author_category: category,
            timestamp,
            text,
            attitude_count: engagement(&mut rng, scale),
            comments_count: engagement(&mut rng, scale / 4.0),
            reposts_count: engagement(&mut rng, scale / 4.0),
        });
    }
    SynthDataset { posts, sentences }
}

/// Lexicon covering every variant the generator emits, plus whole-triplet
/// rules for the sanction family.
pub fn synth_lexicon() -> String {
    let mut by_role: [BTreeMap<&str, Vec<&str>>; 3] = Default::default();
    for e in EVENTS {
        for ph in e.subjects {
            by_role[0].entry(ph.canonical).or_default().extend(ph.variants);
        }
        for vb in e.verbs {
            let entry = by_role[1].entry(vb.present).or_default();
            entry.extend(vb.variants);
            entry.push(vb.participle);
        }
        for ph in e.objects {
            by_role[2].entry(ph.canonical).or_default().extend(ph.variants);
        }
    }
    let mut out = String::from("# generated alongside the synthetic corpus\n");
    for (name, map) in ["subject", "verb", "object"].iter().zip(by_role.iter_mut()) {
        out.push_str(&format!("[{name}]\n"));
        for (canonical, variants) in map.iter_mut() {
            variants.sort_unstable();
            variants.dedup();
            if !variants.is_empty() {
                out.push_str(&format!("{canonical} <= {}\n", variants.join(" | ")));
            }
        }
    }
    out.push_str("[triplet]\nUSA,implements sanction on,Russia <= USA,sanctions,Russia | USA,sanctions,new sanctions | EU,sanctions,Russia\n");
    out
}

pub fn synth_stopwords() -> &'static str {
    STOPWORDS
}

/// Pipeline configuration matching the files written by the `synth`
/// command.
pub fn synth_config(seed: u64) -> String {
    let mut events = String::new();
    for e in EVENTS {
        events.push_str(&format!("\n[[events]]\nname = \"{}\"\nlabel = \"{}\"\n", e.name, e.label));
        // the smallest event is selected by keywords and graphed in full
        if e.name == "chained_woman" {
            events.push_str("keywords = [\"chained\", \"Xuzhou\"]\ngraph_fraction = 1.0\n");
        } else {
            events.push_str(&format!("anchor = \"{}\"\n", e.filler[0]));
        }
    }
    let head = format!(
        r#"# Synthetic four-event dataset.
seed = {seed}

[paths]
posts = "posts.jsonl"
parses = "parses.conllu"
lexicon = "lexicon.txt"
stopwords = "stopwords.txt"
out = "out"

[clean]
dedup = true

[matrix]
weighting = "tfidf"
min_df = 2
max_df_ratio = 0.5

[topics]
k_min = 2
k_max = 8
max_iter = 200
tol = 1e-4

[coherence]
top_n = 10
window = 110

[report]
k = 5
samples_per_row = 3
groups = ["government_media", "celebrity"]

[graph]
fraction = 0.2
mode = "per_group"
groups = ["government_media", "celebrity"]

[sample]
fraction = 0.1
"#
    );
    head + &events
}

/// Writes `posts.jsonl`, `parses.conllu`, `lexicon.txt`, `stopwords.txt`
/// and `config.toml` into `dir`.
pub fn write_dataset(dir: &Path, n_posts: usize, seed: u64) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let data = synth_dataset(n_posts, seed);
    let corpus = Corpus::new(data.posts, "synthetic");
    std::fs::write(dir.join("posts.jsonl"), corpus.to_jsonl())?;
    std::fs::write(dir.join("parses.conllu"), write_conllu(&data.sentences))?;
    std::fs::write(dir.join("lexicon.txt"), synth_lexicon())?;
    std::fs::write(dir.join("stopwords.txt"), synth_stopwords())?;
    std::fs::write(dir.join("config.toml"), synth_config(seed))
}
