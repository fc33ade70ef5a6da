//! CoNLL-U input with semantic-role frames.
//!
//! Sentence identity comes from `# post_id = …` and `# sent_index = …`
//! comments. Frames ride in the MISC column as
//! `Frame=<pred>:<ROLE>=<start>-<end>,<ROLE>=<start>-<end>` (a single index is
//! accepted for one-token spans), or in a JSON-lines sidecar.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Argument, ParsedSentence, Span, SrlFrame, Token, TripletError};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TripletError + '_ {
    move |source| TripletError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads one `.conllu` file, or every `.conllu` file of a directory in name
/// order.
pub fn read_conllu(path: &Path) -> Result<Vec<ParsedSentence>, TripletError> {
    if path.is_dir() {
        let mut files: Vec<_> = std::fs::read_dir(path)
            .map_err(io_err(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "conllu"))
            .collect();
        files.sort();
        let mut out = Vec::new();
        for f in files {
            out.extend(read_conllu(&f)?);
        }
        return Ok(out);
    }
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_conllu(&text)
}

#[derive(Default)]
struct Pending {
    start_line: usize,
    post_id: Option<String>,
    sent_index: Option<usize>,
    tokens: Vec<Token>,
    frames: Vec<SrlFrame>,
}

pub fn parse_conllu(text: &str) -> Result<Vec<ParsedSentence>, TripletError> {
    let mut out = Vec::new();
    let mut per_post: HashMap<String, usize> = HashMap::new();
    let mut cur = Pending::default();

    let mut flush = |cur: &mut Pending, out: &mut Vec<ParsedSentence>| -> Result<(), TripletError> {
        let p = std::mem::take(cur);
        if p.tokens.is_empty() {
            return Ok(());
        }
        let post_id = p.post_id.ok_or_else(|| TripletError::Parse {
            line: p.start_line,
            msg: "sentence lacks a `# post_id = …` comment".into(),
        })?;
        let seen = per_post.entry(post_id.clone()).or_insert(0);
        let sent_index = p.sent_index.unwrap_or(*seen);
        *seen += 1;
        out.push(ParsedSentence {
            post_id,
            sent_index,
            tokens: p.tokens,
            frames: p.frames,
        });
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut cur, &mut out)?;
            continue;
        }
        if cur.tokens.is_empty() && cur.start_line == 0 {
            cur.start_line = lineno;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                match k.trim() {
                    "post_id" => cur.post_id = Some(v.trim().to_string()),
                    "sent_index" => {
                        cur.sent_index = Some(v.trim().parse().map_err(|_| TripletError::Parse {
                            line: lineno,
                            msg: format!("bad sent_index {:?}", v.trim()),
                        })?)
                    }
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(TripletError::Parse {
                line: lineno,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        // multiword ranges and empty nodes carry no syntax of their own
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let num = |s: &str, what: &str| -> Result<usize, TripletError> {
            s.parse().map_err(|_| TripletError::Parse {
                line: lineno,
                msg: format!("bad {what} {s:?}"),
            })
        };
        let index = num(cols[0], "token id")?;
        let head = num(cols[6], "head")?;
        cur.tokens.push(Token {
            index,
            surface: cols[1].to_string(),
            lemma: (cols[2] != "_").then(|| cols[2].to_string()),
            upos: cols[3].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
        for item in cols[9].split('|') {
            if let Some(body) = item.strip_prefix("Frame=") {
                cur.frames.push(parse_frame(body).map_err(|msg| TripletError::Parse { line: lineno, msg })?);
            }
        }
    }
    flush(&mut cur, &mut out)?;
    Ok(out)
}

fn parse_frame(body: &str) -> Result<SrlFrame, String> {
    let (pred, args) = body.split_once(':').ok_or_else(|| format!("frame {body:?} lacks `pred:`"))?;
    let predicate = pred.parse().map_err(|_| format!("bad frame predicate {pred:?}"))?;
    let mut arguments = Vec::new();
    for a in args.split(',').filter(|a| !a.is_empty()) {
        let (role, range) = a.split_once('=').ok_or_else(|| format!("bad frame argument {a:?}"))?;
        let (s, e) = range.split_once('-').unwrap_or((range, range));
        let start = s.parse().map_err(|_| format!("bad span start {s:?}"))?;
        let end = e.parse().map_err(|_| format!("bad span end {e:?}"))?;
        arguments.push(Argument {
            role: role.to_string(),
            span: Span { start, end },
        });
    }
    Ok(SrlFrame { predicate, arguments })
}

fn render_frame(f: &SrlFrame) -> String {
    let args: Vec<String> = f
        .arguments
        .iter()
        .map(|a| format!("{}={}-{}", a.role, a.span.start, a.span.end))
        .collect();
    format!("Frame={}:{}", f.predicate, args.join(","))
}

/// Serializes sentences; each frame is written to its predicate's MISC.
pub fn write_conllu(sentences: &[ParsedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let _ = writeln!(out, "# post_id = {}", s.post_id);
        let _ = writeln!(out, "# sent_index = {}", s.sent_index);
        for t in &s.tokens {
            let misc: Vec<String> = s.frames.iter().filter(|f| f.predicate == t.index).map(render_frame).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t_\t_\t{}\t{}\t_\t{}",
                t.index,
                t.surface,
                t.lemma.as_deref().unwrap_or("_"),
                t.upos,
                t.head,
                t.deprel,
                if misc.is_empty() { "_".to_string() } else { misc.join("|") }
            );
        }
        out.push('\n');
    }
    out
}

/// One sidecar line: frames for a sentence keyed by `(post_id, sent_index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub post_id: String,
    pub sent_index: usize,
    pub frames: Vec<SrlFrame>,
}

pub fn read_frame_sidecar(path: &Path) -> Result<Vec<FrameRecord>, TripletError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TripletError::Parse {
                line: i + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Appends sidecar frames to their sentences.
pub fn attach_frames(sentences: &mut [ParsedSentence], records: Vec<FrameRecord>) -> Result<(), TripletError> {
    let index: HashMap<(String, usize), usize> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.post_id.clone(), s.sent_index), i))
        .collect();
    for r in records {
        let i = *index.get(&(r.post_id.clone(), r.sent_index)).ok_or_else(|| TripletError::InvalidSentence {
            post_id: r.post_id.clone(),
            sent_index: r.sent_index,
            msg: "sidecar frames refer to a sentence missing from the parses".into(),
        })?;
        sentences[i].frames.extend(r.frames);
    }
    Ok(())
}
