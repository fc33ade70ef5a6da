use super::{ParsedSentence, Span, Token, Triplet, TripletError, TripletSource};

/// Relations that glue a token onto its verb in the rendered verb string.
const VERB_GLUE: &[&str] = &["compound", "compound:prt", "compound:vv", "compound:dir", "compound:svc", "prt", "neg"];

const NEGATORS: &[&str] = &["not", "n't", "never", "no", "不", "没", "没有", "未", "别", "勿"];

const OBJECT_RELS: &[&str] = &["obj", "dobj"];
const ACTIVE_SUBJECT_RELS: &[&str] = &["nsubj"];
const PASSIVE_SUBJECT_RELS: &[&str] = &["nsubj:pass", "nsubjpass"];
const AGENT_RELS: &[&str] = &["obl:agent", "agent", "nmod:agent"];
const AGENT_MARKERS: &[&str] = &["by", "被", "由"];

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3000..=0x303F
        | 0x3040..=0x30FF
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF00..=0xFFEF
        | 0x20000..=0x2FA1F)
}

fn join_surfaces<'a>(tokens: impl Iterator<Item = &'a Token>) -> String {
    let mut out = String::new();
    let mut prev_last: Option<char> = None;
    for t in tokens {
        let surface = t.surface.split_whitespace().collect::<Vec<_>>().join(" ");
        if surface.is_empty() {
            continue;
        }
        if let Some(p) = prev_last {
            let first = surface.chars().next().expect("non-empty");
            if !(is_cjk(p) && is_cjk(first)) {
                out.push(' ');
            }
        }
        prev_last = surface.chars().last();
        out.push_str(&surface);
    }
    out
}

/// Surfaces of the tokens in `span`, space-joined except between two CJK
/// characters.
pub fn span_text(sentence: &ParsedSentence, span: Span) -> Result<String, TripletError> {
    if span.start == 0 || span.start > span.end || span.end > sentence.len() {
        return Err(TripletError::SpanOutOfBounds {
            post_id: sentence.post_id.clone(),
            sent_index: sentence.sent_index,
            start: span.start,
            end: span.end,
            len: sentence.len(),
        });
    }
    Ok(join_surfaces(sentence.tokens[span.start - 1..span.end].iter()))
}

fn glues_to(sentence: &ParsedSentence, idx: usize, predicate: usize) -> bool {
    let t = sentence.token(idx);
    if t.head != predicate {
        return false;
    }
    if VERB_GLUE.contains(&t.deprel.as_str()) {
        return true;
    }
    let base = t.deprel.split(':').next().unwrap_or("");
    base == "advmod" && NEGATORS.contains(&t.surface.to_lowercase().as_str())
}

/// The predicate plus directly adjacent particle, compound and negation
/// dependents.
pub fn verb_text(sentence: &ParsedSentence, predicate: usize) -> Result<String, TripletError> {
    let mut lo = predicate;
    while lo > 1 && glues_to(sentence, lo - 1, predicate) {
        lo -= 1;
    }
    let mut hi = predicate;
    while hi < sentence.len() && glues_to(sentence, hi + 1, predicate) {
        hi += 1;
    }
    span_text(sentence, Span::new(lo, hi))
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn make(sentence: &ParsedSentence, subject: String, verb: String, object: String, source: TripletSource) -> Option<Triplet> {
    let (subject, verb, object) = (normalize(&subject), normalize(&verb), normalize(&object));
    if subject.is_empty() || verb.is_empty() || object.is_empty() {
        return None;
    }
    Some(Triplet {
        subject,
        verb,
        object,
        post_id: sentence.post_id.clone(),
        sent_index: sentence.sent_index,
        source,
    })
}

/// One triplet per frame that has both an ARG0 and an ARG1, in frame order.
pub fn extract_srl(sentence: &ParsedSentence) -> Result<Vec<Triplet>, TripletError> {
    sentence.validate()?;
    let mut out = Vec::new();
    for frame in &sentence.frames {
        let (Some(agent), Some(patient)) = (frame.role("ARG0"), frame.role("ARG1")) else {
            continue;
        };
        let subject = span_text(sentence, agent)?;
        let verb = verb_text(sentence, frame.predicate)?;
        let object = span_text(sentence, patient)?;
        out.extend(make(sentence, subject, verb, object, TripletSource::Srl));
    }
    Ok(out)
}

/// `head` followed by its conjuncts.
fn with_conjuncts(sentence: &ParsedSentence, head: usize) -> Vec<usize> {
    let mut out = vec![head];
    let mut i = 0;
    while i < out.len() {
        let cur = out[i];
        out.extend(sentence.children(cur).filter(|c| c.deprel == "conj").map(|c| c.index));
        i += 1;
    }
    out
}

/// Text of the subtree under `root`, leaving out punctuation, the root's
/// own coordination branches and, for agents, its case marker.
fn subtree_text(sentence: &ParsedSentence, root: usize, strip_case: bool) -> String {
    let mut keep = vec![false; sentence.len() + 1];
    let mut stack = vec![root];
    keep[root] = true;
    while let Some(cur) = stack.pop() {
        for c in sentence.children(cur) {
            let skip = c.deprel == "punct"
                || (cur == root && (c.deprel == "conj" || c.deprel == "cc"))
                || (cur == root && strip_case && c.deprel == "case");
            if !skip {
                keep[c.index] = true;
                stack.push(c.index);
            }
        }
    }
    join_surfaces(sentence.tokens.iter().filter(|t| keep[t.index]))
}

fn is_agent(sentence: &ParsedSentence, t: &Token) -> bool {
    if AGENT_RELS.contains(&t.deprel.as_str()) {
        return true;
    }
    t.deprel == "obl"
        && sentence
            .children(t.index)
            .any(|c| c.deprel == "case" && AGENT_MARKERS.contains(&c.surface.to_lowercase().as_str()))
}

/// Rule-based fallback: `nsubj` / `obj` children of verbs, passive agents
/// mapped to subject, coordinated arguments expanded.
pub fn extract_dep(sentence: &ParsedSentence) -> Result<Vec<Triplet>, TripletError> {
    sentence.validate()?;
    let mut out = Vec::new();
    for v in sentence.tokens.iter().filter(|t| t.upos == "VERB") {
        let verb = verb_text(sentence, v.index)?;
        let kids: Vec<&Token> = sentence.children(v.index).collect();
        let pick = |rels: &[&str]| -> Vec<usize> {
            kids.iter()
                .filter(|c| rels.contains(&c.deprel.as_str()))
                .flat_map(|c| with_conjuncts(sentence, c.index))
                .collect()
        };
        let mut subjects = pick(ACTIVE_SUBJECT_RELS);
        if subjects.is_empty() && v.deprel == "conj" && v.head != 0 && sentence.token(v.head).upos == "VERB" {
            // coordinated verbs without their own subject share the first verb's
            subjects = sentence
                .children(v.head)
                .filter(|c| ACTIVE_SUBJECT_RELS.contains(&c.deprel.as_str()))
                .flat_map(|c| with_conjuncts(sentence, c.index))
                .collect();
        }
        let objects = pick(OBJECT_RELS);
        for &s in &subjects {
            for &o in &objects {
                out.extend(make(
                    sentence,
                    subtree_text(sentence, s, false),
                    verb.clone(),
                    subtree_text(sentence, o, false),
                    TripletSource::Dependency,
                ));
            }
        }
        let promoted = pick(PASSIVE_SUBJECT_RELS);
        let agents: Vec<usize> = kids
            .iter()
            .filter(|c| is_agent(sentence, c))
            .flat_map(|c| with_conjuncts(sentence, c.index))
            .collect();
        for &a in &agents {
            for &p in &promoted {
                out.extend(make(
                    sentence,
                    subtree_text(sentence, a, true),
                    verb.clone(),
                    subtree_text(sentence, p, false),
                    TripletSource::Dependency,
                ));
            }
        }
    }
    Ok(out)
}

/// SRL when the sentence carries frames, dependency rules otherwise.
pub fn extract(sentence: &ParsedSentence) -> Result<Vec<Triplet>, TripletError> {
    if sentence.frames.is_empty() {
        extract_dep(sentence)
    } else {
        extract_srl(sentence)
    }
}
