//! Independent DOT reader used as a grammar oracle.
//!
//! Covers the full abstract grammar: `strict`, graph/digraph, node, edge and
//! attribute statements, `ID = ID`, subgraphs, ports, quoted strings with
//! `\"` escapes and line continuations, HTML strings and all three comment
//! styles. Quoted text is kept lexically (as Graphviz does); use
//! [`esc_string`] to decode label escapes.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
    Comma,
    Colon,
    Arrow,
    Line,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct DotGraph {
    pub strict: bool,
    pub directed: bool,
    pub name: Option<String>,
    /// Node id → merged attributes, in first-seen order of ids.
    pub nodes: Vec<(String, BTreeMap<String, String>)>,
    pub edges: Vec<(String, String, BTreeMap<String, String>)>,
}

impl DotGraph {
    fn touch(&mut self, id: &str) -> usize {
        match self.nodes.iter().position(|(n, _)| n == id) {
            Some(i) => i,
            None => {
                self.nodes.push((id.to_string(), BTreeMap::new()));
                self.nodes.len() - 1
            }
        }
    }
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if line_start && c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            loop {
                if i + 1 >= chars.len() {
                    return Err("unterminated block comment".into());
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    i += 2;
                    break;
                }
                i += 1;
            }
            continue;
        }
        match c {
            '{' => out.push(Tok::LBrace),
            '}' => out.push(Tok::RBrace),
            '[' => out.push(Tok::LBracket),
            ']' => out.push(Tok::RBracket),
            '=' => out.push(Tok::Eq),
            ';' => out.push(Tok::Semi),
            ',' => out.push(Tok::Comma),
            ':' => out.push(Tok::Colon),
            '-' if chars.get(i + 1) == Some(&'>') => {
                out.push(Tok::Arrow);
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                out.push(Tok::Line);
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return Err("unterminated string".into());
                    };
                    match ch {
                        '"' => break,
                        '\\' => match chars.get(i + 1) {
                            Some('"') => {
                                s.push('"');
                                i += 1;
                            }
                            Some('\\') => {
                                s.push_str("\\\\");
                                i += 1;
                            }
                            Some('\n') => i += 1,
                            _ => s.push('\\'),
                        },
                        other => s.push(other),
                    }
                    i += 1;
                }
                out.push(Tok::Id(s));
            }
            '<' => {
                let mut depth = 0usize;
                let mut s = String::new();
                loop {
                    let Some(&ch) = chars.get(i) else {
                        return Err("unterminated HTML string".into());
                    };
                    if ch == '<' {
                        depth += 1;
                    } else if ch == '>' {
                        depth -= 1;
                        if depth == 0 {
                            break;
                        }
                    }
                    if depth > 1 || (depth == 1 && ch != '<') {
                        s.push(ch);
                    }
                    i += 1;
                }
                out.push(Tok::Id(s));
            }
            c if c.is_ascii_digit() || c == '.' || c == '-' => {
                let start = i;
                if c == '-' {
                    i += 1;
                }
                let mut dot = false;
                let mut digits = 0;
                while let Some(&ch) = chars.get(i) {
                    if ch.is_ascii_digit() {
                        digits += 1;
                    } else if ch == '.' && !dot {
                        dot = true;
                    } else {
                        break;
                    }
                    i += 1;
                }
                if digits == 0 {
                    return Err(format!("bad numeral at char {start}"));
                }
                if chars.get(i).is_some_and(|ch| ch.is_alphabetic() || *ch == '_') {
                    return Err(format!("numeral followed by letters at char {start}"));
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
                continue;
            }
            c if c.is_alphabetic() || c == '_' || (c as u32) >= 0x80 => {
                let start = i;
                while chars
                    .get(i)
                    .is_some_and(|ch| ch.is_alphanumeric() || *ch == '_' || (*ch as u32) >= 0x80)
                {
                    i += 1;
                }
                out.push(Tok::Id(chars[start..i].iter().collect()));
                continue;
            }
            other => return Err(format!("unexpected character {other:?} at char {i}")),
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    graph: DotGraph,
}

fn is_kw(t: Option<&Tok>, kw: &str) -> bool {
    matches!(t, Some(Tok::Id(s)) if s.eq_ignore_ascii_case(kw))
}

const KEYWORDS: [&str; 6] = ["strict", "graph", "digraph", "node", "edge", "subgraph"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), String> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?} at token {}", self.pos - 1)),
        }
    }

    fn id(&mut self) -> Result<String, String> {
        match self.next() {
            Some(Tok::Id(s)) if !KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => Ok(s),
            other => Err(format!("expected ID, found {other:?} at token {}", self.pos - 1)),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        if is_kw(self.peek(), "strict") {
            self.graph.strict = true;
            self.pos += 1;
        }
        if is_kw(self.peek(), "digraph") {
            self.graph.directed = true;
        } else if !is_kw(self.peek(), "graph") {
            return Err("expected graph or digraph".into());
        }
        self.pos += 1;
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.graph.name = Some(self.id()?);
        }
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens after graph".into());
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !matches!(self.peek(), Some(Tok::RBrace) | None) {
            self.stmt()?;
            if self.peek() == Some(&Tok::Semi) {
                self.pos += 1;
            }
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        if is_kw(self.peek(), "graph") || is_kw(self.peek(), "node") || is_kw(self.peek(), "edge") {
            self.pos += 1;
            if self.peek() != Some(&Tok::LBracket) {
                return Err("attribute statement without attribute list".into());
            }
            self.attr_list()?;
            return Ok(());
        }
        if matches!(self.peek(), Some(Tok::Id(_))) && self.peek_at(1) == Some(&Tok::Eq) {
            self.id()?;
            self.pos += 1;
            self.id()?;
            return Ok(());
        }
        let first = self.endpoint()?;
        if matches!(self.peek(), Some(Tok::Arrow | Tok::Line)) {
            let mut chain = vec![first];
            while let Some(op) = self.peek().cloned() {
                if !matches!(op, Tok::Arrow | Tok::Line) {
                    break;
                }
                if (op == Tok::Arrow) != self.graph.directed {
                    return Err(format!("edge operator {op:?} in the wrong graph kind"));
                }
                self.pos += 1;
                chain.push(self.endpoint()?);
            }
            let attrs = if self.peek() == Some(&Tok::LBracket) {
                self.attr_list()?
            } else {
                BTreeMap::new()
            };
            for pair in chain.windows(2) {
                for a in &pair[0] {
                    for b in &pair[1] {
                        self.graph.edges.push((a.clone(), b.clone(), attrs.clone()));
                    }
                }
            }
        } else if self.peek() == Some(&Tok::LBracket) {
            let attrs = self.attr_list()?;
            if first.len() != 1 {
                return Err("attribute list after a subgraph".into());
            }
            let i = self.graph.touch(&first[0]);
            self.graph.nodes[i].1.extend(attrs);
        }
        Ok(())
    }

    /// A node id (with optional port) or a subgraph; returns the node ids.
    fn endpoint(&mut self) -> Result<Vec<String>, String> {
        if is_kw(self.peek(), "subgraph") || self.peek() == Some(&Tok::LBrace) {
            if is_kw(self.peek(), "subgraph") {
                self.pos += 1;
                if matches!(self.peek(), Some(Tok::Id(_))) {
                    self.id()?;
                }
            }
            let before = self.graph.nodes.len();
            self.expect(Tok::LBrace)?;
            self.stmt_list()?;
            self.expect(Tok::RBrace)?;
            return Ok(self.graph.nodes[before..].iter().map(|(n, _)| n.clone()).collect());
        }
        let id = self.id()?;
        if self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            self.id()?;
            if self.peek() == Some(&Tok::Colon) {
                self.pos += 1;
                let compass = self.id()?;
                if !["n", "ne", "e", "se", "s", "sw", "w", "nw", "c", "_"].contains(&compass.as_str()) {
                    return Err(format!("bad compass point {compass:?}"));
                }
            }
        }
        self.graph.touch(&id);
        Ok(vec![id])
    }

    fn attr_list(&mut self) -> Result<BTreeMap<String, String>, String> {
        let mut attrs = BTreeMap::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            while self.peek() != Some(&Tok::RBracket) {
                let k = self.id()?;
                self.expect(Tok::Eq)?;
                let v = self.id()?;
                attrs.insert(k, v);
                if matches!(self.peek(), Some(Tok::Semi | Tok::Comma)) {
                    self.pos += 1;
                }
            }
            self.expect(Tok::RBracket)?;
        }
        Ok(attrs)
    }
}

pub fn parse_dot(src: &str) -> Result<DotGraph, String> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        graph: DotGraph::default(),
    };
    p.graph()?;
    Ok(p.graph)
}

/// Decodes the label escapes `\\`, `\n` (and `\l`, `\r` as newlines) of a
/// lexically unquoted string; other backslash pairs are kept.
pub fn esc_string(s: &str) -> String {
    let mut out = String::new();
    let mut it = s.chars().peekable();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.peek() {
            Some('\\') => {
                out.push('\\');
                it.next();
            }
            Some('n' | 'l' | 'r') => {
                out.push('\n');
                it.next();
            }
            _ => out.push('\\'),
        }
    }
    out
}

#[test]
fn oracle_accepts_and_rejects() {
    let g = parse_dot(
        "/* c */ strict digraph G {\n# pp\n a -> b -> {c d} [label=\"x\\\"y\"];\n node [shape=box]; e:p:ne; f=1; subgraph s { g } // t\n}",
    )
    .unwrap();
    assert!(g.directed && g.strict);
    assert_eq!(g.edges.len(), 3);
    assert_eq!(g.edges[0].2["label"], "x\"y");
    for bad in [
        "digraph { a -- b }",
        "graph { a -> b }",
        "digraph { a -> }",
        "digraph { \"a }",
        "digraph { a [x] }",
        "digraph { 1a }",
        "digraph { node }",
        "digraph { a } b",
    ] {
        assert!(parse_dot(bad).is_err(), "{bad}");
    }
    assert_eq!(esc_string("a\\\\b\\nc"), "a\\b\nc");
}
