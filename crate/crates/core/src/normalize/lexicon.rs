//! Synonym lexicon: per-role variant maps plus whole-triplet rules.
//!
//! File format:
//!
//! ```text
//! # comment
//! [subject]
//! USA <= US | United States
//! [verb]
//! has <= add | had | increased
//! [object]
//! [triplet]
//! USA,implements sanction on,Russia <= US,threats,sanction | *,sanction,Russia
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::triplets::Triplet;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{role}: variant {variant:?} maps to both {first:?} (line {first_line}) and {second:?} (line {second_line})")]
    Conflict {
        role: Role,
        variant: String,
        first: String,
        first_line: usize,
        second: String,
        second_line: usize,
    },
    #[error("{role}: {a:?} and {b:?} are each listed as a variant of the other")]
    Cycle { role: Role, a: String, b: String },
    #[error("{role}: canonical {canonical:?} is itself a variant of {of:?} (line {line})")]
    Chain {
        role: Role,
        canonical: String,
        of: String,
        line: usize,
    },
    #[error("triplet pattern {pattern} maps to both {first} (line {first_line}) and {second} (line {second_line})")]
    RuleConflict {
        pattern: String,
        first: String,
        first_line: usize,
        second: String,
        second_line: usize,
    },
    #[error("rule on line {line}: its output {output} is rewritten again to {again}")]
    NotFixpoint { line: usize, output: String, again: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Subject,
    Verb,
    Object,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Subject => "subject",
            Role::Verb => "verb",
            Role::Object => "object",
        })
    }
}

/// Canonical subject–verb–object tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Svo {
    pub subject: String,
    pub verb: String,
    pub object: String,
}

impl Svo {
    pub fn new(s: impl Into<String>, v: impl Into<String>, o: impl Into<String>) -> Self {
        Svo {
            subject: s.into(),
            verb: v.into(),
            object: o.into(),
        }
    }

    pub fn of(t: &Triplet) -> Self {
        Svo::new(t.subject.clone(), t.verb.clone(), t.object.clone())
    }
}

impl fmt::Display for Svo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject, self.verb, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    Any,
    Exact(String),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Any => f.write_str("*"),
            Slot::Exact(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripletRule {
    pub pattern: [Slot; 3],
    pub canonical: Svo,
    pub line: usize,
}

impl TripletRule {
    fn specificity(&self) -> usize {
        self.pattern.iter().filter(|s| matches!(s, Slot::Exact(_))).count()
    }
}

/// Variant → canonical map for one role.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleMap {
    canonical_of: BTreeMap<String, String>,
    canonicals: BTreeSet<String>,
}

impl RoleMap {
    pub fn resolve<'a>(&'a self, s: &'a str) -> &'a str {
        self.canonical_of.get(s).map(String::as_str).unwrap_or(s)
    }

    pub fn len(&self) -> usize {
        self.canonicals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.canonicals.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynonymLexicon {
    pub subject: RoleMap,
    pub verb: RoleMap,
    pub object: RoleMap,
    pub rules: Vec<TripletRule>,
}

/// Unvalidated lexicon entries; [`LexiconBuilder::build`] checks them.
#[derive(Debug, Clone, Default)]
pub struct LexiconBuilder {
    roles: Vec<(Role, String, Vec<String>, usize)>,
    rules: Vec<([Slot; 3], Svo, usize)>,
}

impl LexiconBuilder {
    pub fn role<I, S>(mut self, role: Role, canonical: &str, variants: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.push_role(role, canonical.to_string(), variants.into_iter().map(Into::into).collect(), 0);
        self
    }

    pub fn rule(mut self, pattern: [Slot; 3], canonical: Svo) -> Self {
        self.rules.push((pattern, canonical, 0));
        self
    }

    fn push_role(&mut self, role: Role, canonical: String, variants: Vec<String>, line: usize) {
        self.roles.push((role, canonical, variants, line));
    }

    pub fn build(self) -> Result<SynonymLexicon, LexiconError> {
        let mut lex = SynonymLexicon::default();
        for role in [Role::Subject, Role::Verb, Role::Object] {
            let mut variant_line: BTreeMap<&str, (&str, usize)> = BTreeMap::new();
            let mut canon_line: BTreeMap<&str, usize> = BTreeMap::new();
            for (r, canonical, variants, line) in &self.roles {
                if *r != role {
                    continue;
                }
                canon_line.entry(canonical).or_insert(*line);
                for v in variants {
                    if v == canonical {
                        continue;
                    }
                    match variant_line.get(v.as_str()) {
                        Some(&(first, first_line)) if first != canonical => {
                            return Err(LexiconError::Conflict {
                                role,
                                variant: v.clone(),
                                first: first.to_string(),
                                first_line,
                                second: canonical.clone(),
                                second_line: *line,
                            });
                        }
                        Some(_) => {}
                        None => {
                            variant_line.insert(v, (canonical, *line));
                        }
                    }
                }
            }
            for (&c, _) in &canon_line {
                if let Some(&(of, line)) = variant_line.get(c) {
                    if variant_line.get(of).is_some_and(|&(back, _)| back == c) {
                        let (a, b) = if c < of { (c, of) } else { (of, c) };
                        return Err(LexiconError::Cycle {
                            role,
                            a: a.to_string(),
                            b: b.to_string(),
                        });
                    }
                    return Err(LexiconError::Chain {
                        role,
                        canonical: c.to_string(),
                        of: of.to_string(),
                        line,
                    });
                }
            }
            let map = RoleMap {
                canonical_of: variant_line.iter().map(|(v, (c, _))| (v.to_string(), c.to_string())).collect(),
                canonicals: canon_line.keys().map(|c| c.to_string()).collect(),
            };
            *lex.role_map_mut(role) = map;
        }

        let mut seen: BTreeMap<[Slot; 3], (Svo, usize)> = BTreeMap::new();
        for (pattern, canonical, line) in self.rules {
            // patterns are stored in canonical form so matching is modulo synonyms
            let pattern = [
                lex.normalize_slot(Role::Subject, pattern[0].clone()),
                lex.normalize_slot(Role::Verb, pattern[1].clone()),
                lex.normalize_slot(Role::Object, pattern[2].clone()),
            ];
            if let Some((first, first_line)) = seen.get(&pattern) {
                if *first != canonical {
                    return Err(LexiconError::RuleConflict {
                        pattern: format!("{},{},{}", pattern[0], pattern[1], pattern[2]),
                        first: first.to_string(),
                        first_line: *first_line,
                        second: canonical.to_string(),
                        second_line: line,
                    });
                }
                continue;
            }
            seen.insert(pattern.clone(), (canonical.clone(), line));
            lex.rules.push(TripletRule { pattern, canonical, line });
        }

        for rule in &lex.rules {
            let output = lex.resolve_roles(&rule.canonical);
            let again = lex.canonicalize_svo(&output);
            if again != output {
                return Err(LexiconError::NotFixpoint {
                    line: rule.line,
                    output: output.to_string(),
                    again: again.to_string(),
                });
            }
        }
        Ok(lex)
    }
}

impl SynonymLexicon {
    pub fn builder() -> LexiconBuilder {
        LexiconBuilder::default()
    }

    pub fn is_empty(&self) -> bool {
        self.subject.is_empty() && self.verb.is_empty() && self.object.is_empty() && self.rules.is_empty()
    }

    pub fn role_map(&self, role: Role) -> &RoleMap {
        match role {
            Role::Subject => &self.subject,
            Role::Verb => &self.verb,
            Role::Object => &self.object,
        }
    }

    fn role_map_mut(&mut self, role: Role) -> &mut RoleMap {
        match role {
            Role::Subject => &mut self.subject,
            Role::Verb => &mut self.verb,
            Role::Object => &mut self.object,
        }
    }

    fn normalize_slot(&self, role: Role, slot: Slot) -> Slot {
        match slot {
            Slot::Any => Slot::Any,
            Slot::Exact(s) => Slot::Exact(self.role_map(role).resolve(&s).to_string()),
        }
    }

    fn resolve_roles(&self, t: &Svo) -> Svo {
        Svo::new(
            self.subject.resolve(&t.subject),
            self.verb.resolve(&t.verb),
            self.object.resolve(&t.object),
        )
    }

    /// Most specific matching rule; earlier rules win ties.
    fn best_rule(&self, resolved: &Svo) -> Option<&TripletRule> {
        let values = [&resolved.subject, &resolved.verb, &resolved.object];
        let mut best: Option<&TripletRule> = None;
        for rule in &self.rules {
            let matches = rule.pattern.iter().zip(values).all(|(slot, v)| match slot {
                Slot::Any => true,
                Slot::Exact(p) => p == v,
            });
            if matches && best.map_or(true, |b| rule.specificity() > b.specificity()) {
                best = Some(rule);
            }
        }
        best
    }

    /// Rewrites a tuple: a matching triplet rule (compared modulo the role
    /// maps) takes precedence, then each slot goes through its role map.
    pub fn canonicalize_svo(&self, t: &Svo) -> Svo {
        let resolved = self.resolve_roles(t);
        match self.best_rule(&resolved) {
            Some(rule) => self.resolve_roles(&rule.canonical),
            None => resolved,
        }
    }

    pub fn canonicalize(&self, t: &Triplet) -> Triplet {
        let c = self.canonicalize_svo(&Svo::of(t));
        Triplet {
            subject: c.subject,
            verb: c.verb,
            object: c.object,
            ..t.clone()
        }
    }
}

pub fn parse_lexicon(text: &str) -> Result<SynonymLexicon, LexiconError> {
    #[derive(Clone, Copy)]
    enum Section {
        Role(Role),
        Triplet,
    }
    let mut builder = LexiconBuilder::default();
    let mut section: Option<Section> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let syntax = |msg: &str| LexiconError::Syntax {
            line,
            msg: msg.to_string(),
        };
        if l.starts_with('[') && l.ends_with(']') {
            section = Some(match &l[1..l.len() - 1] {
                "subject" => Section::Role(Role::Subject),
                "verb" => Section::Role(Role::Verb),
                "object" => Section::Role(Role::Object),
                "triplet" => Section::Triplet,
                other => return Err(syntax(&format!("unknown section [{other}]"))),
            });
            continue;
        }
        let (lhs, rhs) = l.split_once("<=").ok_or_else(|| syntax("expected `canonical <= variants`"))?;
        let lhs = lhs.trim();
        let alternatives: Vec<&str> = rhs.split('|').map(str::trim).filter(|s| !s.is_empty()).collect();
        if lhs.is_empty() || alternatives.is_empty() {
            return Err(syntax("both sides of `<=` must be non-empty"));
        }
        match section {
            None => return Err(syntax("entry before any section header")),
            Some(Section::Role(role)) => {
                builder.push_role(role, lhs.to_string(), alternatives.iter().map(|s| s.to_string()).collect(), line);
            }
            Some(Section::Triplet) => {
                let parts = split3(lhs).ok_or_else(|| syntax("canonical triplet needs three comma-separated parts"))?;
                if parts.iter().any(|p| p == "*") {
                    return Err(syntax("canonical triplet cannot contain `*`"));
                }
                let canonical = Svo::new(parts[0].clone(), parts[1].clone(), parts[2].clone());
                for alt in alternatives {
                    let p = split3(alt).ok_or_else(|| syntax("pattern needs three comma-separated slots"))?;
                    let slot = |s: &str| if s == "*" { Slot::Any } else { Slot::Exact(s.to_string()) };
                    builder.rules.push(([slot(&p[0]), slot(&p[1]), slot(&p[2])], canonical.clone(), line));
                }
            }
        }
    }
    builder.build()
}

fn split3(s: &str) -> Option<[String; 3]> {
    let parts: Vec<String> = s.split(',').map(|p| p.trim().to_string()).collect();
    if parts.len() != 3 || parts.iter().any(String::is_empty) {
        return None;
    }
    Some([parts[0].clone(), parts[1].clone(), parts[2].clone()])
}

pub fn load_lexicon(path: &Path) -> Result<SynonymLexicon, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_lexicon(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const PAPER_EXAMPLES: &str = "\
[subject]
USA <= US | United States | the United States
[verb]
has <= add | had | increased
[object]
new patients/deaths <= new affected | patients/deaths
[triplet]
USA,implements sanction on,Russia <= USA,sanction,Russia | Developing countries,sanction,Russia | Economic sanction,on,Russia | US and allies,sanction,Russia | US,threats,sanction | US,wield,sanction tool
";

    #[test]
    fn shanghai_grouping() {
        let lex = parse_lexicon(PAPER_EXAMPLES).unwrap();
        let expect = Svo::new("Shanghai", "has", "new patients/deaths");
        for (v, o) in [("add", "new patients/deaths"), ("had", "new affected"), ("increased", "patients/deaths")] {
            assert_eq!(lex.canonicalize_svo(&Svo::new("Shanghai", v, o)), expect);
        }
    }

    #[test]
    fn us_sanction_family() {
        let lex = parse_lexicon(PAPER_EXAMPLES).unwrap();
        let target = Svo::new("USA", "implements sanction on", "Russia");
        for s in [
            Svo::new("USA", "threats", "sanction"),
            Svo::new("US", "threats", "sanction"),
            Svo::new("US and allies", "sanction", "Russia"),
            Svo::new("United States", "sanction", "Russia"),
        ] {
            assert_eq!(lex.canonicalize_svo(&s), target, "{s}");
        }
        let other = Svo::new("Russia", "invades", "Ukraine");
        assert_eq!(lex.canonicalize_svo(&other), other);
    }

    #[test]
    fn single_verb_rule_and_empty_file() {
        let lex = parse_lexicon("[verb]\nhas new <= add\n").unwrap();
        assert_eq!(lex.verb.len(), 1);
        assert_eq!(lex.verb.resolve("add"), "has new");
        let empty = parse_lexicon("# nothing\n").unwrap();
        assert!(empty.is_empty());
        let t = Svo::new("a", "b", "c");
        assert_eq!(empty.canonicalize_svo(&t), t);
    }

    #[test]
    fn conflicts_name_both_canonicals() {
        let err = parse_lexicon("[subject]\na <= x\nb <= x\n").unwrap_err();
        match &err {
            LexiconError::Conflict { first, second, variant, first_line, second_line, .. } => {
                assert_eq!((first.as_str(), second.as_str(), variant.as_str()), ("a", "b", "x"));
                assert_eq!((*first_line, *second_line), (2, 3));
            }
            other => panic!("{other:?}"),
        }
        assert!(err.to_string().contains("\"a\"") && err.to_string().contains("\"b\""));
    }

    #[test]
    fn cycles_and_chains_rejected() {
        assert!(matches!(parse_lexicon("[verb]\na <= b\nb <= a\n"), Err(LexiconError::Cycle { .. })));
        assert!(matches!(parse_lexicon("[verb]\na <= b\nc <= a\n"), Err(LexiconError::Chain { .. })));
        // the same string may be canonical in different roles
        assert!(parse_lexicon("[verb]\na <= b\n[object]\nb <= a\n").is_ok());
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(parse_lexicon("a <= b\n"), Err(LexiconError::Syntax { line: 1, .. })));
        assert!(matches!(parse_lexicon("[bogus]\n"), Err(LexiconError::Syntax { .. })));
        assert!(matches!(parse_lexicon("[triplet]\na,b <= x,y,z\n"), Err(LexiconError::Syntax { line: 2, .. })));
        assert!(matches!(parse_lexicon("[triplet]\na,*,c <= x,y,z\n"), Err(LexiconError::Syntax { .. })));
        assert!(matches!(parse_lexicon("[verb]\nno arrow\n"), Err(LexiconError::Syntax { .. })));
    }

    #[test]
    fn specificity_order() {
        let lex = parse_lexicon(
            "[triplet]\nW,w,w <= *,x,*\nE,e,e <= a,x,*\nF,f,f <= a,x,b\n",
        )
        .unwrap();
        assert_eq!(lex.canonicalize_svo(&Svo::new("a", "x", "b")), Svo::new("F", "f", "f"));
        assert_eq!(lex.canonicalize_svo(&Svo::new("a", "x", "z")), Svo::new("E", "e", "e"));
        assert_eq!(lex.canonicalize_svo(&Svo::new("q", "x", "z")), Svo::new("W", "w", "w"));
    }

    #[test]
    fn rule_conflict_and_fixpoint() {
        assert!(matches!(
            parse_lexicon("[triplet]\nA,b,c <= x,y,z\nD,e,f <= x,y,z\n"),
            Err(LexiconError::RuleConflict { .. })
        ));
        // output re-matches a different rule
        assert!(matches!(
            parse_lexicon("[triplet]\nA,b,c <= x,y,z\nD,e,f <= A,*,*\n"),
            Err(LexiconError::NotFixpoint { line: 2, .. }) | Err(LexiconError::NotFixpoint { line: 3, .. })
        ));
    }
}
