//! Directed narrative graphs: actors as nodes, verb-labelled edges weighted
//! by cluster counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::normalize::{ceil_fraction, check_fraction, sort_clusters, NarrativeCluster, NormalizeError};

pub const NODE_WIDTH: (f64, f64) = (0.5, 3.0);
pub const EDGE_PENWIDTH: (f64, f64) = (1.0, 8.0);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub actor: String,
    /// Occurrences as subject plus occurrences as object over kept edges.
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub src: String,
    pub dst: String,
    pub verb: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub event: String,
    pub group: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub meta: GraphMeta,
}

/// The top `⌈f·M⌉` clusters by count; every cluster tied with the last kept
/// count is kept too.
pub fn top_fraction(clusters: &[NarrativeCluster], fraction: f64) -> Result<Vec<NarrativeCluster>, NormalizeError> {
    check_fraction(fraction)?;
    let mut sorted = clusters.to_vec();
    sort_clusters(&mut sorted);
    if sorted.is_empty() {
        return Ok(sorted);
    }
    let m = ceil_fraction(fraction, sorted.len()).max(1);
    let cutoff = sorted[m - 1].count;
    sorted.retain(|c| c.count >= cutoff);
    Ok(sorted)
}

pub fn build_graph(clusters: &[NarrativeCluster], fraction: f64, event: &str, group: &str) -> Result<NarrativeGraph, NormalizeError> {
    let kept = top_fraction(clusters, fraction)?;
    let mut edges: Vec<GraphEdge> = kept
        .iter()
        .filter(|c| c.count > 0)
        .map(|c| GraphEdge {
            src: c.canonical.subject.clone(),
            dst: c.canonical.object.clone(),
            verb: c.canonical.verb.clone(),
            weight: c.count as u64,
        })
        .collect();
    edges.sort_by(|a, b| (&a.src, &a.dst, &a.verb).cmp(&(&b.src, &b.dst, &b.verb)));
    let nodes = node_weights(&edges)
        .into_iter()
        .map(|(actor, weight)| GraphNode { actor, weight })
        .collect();
    Ok(NarrativeGraph {
        nodes,
        edges,
        meta: GraphMeta {
            event: event.to_string(),
            group: group.to_string(),
            fraction,
        },
    })
}

/// Actor weights implied by `edges`; a self-loop counts on both sides.
pub fn node_weights(edges: &[GraphEdge]) -> BTreeMap<String, u64> {
    let mut w: BTreeMap<String, u64> = BTreeMap::new();
    for e in edges {
        *w.entry(e.src.clone()).or_insert(0) += e.weight;
        *w.entry(e.dst.clone()).or_insert(0) += e.weight;
    }
    w
}

fn linear(x: f64, lo: f64, hi: f64, range: (f64, f64)) -> f64 {
    if hi <= lo {
        return (range.0 + range.1) / 2.0;
    }
    range.0 + (x - lo) / (hi - lo) * (range.1 - range.0)
}

fn dot_quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn span<I: Iterator<Item = u64>>(it: I) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w as f64), hi.max(w as f64)))
}

impl NarrativeGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    /// Checks endpoint existence, node-weight consistency and edge weights.
    pub fn validate(&self) -> Result<(), String> {
        let stored: BTreeMap<&str, u64> = self.nodes.iter().map(|n| (n.actor.as_str(), n.weight)).collect();
        if stored.len() != self.nodes.len() {
            return Err("duplicate node".into());
        }
        for e in &self.edges {
            if e.weight == 0 {
                return Err(format!("edge {} -> {} has zero weight", e.src, e.dst));
            }
            for end in [&e.src, &e.dst] {
                if !stored.contains_key(end.as_str()) {
                    return Err(format!("edge endpoint {end:?} is not a node"));
                }
            }
        }
        let recomputed = node_weights(&self.edges);
        for (actor, w) in &stored {
            if recomputed.get(*actor).copied().unwrap_or(0) != *w {
                return Err(format!("node {actor:?} weight {w} disagrees with its edges"));
            }
        }
        Ok(())
    }

    pub fn to_dot(&self) -> String {
        if self.is_empty() {
            return "digraph {}\n".to_string();
        }
        let (nlo, nhi) = span(self.nodes.iter().map(|n| n.weight));
        let (elo, ehi) = span(self.edges.iter().map(|e| e.weight));
        let mut out = String::from("digraph {\n");
        for n in &self.nodes {
            let _ = writeln!(
                out,
                "  {} [width={:.4}, weight={}];",
                dot_quote(&n.actor),
                linear(n.weight as f64, nlo, nhi, NODE_WIDTH),
                n.weight
            );
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}, penwidth={:.4}, weight={}];",
                dot_quote(&e.src),
                dot_quote(&e.dst),
                dot_quote(&e.verb),
                linear(e.weight as f64, elo, ehi, EDGE_PENWIDTH),
                e.weight
            );
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("graph serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<NarrativeGraph, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_graphml(&self) -> String {
        let mut out = String::from(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n\
  <key id=\"event\" for=\"graph\" attr.name=\"event\" attr.type=\"string\"/>\n\
  <key id=\"group\" for=\"graph\" attr.name=\"group\" attr.type=\"string\"/>\n\
  <key id=\"fraction\" for=\"graph\" attr.name=\"fraction\" attr.type=\"double\"/>\n\
  <key id=\"actor\" for=\"node\" attr.name=\"actor\" attr.type=\"string\"/>\n\
  <key id=\"nweight\" for=\"node\" attr.name=\"weight\" attr.type=\"long\"/>\n\
  <key id=\"verb\" for=\"edge\" attr.name=\"verb\" attr.type=\"string\"/>\n\
  <key id=\"eweight\" for=\"edge\" attr.name=\"weight\" attr.type=\"long\"/>\n\
  <graph id=\"G\" edgedefault=\"directed\">\n",
        );
        let _ = writeln!(out, "    <data key=\"event\">{}</data>", xml_escape(&self.meta.event));
        let _ = writeln!(out, "    <data key=\"group\">{}</data>", xml_escape(&self.meta.group));
        let _ = writeln!(out, "    <data key=\"fraction\">{}</data>", self.meta.fraction);
        let ids: BTreeMap<&str, usize> = self.nodes.iter().enumerate().map(|(i, n)| (n.actor.as_str(), i)).collect();
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(
                out,
                "    <node id=\"n{i}\"><data key=\"actor\">{}</data><data key=\"nweight\">{}</data></node>",
                xml_escape(&n.actor),
                n.weight
            );
        }
        for (i, e) in self.edges.iter().enumerate() {
            let _ = writeln!(
                out,
                "    <edge id=\"e{i}\" source=\"n{}\" target=\"n{}\"><data key=\"verb\">{}</data><data key=\"eweight\">{}</data></edge>",
                ids[e.src.as_str()],
                ids[e.dst.as_str()],
                xml_escape(&e.verb),
                e.weight
            );
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }
}
