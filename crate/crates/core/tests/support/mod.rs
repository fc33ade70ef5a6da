#![allow(dead_code)]

pub mod dot;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use storyline::corpus::AuthorCategory;
use storyline::normalize::{NarrativeCluster, Svo};

/// Actor names exercising quoting: quotes, backslashes, newlines, CJK and
/// spaces.
pub const ACTORS: &[&str] = &[
    "Russia",
    "Ukraine",
    "NATO",
    "美国",
    "上海",
    "US and allies",
    "the \"West\"",
    "back\\slash",
    "two\nlines",
    "a-b",
    "x",
    "Taiwan",
];

pub const VERBS: &[&str] = &["invades", "supports", "制裁", "says \"no\"", "has", "set up", "\\d"];

/// `n` clusters with distinct canonical tuples and counts in `1..=max_count`.
pub fn random_clusters<R: Rng>(rng: &mut R, n: usize, max_count: usize) -> Vec<NarrativeCluster> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let svo = Svo::new(
            *ACTORS.choose(rng).unwrap(),
            *VERBS.choose(rng).unwrap(),
            *ACTORS.choose(rng).unwrap(),
        );
        if !seen.insert(svo.clone()) {
            continue;
        }
        let count = rng.gen_range(1..=max_count);
        out.push(NarrativeCluster {
            canonical: svo,
            count,
            members: Vec::new(),
            by_group: BTreeMap::from([(AuthorCategory::Other, count)]),
        });
    }
    out
}

/// Kept canonical tuples for a fraction `pct / 100`, computed with integer
/// arithmetic: the top `⌈pct·n/100⌉` counts plus every tie of the last one.
pub fn oracle_kept(clusters: &[NarrativeCluster], pct: usize) -> BTreeSet<Svo> {
    if clusters.is_empty() {
        return BTreeSet::new();
    }
    let mut counts: Vec<usize> = clusters.iter().map(|c| c.count).collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    let m = ((pct * counts.len()).div_ceil(100)).max(1);
    let cutoff = counts[m - 1];
    clusters
        .iter()
        .filter(|c| c.count >= cutoff)
        .map(|c| c.canonical.clone())
        .collect()
}
