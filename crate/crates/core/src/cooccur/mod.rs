//! Keyword co-occurrence networks: construction, association-strength
//! normalization, modularity clustering and per-cluster summaries.

pub mod clustering;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, PubIdSet, PublicationRecord};
use crate::export::{AttrType, GraphEdge, GraphMl, GraphNode};
use crate::numfmt::{self, Percent};
use crate::text;

pub use clustering::{cluster_graph, modularity, ClusterAssignment, ClusterParams, WeightedGraph};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CooccurError {
    #[error("min_occurrence must be at least 1")]
    MinOccurrence,
}

/// Normalized, deduplicated union of a record's author and index keywords.
pub fn extract_terms(record: &PublicationRecord) -> BTreeSet<String> {
    record
        .keywords()
        .map(text::normalize)
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermEdge {
    /// Term index, always `< target`.
    pub source: u32,
    pub target: u32,
    /// Publications containing both terms.
    pub count: u64,
    /// Association strength.
    pub weight: f64,
}

/// Undirected keyword network over a publication set. Terms are sorted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CooccurrenceNetwork {
    terms: Vec<String>,
    occurrence: Vec<u64>,
    edges: Vec<TermEdge>,
    n_publications: u64,
}

impl CooccurrenceNetwork {
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &str {
        &self.terms[i]
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok()
    }

    pub fn occurrence(&self, i: usize) -> u64 {
        self.occurrence[i]
    }

    pub fn edges(&self) -> &[TermEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Publications in the set the network was built from.
    pub fn n_publications(&self) -> u64 {
        self.n_publications
    }

    pub fn total_links(&self) -> usize {
        self.edges.len()
    }

    pub fn total_link_strength(&self) -> u64 {
        self.edges.iter().map(|e| e.count).sum()
    }

    pub fn count_between(&self, a: &str, b: &str) -> u64 {
        let (Some(i), Some(j)) = (self.term_index(a), self.term_index(b)) else {
            return 0;
        };
        let (s, t) = (i.min(j) as u32, i.max(j) as u32);
        self.edges
            .binary_search_by(|e| (e.source, e.target).cmp(&(s, t)))
            .map(|k| self.edges[k].count)
            .unwrap_or(0)
    }

    /// The weighted graph (association-strength weights) used for clustering.
    pub fn weighted_graph(&self) -> WeightedGraph {
        WeightedGraph::new(
            self.terms.len(),
            self.edges
                .iter()
                .map(|e| (e.source as usize, e.target as usize, e.weight)),
        )
    }
}

/// Builds the network over terms occurring in at least `min_occurrence`
/// publications of `set`, with association-strength weights filled in.
pub fn build_network(
    set: &PubIdSet,
    corpus: &Corpus,
    min_occurrence: u64,
) -> Result<CooccurrenceNetwork, CooccurError> {
    if min_occurrence == 0 {
        return Err(CooccurError::MinOccurrence);
    }
    let docs: Vec<_> = set.iter().collect();
    let term_sets: Vec<BTreeSet<String>> = docs.par_iter().map(|&d| extract_terms(corpus.record(d))).collect();

    let mut occ: BTreeMap<&str, u64> = BTreeMap::new();
    for terms in &term_sets {
        for t in terms {
            *occ.entry(t.as_str()).or_default() += 1;
        }
    }
    let kept: Vec<(&str, u64)> = occ.into_iter().filter(|&(_, c)| c >= min_occurrence).collect();
    let index: HashMap<&str, u32> = kept.iter().enumerate().map(|(i, &(t, _))| (t, i as u32)).collect();

    let pair_counts: HashMap<(u32, u32), u64> = term_sets
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<(u32, u32), u64>, terms| {
            // BTreeSet iteration is sorted, so indices come out ascending
            let ids: Vec<u32> = terms.iter().filter_map(|t| index.get(t.as_str()).copied()).collect();
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    *acc.entry((i, j)).or_default() += 1;
                }
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    let mut edges: Vec<TermEdge> = pair_counts
        .into_iter()
        .map(|((source, target), count)| TermEdge {
            source,
            target,
            count,
            weight: 0.0,
        })
        .collect();
    edges.sort_unstable_by_key(|e| (e.source, e.target));

    let network = CooccurrenceNetwork {
        terms: kept.iter().map(|&(t, _)| t.to_owned()).collect(),
        occurrence: kept.iter().map(|&(_, c)| c).collect(),
        edges,
        n_publications: docs.len() as u64,
    };
    Ok(association_strength(network))
}

/// Fills each edge weight with `2 T c_ij / (o_i o_j)`, where `T` is the
/// number of publications. Integer products are exact; one rounding occurs
/// in the final division.
pub fn association_strength(mut network: CooccurrenceNetwork) -> CooccurrenceNetwork {
    let t = network.n_publications as u128;
    for e in &mut network.edges {
        let num = 2 * t * e.count as u128;
        let den = network.occurrence[e.source as usize] as u128 * network.occurrence[e.target as usize] as u128;
        e.weight = num as f64 / den as f64;
    }
    network
}

/// Clusters the network's terms by modularity on association-strength weights.
pub fn cluster(network: &CooccurrenceNetwork, params: &ClusterParams) -> ClusterAssignment {
    cluster_graph(&network.weighted_graph(), params)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub cluster_id: u32,
    /// Left empty; assigned by an analyst.
    pub label: String,
    pub n_nodes: usize,
    /// Publications of the set containing at least one cluster term.
    pub n_publications: u64,
    pub core_paper_count: u64,
    pub core_paper_pct: Percent,
    /// Mean number of network term pairs per publication.
    pub link_avg: Option<f64>,
    pub year_avg: Option<f64>,
    pub top_terms: Vec<(String, u64)>,
    /// True when no publication of the set carries any of the cluster's terms.
    pub degenerate: bool,
}

/// Per-cluster statistics. A publication's links are the term pairs among
/// its network terms, i.e. `k (k - 1) / 2` for `k` network terms, each of
/// which is a network edge by construction.
pub fn cluster_summary(
    network: &CooccurrenceNetwork,
    assignment: &ClusterAssignment,
    set: &PubIdSet,
    corpus: &Corpus,
    core: &PubIdSet,
    top_n: usize,
) -> Vec<ClusterSummary> {
    let k = assignment.n_clusters;
    let mut pubs = vec![0u64; k];
    let mut core_count = vec![0u64; k];
    let mut links = vec![0u64; k];
    let mut years = vec![0i64; k];
    for doc in set {
        let record = corpus.record(doc);
        let ids: Vec<usize> = extract_terms(record)
            .iter()
            .filter_map(|t| network.term_index(t))
            .collect();
        if ids.is_empty() {
            continue;
        }
        let n = ids.len() as u64;
        let pairs = n * (n - 1) / 2;
        let clusters: BTreeSet<u32> = ids.iter().map(|&i| assignment.membership[i]).collect();
        for c in clusters {
            let c = c as usize;
            pubs[c] += 1;
            links[c] += pairs;
            years[c] += record.year as i64;
            if core.contains(doc) {
                core_count[c] += 1;
            }
        }
    }
    (0..k)
        .map(|c| {
            let mut top: Vec<(String, u64)> = assignment
                .members(c as u32)
                .map(|i| (network.term(i).to_owned(), network.occurrence(i)))
                .collect();
            let n_nodes = top.len();
            top.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            top.truncate(top_n);
            let n_pubs = pubs[c];
            let mean = |total: f64| (n_pubs > 0).then(|| total / n_pubs as f64);
            ClusterSummary {
                cluster_id: c as u32,
                label: String::new(),
                n_nodes,
                n_publications: n_pubs,
                core_paper_count: core_count[c],
                core_paper_pct: Percent::of_or_zero(core_count[c], n_pubs),
                link_avg: mean(links[c] as f64),
                year_avg: mean(years[c] as f64),
                top_terms: top,
                degenerate: n_pubs == 0,
            }
        })
        .collect()
}

pub fn write_edges_csv(
    network: &CooccurrenceNetwork,
    assignment: &ClusterAssignment,
    out: impl Write,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["term_i", "term_j", "c_ij", "a_ij", "cluster_i", "cluster_j"])?;
    for e in network.edges() {
        let (i, j) = (e.source as usize, e.target as usize);
        w.write_record([
            network.term(i),
            network.term(j),
            &e.count.to_string(),
            &numfmt::ratio(e.weight),
            &assignment.membership[i].to_string(),
            &assignment.membership[j].to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_graphml(network: &CooccurrenceNetwork, assignment: &ClusterAssignment, out: impl Write) -> io::Result<()> {
    let nodes = network
        .terms()
        .iter()
        .enumerate()
        .map(|(i, term)| GraphNode {
            id: term.clone(),
            attrs: vec![
                Some(network.occurrence(i).to_string()),
                Some(assignment.membership[i].to_string()),
            ],
        })
        .collect();
    let edges = network
        .edges()
        .iter()
        .map(|e| GraphEdge {
            source: network.term(e.source as usize).to_owned(),
            target: network.term(e.target as usize).to_owned(),
            attrs: vec![Some(e.count.to_string()), Some(numfmt::ratio(e.weight))],
        })
        .collect();
    GraphMl {
        node_keys: vec![("occurrence".into(), AttrType::Int), ("cluster".into(), AttrType::Int)],
        edge_keys: vec![("count".into(), AttrType::Int), ("weight".into(), AttrType::Double)],
        nodes,
        edges,
    }
    .write(out)
}

pub fn write_nodes_csv(
    network: &CooccurrenceNetwork,
    assignment: &ClusterAssignment,
    out: impl Write,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["term", "occurrence", "cluster"])?;
    for (i, term) in network.terms().iter().enumerate() {
        w.write_record([
            term.as_str(),
            &network.occurrence(i).to_string(),
            &assignment.membership[i].to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_summary_csv(summaries: &[ClusterSummary], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cluster_id",
        "label",
        "n_nodes",
        "n_publications",
        "core_paper_count",
        "core_paper_pct",
        "link_avg",
        "year_avg",
        "top_terms",
        "degenerate",
    ])?;
    let opt = |x: Option<f64>| x.map(numfmt::ratio).unwrap_or_default();
    for s in summaries {
        let top: Vec<String> = s.top_terms.iter().map(|(t, f)| format!("{t} ({f})")).collect();
        w.write_record([
            s.cluster_id.to_string(),
            s.label.clone(),
            s.n_nodes.to_string(),
            s.n_publications.to_string(),
            s.core_paper_count.to_string(),
            s.core_paper_pct.to_string(),
            opt(s.link_avg),
            opt(s.year_avg),
            top.join("; "),
            s.degenerate.to_string(),
        ])?;
    }
    w.flush()
}
