//! SDG-level interlink matrices (co-citation and co-classification),
//! per-SDG mean publication year and SDG clustering.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::cooccur::{cluster_graph, ClusterAssignment, ClusterParams, WeightedGraph};
use crate::corpus::{CitationGraph, Corpus, DocId, PubIdSet};
use crate::export::{AttrType, GraphEdge, GraphMl, GraphNode};
use crate::numfmt;
use crate::sdg::{prevalence, SdgAssignment, SdgId, SdgSet, N_SDGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixMode {
    Cocitation,
    Coclassification,
}

impl MatrixMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixMode::Cocitation => "cocitation",
            MatrixMode::Coclassification => "coclassification",
        }
    }
}

impl std::str::FromStr for MatrixMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cocitation" => Ok(MatrixMode::Cocitation),
            "coclassification" => Ok(MatrixMode::Coclassification),
            other => Err(format!("unknown matrix mode `{other}`")),
        }
    }
}

pub type Cells = [[u64; N_SDGS]; N_SDGS];

/// Symmetric 17x17 SDG matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdgMatrix {
    pub mode: MatrixMode,
    pub cells: Cells,
    /// Publications assigned each SDG.
    pub node_sizes: [u64; N_SDGS],
    pub node_avg_year: [Option<f64>; N_SDGS],
}

impl SdgMatrix {
    pub fn cell(&self, s: SdgId, t: SdgId) -> u64 {
        self.cells[s.index()][t.index()]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..N_SDGS).all(|i| (0..N_SDGS).all(|j| self.cells[i][j] == self.cells[j][i]))
    }

    pub fn total_link_strength(&self) -> u64 {
        (0..N_SDGS)
            .flat_map(|i| (i + 1..N_SDGS).map(move |j| (i, j)))
            .map(|(i, j)| self.cells[i][j])
            .sum()
    }

    pub fn weighted_graph(&self) -> WeightedGraph {
        let edges = (0..N_SDGS)
            .flat_map(|i| (i + 1..N_SDGS).map(move |j| (i, j)))
            .filter(|&(i, j)| self.cells[i][j] > 0)
            .map(|(i, j)| (i, j, self.cells[i][j] as f64));
        WeightedGraph::new(N_SDGS, edges.collect::<Vec<_>>())
    }
}

fn add_pairs(cells: &mut Cells, pairs: &BTreeSet<(usize, usize)>) {
    for &(i, j) in pairs {
        cells[i][j] += 1;
        cells[j][i] += 1;
    }
}

fn merge(mut a: Cells, b: Cells) -> Cells {
    for (ra, rb) in a.iter_mut().zip(b.iter()) {
        for (x, y) in ra.iter_mut().zip(rb.iter()) {
            *x += y;
        }
    }
    a
}

fn label_map(assignments: &[SdgAssignment]) -> HashMap<DocId, SdgSet> {
    assignments.iter().map(|a| (a.doc, a.sdgs)).collect()
}

/// Unordered SDG pairs `{s, t}`, `s != t`, with `s` from `x` and `t` from `y`.
fn cross_pairs(x: SdgSet, y: SdgSet) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for s in x.iter() {
        for t in y.iter() {
            if s != t {
                let (i, j) = (s.index(), t.index());
                out.insert((i.min(j), i.max(j)));
            }
        }
    }
    out
}

fn with_nodes(mode: MatrixMode, cells: Cells, assignments: &[SdgAssignment], corpus: &Corpus) -> SdgMatrix {
    SdgMatrix {
        mode,
        cells,
        node_sizes: prevalence(assignments).counts,
        node_avg_year: sdg_avg_year(assignments, corpus),
    }
}

/// For every citer in `set` and every unordered pair of distinct in-set
/// publications it cites, each unordered SDG pair spanned by the two label
/// sets gets one increment.
pub fn sdg_cocitation_matrix(
    assignments: &[SdgAssignment],
    corpus: &Corpus,
    graph: &CitationGraph,
    set: &PubIdSet,
) -> SdgMatrix {
    let labels = label_map(assignments);
    let citers: Vec<DocId> = set.iter().collect();
    let cells = citers
        .par_iter()
        .fold(
            || [[0u64; N_SDGS]; N_SDGS],
            |mut cells, &citer| {
                let cited: Vec<SdgSet> = graph
                    .cited_by(citer)
                    .iter()
                    .filter_map(|&node| graph.doc(node))
                    .filter(|&doc| doc != citer && set.contains(doc))
                    .map(|doc| labels.get(&doc).copied().unwrap_or_default())
                    .collect();
                for (a, &x) in cited.iter().enumerate() {
                    for &y in &cited[a + 1..] {
                        let mut pairs = cross_pairs(x, y);
                        pairs.extend(cross_pairs(y, x));
                        add_pairs(&mut cells, &pairs);
                    }
                }
                cells
            },
        )
        .reduce(|| [[0u64; N_SDGS]; N_SDGS], merge);
    with_nodes(MatrixMode::Cocitation, cells, assignments, corpus)
}

/// cell(s, t) = publications assigned both `s` and `t`.
pub fn sdg_coclassification_matrix(assignments: &[SdgAssignment], corpus: &Corpus) -> SdgMatrix {
    let mut cells = [[0u64; N_SDGS]; N_SDGS];
    for a in assignments {
        add_pairs(&mut cells, &cross_pairs(a.sdgs, a.sdgs));
    }
    with_nodes(MatrixMode::Coclassification, cells, assignments, corpus)
}

/// Mean publication year per SDG; `None` when no publication carries it.
pub fn sdg_avg_year(assignments: &[SdgAssignment], corpus: &Corpus) -> [Option<f64>; N_SDGS] {
    let mut sums = [0i64; N_SDGS];
    let mut counts = [0u64; N_SDGS];
    for a in assignments {
        let year = corpus.record(a.doc).year as i64;
        for id in a.sdgs.iter() {
            sums[id.index()] += year;
            counts[id.index()] += 1;
        }
    }
    let mut out = [None; N_SDGS];
    for i in 0..N_SDGS {
        if counts[i] > 0 {
            out[i] = Some(sums[i] as f64 / counts[i] as f64);
        }
    }
    out
}

/// Modularity clustering of the 17 SDG nodes; a zero matrix yields 17
/// singletons.
pub fn cluster_sdgs(matrix: &SdgMatrix, params: &ClusterParams) -> ClusterAssignment {
    cluster_graph(&matrix.weighted_graph(), params)
}

pub fn write_matrix_csv(matrix: &SdgMatrix, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["sdg".to_owned()];
    header.extend(SdgId::all().map(|id| id.to_string()));
    w.write_record(&header)?;
    for s in SdgId::all() {
        let mut row = vec![s.to_string()];
        row.extend(SdgId::all().map(|t| matrix.cell(s, t).to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn write_nodes_csv(matrix: &SdgMatrix, clusters: &ClusterAssignment, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sdg", "size", "avg_year", "cluster"])?;
    for s in SdgId::all() {
        let i = s.index();
        w.write_record([
            s.to_string(),
            matrix.node_sizes[i].to_string(),
            matrix.node_avg_year[i].map(|y| numfmt::fixed(y, 2)).unwrap_or_default(),
            clusters.membership[i].to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_graphml(matrix: &SdgMatrix, clusters: &ClusterAssignment, out: impl Write) -> io::Result<()> {
    let nodes = SdgId::all()
        .map(|s| {
            let i = s.index();
            GraphNode {
                id: format!("SDG{s}"),
                attrs: vec![
                    Some(matrix.node_sizes[i].to_string()),
                    matrix.node_avg_year[i].map(|y| numfmt::fixed(y, 2)),
                    Some(clusters.membership[i].to_string()),
                ],
            }
        })
        .collect();
    let mut edges = Vec::new();
    for s in SdgId::all() {
        for t in SdgId::all().filter(|t| t > &s) {
            let w = matrix.cell(s, t);
            if w > 0 {
                edges.push(GraphEdge {
                    source: format!("SDG{s}"),
                    target: format!("SDG{t}"),
                    attrs: vec![Some(w.to_string())],
                });
            }
        }
    }
    GraphMl {
        node_keys: vec![
            ("size".into(), AttrType::Int),
            ("avg_year".into(), AttrType::Double),
            ("cluster".into(), AttrType::Int),
        ],
        edge_keys: vec![("weight".into(), AttrType::Int)],
        nodes,
        edges,
    }
    .write(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_citation_graph, PublicationRecord};

    fn set(ids: &[u8]) -> SdgSet {
        ids.iter().map(|&i| SdgId::new(i).unwrap()).collect()
    }

    fn rec(id: &str, year: i32, refs: &[&str]) -> PublicationRecord {
        let mut r = PublicationRecord::new(id, year);
        r.references = refs.iter().map(|s| s.to_string()).collect();
        r
    }

    fn sdg(i: u8) -> SdgId {
        SdgId::new(i).unwrap()
    }

    #[test]
    fn cocitation_single_pair() {
        let corpus = Corpus::from_records([rec("A", 2010, &[]), rec("B", 2012, &[]), rec("C", 2014, &["A", "B"])]);
        let graph = build_citation_graph(&corpus);
        let assignments = vec![
            SdgAssignment {
                doc: DocId(0),
                sdgs: set(&[3]),
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: set(&[11]),
            },
            SdgAssignment {
                doc: DocId(2),
                sdgs: SdgSet::EMPTY,
            },
        ];
        let m = sdg_cocitation_matrix(&assignments, &corpus, &graph, &corpus.all());
        assert_eq!(m.cell(sdg(3), sdg(11)), 1);
        assert_eq!(m.cell(sdg(11), sdg(3)), 1);
        assert_eq!(m.total_link_strength(), 1);
        assert_eq!(m.node_sizes[2], 1);
        assert_eq!(m.node_avg_year[10], Some(2012.0));
        assert_eq!(m.node_avg_year[0], None);
    }

    #[test]
    fn cocitation_needs_two_in_set_citations() {
        let corpus = Corpus::from_records([rec("A", 2010, &[]), rec("C", 2014, &["A", "outside"])]);
        let graph = build_citation_graph(&corpus);
        let assignments = vec![
            SdgAssignment {
                doc: DocId(0),
                sdgs: set(&[3, 4]),
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: set(&[5]),
            },
        ];
        let m = sdg_cocitation_matrix(&assignments, &corpus, &graph, &corpus.all());
        assert_eq!(m.total_link_strength(), 0);
    }

    #[test]
    fn cocitation_counts_pair_once_per_cell() {
        let corpus = Corpus::from_records([rec("A", 2010, &[]), rec("B", 2010, &[]), rec("C", 2010, &["A", "B"])]);
        let graph = build_citation_graph(&corpus);
        let assignments = vec![
            SdgAssignment {
                doc: DocId(0),
                sdgs: set(&[3, 11]),
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: set(&[3, 11]),
            },
        ];
        let m = sdg_cocitation_matrix(&assignments, &corpus, &graph, &corpus.all());
        assert_eq!(m.cell(sdg(3), sdg(11)), 1);
        assert_eq!(m.cell(sdg(3), sdg(3)), 0);
    }

    #[test]
    fn coclassification_examples() {
        let corpus = Corpus::from_records([rec("A", 2010, &[]), rec("B", 2014, &[])]);
        let m = sdg_coclassification_matrix(
            &[SdgAssignment {
                doc: DocId(0),
                sdgs: set(&[1, 2]),
            }],
            &corpus,
        );
        assert_eq!(m.cell(sdg(1), sdg(2)), 1);
        assert!(m.is_symmetric());
        let singles = [
            SdgAssignment {
                doc: DocId(0),
                sdgs: set(&[1]),
            },
            SdgAssignment {
                doc: DocId(1),
                sdgs: set(&[1]),
            },
        ];
        let m = sdg_coclassification_matrix(&singles, &corpus);
        assert_eq!(m.total_link_strength(), 0);
        assert_eq!(m.node_avg_year[0], Some(2012.0));
    }

    #[test]
    fn zero_matrix_clusters_to_singletons() {
        let corpus = Corpus::from_records([rec("A", 2010, &[])]);
        let m = sdg_coclassification_matrix(&[], &corpus);
        let c = cluster_sdgs(&m, &ClusterParams::default());
        assert_eq!(c.n_clusters, N_SDGS);
    }

    #[test]
    fn dominant_pair_is_coclustered() {
        let corpus = Corpus::from_records([rec("A", 2010, &[])]);
        let mut m = sdg_coclassification_matrix(&[], &corpus);
        let mut put = |a: u8, b: u8, w: u64| {
            m.cells[a as usize - 1][b as usize - 1] = w;
            m.cells[b as usize - 1][a as usize - 1] = w;
        };
        put(3, 11, 5154);
        put(3, 8, 40);
        put(11, 8, 30);
        put(8, 9, 900);
        put(3, 13, 200);
        let c = cluster_sdgs(&m, &ClusterParams::default());
        assert_eq!(c.membership[2], c.membership[10]);
        assert_eq!(c.membership[7], c.membership[8]);
        assert_ne!(c.membership[2], c.membership[7]);
    }

    #[test]
    fn csv_and_graphml_shapes() {
        let corpus = Corpus::from_records([rec("A", 2010, &[])]);
        let m = sdg_coclassification_matrix(
            &[SdgAssignment {
                doc: DocId(0),
                sdgs: set(&[1, 2]),
            }],
            &corpus,
        );
        let c = cluster_sdgs(&m, &ClusterParams::default());
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 18);
        assert!(text.starts_with("sdg,1,2,3"));
        assert!(text.lines().nth(1).unwrap().starts_with("1,0,1,0"));
        let mut buf = Vec::new();
        write_graphml(&m, &c, &mut buf).unwrap();
        let xml = String::from_utf8(buf).unwrap();
        assert_eq!(xml.matches("<edge ").count(), 1);
        assert_eq!(xml.matches("<node ").count(), 17);
    }
}
