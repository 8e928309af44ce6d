//! Modularity clustering of undirected weighted graphs.
//!
//! Quality is weighted modularity with a resolution parameter `γ`:
//!
//! ```text
//! Q = (1 / 2m) Σ_ij [ A_ij − γ k_i k_j / 2m ] δ(c_i, c_j)
//! ```
//!
//! Optimization is seeded local moving: nodes are visited in an order
//! shuffled by a ChaCha generator, each node moves to the neighbouring
//! cluster (or a fresh empty one) with the largest strictly positive gain,
//! ties going to the lowest cluster id, and passes repeat until no move
//! improves the objective. Clusters found at one level are then collapsed
//! into single nodes and local moving resumes on the aggregate graph, until
//! a level makes no move. Several restarts run with derived seeds and the
//! best partition is kept.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Relative slack below which two qualities count as equal.
const QUALITY_TIE: f64 = 1e-12;
const MAX_PASSES: usize = 10_000;

/// Undirected graph with positive edge weights and no self-loops.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedGraph {
    adj: Vec<Vec<(u32, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph on `n` nodes. Parallel edges are summed; self-loops and
    /// non-positive weights are ignored.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut maps: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n];
        for (u, v, w) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u == v || w.is_nan() || w <= 0.0 {
                continue;
            }
            *maps[u].entry(v as u32).or_default() += w;
            *maps[v].entry(u as u32).or_default() += w;
        }
        let adj = maps
            .into_iter()
            .map(|m| {
                let mut row: Vec<(u32, f64)> = m.into_iter().collect();
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            })
            .collect();
        WeightedGraph { adj }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, node: usize) -> &[(u32, f64)] {
        &self.adj[node]
    }

    pub fn strength(&self, node: usize) -> f64 {
        self.adj[node].iter().map(|&(_, w)| w).sum()
    }

    /// Sum of edge weights, each undirected edge counted once.
    pub fn total_weight(&self) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, w) in row {
                if (j as usize) > i {
                    total += w;
                }
            }
        }
        total
    }
}

/// Weighted modularity of `membership` at resolution `resolution`.
/// A graph without edges has modularity 0.
pub fn modularity(graph: &WeightedGraph, membership: &[u32], resolution: f64) -> f64 {
    assert_eq!(membership.len(), graph.node_count());
    let n_clusters = membership.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut internal = vec![0.0; n_clusters];
    let mut degree = vec![0.0; n_clusters];
    let mut two_m = 0.0;
    for (i, row) in graph.adj.iter().enumerate() {
        let ci = membership[i] as usize;
        for &(j, w) in row {
            two_m += w;
            degree[ci] += w;
            if membership[j as usize] as usize == ci {
                internal[ci] += w;
            }
        }
    }
    if two_m == 0.0 {
        return 0.0;
    }
    internal
        .iter()
        .zip(&degree)
        .map(|(&inside, &k)| inside / two_m - resolution * (k / two_m) * (k / two_m))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterParams {
    pub resolution: f64,
    pub min_cluster_size: usize,
    pub seed: u64,
    pub restarts: u32,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            resolution: 1.0,
            min_cluster_size: 1,
            seed: 0,
            restarts: 10,
        }
    }
}

/// Cluster ids are numbered by decreasing size, ties by smallest member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterAssignment {
    pub membership: Vec<u32>,
    pub n_clusters: usize,
    pub quality: f64,
}

impl ClusterAssignment {
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &c in &self.membership {
            sizes[c as usize] += 1;
        }
        sizes
    }

    pub fn members(&self, cluster: u32) -> impl Iterator<Item = usize> + '_ {
        self.membership
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }
}

/// Level graph used during optimization. Self-loop weight is implicit in
/// `strength`; `adj` holds only edges between distinct nodes.
struct Level {
    adj: Vec<Vec<(u32, f64)>>,
    strength: Vec<f64>,
}

impl Level {
    fn from_graph(graph: &WeightedGraph) -> Self {
        let strength = (0..graph.node_count()).map(|i| graph.strength(i)).collect();
        Level {
            adj: graph.adj.clone(),
            strength,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses each community into one node.
    fn aggregate(&self, community: &[u32], n_communities: usize) -> Level {
        let mut maps: Vec<HashMap<u32, f64>> = vec![HashMap::new(); n_communities];
        let mut strength = vec![0.0; n_communities];
        for (i, row) in self.adj.iter().enumerate() {
            let ci = community[i];
            strength[ci as usize] += self.strength[i];
            for &(j, w) in row {
                let cj = community[j as usize];
                if ci != cj {
                    *maps[ci as usize].entry(cj).or_default() += w;
                }
            }
        }
        let adj = maps
            .into_iter()
            .map(|m| {
                let mut row: Vec<(u32, f64)> = m.into_iter().collect();
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            })
            .collect();
        Level { adj, strength }
    }
}

/// Local moving on one level, starting from singletons. Returns the
/// community of each node (renumbered densely in node order) and whether any
/// node moved.
fn local_moving(level: &Level, two_m: f64, resolution: f64, rng: &mut ChaCha8Rng) -> (Vec<u32>, usize, bool) {
    let n = level.len();
    let mut community: Vec<u32> = (0..n as u32).collect();
    let mut total: Vec<f64> = level.strength.clone();
    let mut size: Vec<usize> = vec![1; n];
    let mut empty: Vec<u32> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link: Vec<f64> = vec![0.0; n];
    let mut touched: Vec<u32> = Vec::new();
    let mut any_move = false;
    for _ in 0..MAX_PASSES {
        let mut moved = false;
        for &i in &order {
            let current = community[i];
            let k_i = level.strength[i];
            for &(j, w) in &level.adj[i] {
                let c = community[j as usize];
                if link[c as usize] == 0.0 {
                    touched.push(c);
                }
                link[c as usize] += w;
            }
            total[current as usize] -= k_i;
            size[current as usize] -= 1;
            let scale = resolution * k_i / two_m;
            let stay = link[current as usize] - scale * total[current as usize];

            let mut best = current;
            let mut best_gain = stay;
            touched.sort_unstable();
            for &c in &touched {
                if c == current {
                    continue;
                }
                let gain = link[c as usize] - scale * total[c as usize];
                if gain > best_gain && better(gain, stay) {
                    best = c;
                    best_gain = gain;
                }
            }
            // isolating the node in a fresh cluster has gain 0
            if size[current as usize] > 0 && 0.0 > best_gain && better(0.0, stay) {
                best = *empty
                    .last()
                    .expect("fewer occupied communities than nodes leaves a free id");
            }
            for &c in &touched {
                link[c as usize] = 0.0;
            }
            touched.clear();

            if best != current {
                if empty.last() == Some(&best) {
                    empty.pop();
                }
                community[i] = best;
                moved = true;
                any_move = true;
                if size[current as usize] == 0 {
                    empty.push(current);
                }
            }
            total[best as usize] += k_i;
            size[best as usize] += 1;
        }
        if !moved {
            break;
        }
    }
    let (dense, count) = renumber(&community);
    (dense, count, any_move)
}

fn better(gain: f64, stay: f64) -> bool {
    gain - stay > QUALITY_TIE * (1.0 + gain.abs() + stay.abs())
}

/// Dense renumbering in order of first appearance.
fn renumber(community: &[u32]) -> (Vec<u32>, usize) {
    let mut map: HashMap<u32, u32> = HashMap::new();
    let dense = community
        .iter()
        .map(|&c| {
            let next = map.len() as u32;
            *map.entry(c).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

/// Relabels clusters by decreasing size, ties by smallest member index.
fn canonical(membership: &[u32]) -> (Vec<u32>, usize) {
    let (dense, count) = renumber(membership);
    let mut stats: Vec<(usize, usize, u32)> = (0..count as u32).map(|c| (0, usize::MAX, c)).collect();
    for (i, &c) in dense.iter().enumerate() {
        let s = &mut stats[c as usize];
        s.0 += 1;
        s.1 = s.1.min(i);
    }
    stats.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut relabel = vec![0u32; count];
    for (new, &(_, _, old)) in stats.iter().enumerate() {
        relabel[old as usize] = new as u32;
    }
    (dense.iter().map(|&c| relabel[c as usize]).collect(), count)
}

fn louvain(graph: &WeightedGraph, resolution: f64, seed: u64) -> Vec<u32> {
    let n = graph.node_count();
    let two_m: f64 = 2.0 * graph.total_weight();
    let mut membership: Vec<u32> = (0..n as u32).collect();
    if two_m == 0.0 {
        return membership;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = Level::from_graph(graph);
    loop {
        let (community, count, moved) = local_moving(&level, two_m, resolution, &mut rng);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = community[*m as usize];
        }
        if count == level.len() {
            break;
        }
        level = level.aggregate(&community, count);
    }
    membership
}

/// Merges clusters smaller than `min_size` into the neighbouring cluster
/// with the largest connecting weight, smallest clusters first. Clusters
/// with no connecting weight are left as they are.
fn merge_small(graph: &WeightedGraph, membership: &mut [u32], min_size: usize) {
    if min_size <= 1 {
        return;
    }
    let mut stuck: Vec<u32> = Vec::new();
    loop {
        let (canon, count) = canonical(membership);
        membership.copy_from_slice(&canon);
        let mut sizes = vec![0usize; count];
        for &c in membership.iter() {
            sizes[c as usize] += 1;
        }
        // canonical ids are size-descending, so scan from the back
        let candidate = (0..count as u32)
            .rev()
            .filter(|&c| sizes[c as usize] < min_size)
            .filter(|c| !stuck.contains(c))
            .min_by_key(|&c| (sizes[c as usize], c));
        let Some(small) = candidate else { break };
        let mut weight = vec![0.0; count];
        for (i, &c) in membership.iter().enumerate() {
            if c != small {
                continue;
            }
            for &(j, w) in graph.neighbors(i) {
                let cj = membership[j as usize];
                if cj != small {
                    weight[cj as usize] += w;
                }
            }
        }
        let mut target: Option<u32> = None;
        for (c, &w) in weight.iter().enumerate() {
            if w > 0.0 && target.is_none_or(|t| w > weight[t as usize]) {
                target = Some(c as u32);
            }
        }
        match target {
            Some(t) => {
                for c in membership.iter_mut() {
                    if *c == small {
                        *c = t;
                    }
                }
                stuck.clear();
            }
            None => stuck.push(small),
        }
    }
}

/// Clusters `graph`, returning the best of `params.restarts` seeded runs
/// (highest modularity; ties by lexicographically smallest size vector,
/// then by earliest restart). Output depends only on the inputs, not on the
/// number of worker threads.
pub fn cluster_graph(graph: &WeightedGraph, params: &ClusterParams) -> ClusterAssignment {
    let n = graph.node_count();
    if n == 0 {
        return ClusterAssignment {
            membership: Vec::new(),
            n_clusters: 0,
            quality: 0.0,
        };
    }
    let restarts = params.restarts.max(1);
    let runs: Vec<ClusterAssignment> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let seed = params.seed.wrapping_add(r as u64);
            let mut membership = louvain(graph, params.resolution, seed);
            merge_small(graph, &mut membership, params.min_cluster_size);
            let (membership, n_clusters) = canonical(&membership);
            let quality = modularity(graph, &membership, params.resolution);
            ClusterAssignment {
                membership,
                n_clusters,
                quality,
            }
        })
        .collect();
    let mut best = &runs[0];
    for run in &runs[1..] {
        let tie = (run.quality - best.quality).abs() <= QUALITY_TIE * (1.0 + run.quality.abs() + best.quality.abs());
        if (!tie && run.quality > best.quality) || (tie && run.sizes() < best.sizes()) {
            best = run;
        }
    }
    best.clone()
}
