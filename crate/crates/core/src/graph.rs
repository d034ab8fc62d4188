//! Undirected graphs in compressed sparse row form, plus the two synthetic
//! constructions the experiments need: kNN graphs over point clouds and
//! stochastic block models.

use std::collections::BTreeSet;

use crate::mat::Mat;
use crate::rng;
use crate::{Error, Result};

/// Immutable undirected graph with unit edge weights.
///
/// The adjacency is stored as CSR with sorted column indices per row; entry
/// `(i, j)` is present iff `(j, i)` is. The base graph never stores
/// self-loops — representation builders add them where a kind calls for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    num_edges: usize,
    self_loops_dropped: usize,
}

impl Graph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.num_edges
    }

    /// How many `(u, u)` pairs were discarded at ingest.
    pub fn self_loops_dropped(&self) -> usize {
        self.self_loops_dropped
    }

    /// Neighbors of `i`, in ascending order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn degrees(&self) -> DegreeVector {
        DegreeVector((0..self.n).map(|i| self.degree(i)).collect())
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges);
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_dense(&self) -> Mat {
        let mut a = Mat::zeros(self.n, self.n);
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                a.set(u, v, 1.0);
            }
        }
        a
    }

    /// Number of connected components (used by CLI diagnostics and tests).
    pub fn connected_components(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}

/// Node degrees as a vector; the diagonal degree matrix is implied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeVector(pub Vec<usize>);

impl DegreeVector {
    /// Equals twice the edge count for any valid graph.
    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Build a graph from an edge list. Duplicate pairs and both orientations
/// collapse to a single undirected edge; `(u, u)` pairs are dropped and
/// counted.
pub fn build_graph(edge_list: &[(usize, usize)], n: usize) -> Result<Graph> {
    if n == 0 {
        return Err(Error::Config("graph must have at least one node".into()));
    }
    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut dropped = 0usize;
    for &(u, v) in edge_list {
        if u >= n || v >= n {
            return Err(Error::Config(format!(
                "edge ({u}, {v}) references a node id >= n = {n}"
            )));
        }
        if u == v {
            dropped += 1;
            continue;
        }
        set.insert((u.min(v), u.max(v)));
    }
    Ok(from_edge_set(&set, n, dropped))
}

fn from_edge_set(set: &BTreeSet<(usize, usize)>, n: usize, dropped: usize) -> Graph {
    let mut degree = vec![0usize; n];
    for &(u, v) in set {
        degree[u] += 1;
        degree[v] += 1;
    }
    let mut row_ptr = vec![0usize; n + 1];
    for i in 0..n {
        row_ptr[i + 1] = row_ptr[i] + degree[i];
    }
    let mut col_idx = vec![0usize; row_ptr[n]];
    let mut cursor = row_ptr.clone();
    for &(u, v) in set {
        col_idx[cursor[u]] = v;
        cursor[u] += 1;
        col_idx[cursor[v]] = u;
        cursor[v] += 1;
    }
    // BTreeSet iteration fills each row in ascending column order for u < v
    // entries but interleaves the mirrored ones; sort per row to restore the
    // CSR invariant.
    for i in 0..n {
        col_idx[row_ptr[i]..row_ptr[i + 1]].sort_unstable();
    }
    Graph {
        n,
        row_ptr,
        col_idx,
        num_edges: set.len(),
        self_loops_dropped: dropped,
    }
}

/// kNN graph over a point cloud: edge `(i, j)` iff `j` is among the `k`
/// nearest Euclidean neighbors of `i` or vice versa (symmetrized union).
/// Distance ties break toward the lower node index.
pub fn knn_graph(points: &Mat, k: usize) -> Result<Graph> {
    let n = points.rows();
    if k == 0 {
        return Err(Error::Config("knn_graph requires k >= 1".into()));
    }
    if k >= n {
        return Err(Error::Config(format!(
            "knn_graph requires k < n (got k = {k}, n = {n})"
        )));
    }
    if points.cols() == 0 {
        return Err(Error::Config("points must have at least one coordinate".into()));
    }
    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        let pi = points.row(i);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d2: f64 = pi
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push((d2, j));
        }
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, j) in dists.iter().take(k) {
            set.insert((i.min(j), i.max(j)));
        }
    }
    Ok(from_edge_set(&set, n, 0))
}

/// Stochastic block model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmParams {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seeds_per_block: usize,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sbm requires n >= 1".into()));
        }
        if self.blocks < 2 {
            return Err(Error::Config("sbm requires at least 2 blocks".into()));
        }
        if self.blocks > self.n {
            return Err(Error::Config("sbm requires blocks <= n".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.p_in <= self.p_out {
            return Err(Error::Config(format!(
                "sbm requires p_in > p_out (got {} <= {})",
                self.p_in, self.p_out
            )));
        }
        Ok(())
    }

    /// Block of node `i`: blocks are contiguous id ranges of size
    /// `floor(n / B)`, with the remainder spread over the first blocks.
    pub fn block_of(&self, i: usize) -> usize {
        let base = self.n / self.blocks;
        let extra = self.n % self.blocks;
        // first `extra` blocks have size base + 1
        let cutoff = extra * (base + 1);
        if i < cutoff {
            i / (base + 1)
        } else {
            extra + (i - cutoff) / base
        }
    }
}

/// Generate an SBM instance. Edge decisions use the counter-based integer
/// generator keyed by `seed`, so the edge set is byte-identical across runs
/// and platforms. Returns the graph, per-node block labels, and an `n x B`
/// feature matrix that one-hot reveals the block on `seeds_per_block`
/// deterministically chosen nodes per block (zero rows elsewhere).
pub fn sbm_generate(params: &SbmParams, seed: u64) -> Result<(Graph, Vec<usize>, Mat)> {
    params.validate()?;
    let n = params.n;
    let labels: Vec<usize> = (0..n).map(|i| params.block_of(i)).collect();

    let mut set: BTreeSet<(usize, usize)> = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] {
                params.p_in
            } else {
                params.p_out
            };
            let counter = (u * n + v) as u64;
            if rng::coin(seed, counter, p) {
                set.insert((u, v));
            }
        }
    }
    let graph = from_edge_set(&set, n, 0);

    let mut features = Mat::zeros(n, params.blocks);
    for b in 0..params.blocks {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == b).collect();
        rng::shuffle(&mut members, rng::keyed(seed, 0x5EED_0000 + b as u64));
        for &i in members.iter().take(params.seeds_per_block) {
            features.set(i, b, 1.0);
        }
    }
    Ok((graph, labels, features))
}
