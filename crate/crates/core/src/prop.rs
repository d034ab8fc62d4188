//! Propagation (representing) matrices built from a graph, and the sparse
//! matrix-matrix product that drives all vertex-domain filtering.

use crate::graph::Graph;
use crate::mat::Mat;
use crate::{Error, Result};

/// Which representing matrix to build from the adjacency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ReprKind {
    /// A — raw 0/1 adjacency.
    RawAdjacency,
    /// D^-1 A — random-walk normalization; isolated nodes keep all-zero rows.
    RandomWalk,
    /// D~^-1/2 (A + I) D~^-1/2 — the classic self-looped symmetric operator.
    SymNormSelfLoop,
    /// 0.1 (I - 0.9 P_sym)^-1 with P_sym the self-looped symmetric operator;
    /// dense by construction.
    PersonalizedPageRank,
}

impl ReprKind {
    pub fn parse(s: &str) -> Result<ReprKind> {
        match s {
            "adj" => Ok(ReprKind::RawAdjacency),
            "rw" => Ok(ReprKind::RandomWalk),
            "sym" => Ok(ReprKind::SymNormSelfLoop),
            "ppr" => Ok(ReprKind::PersonalizedPageRank),
            other => Err(Error::Config(format!(
                "unknown representation kind '{other}' (expected adj|rw|sym|ppr)"
            ))),
        }
    }

    pub fn flag_name(&self) -> &'static str {
        match self {
            ReprKind::RawAdjacency => "adj",
            ReprKind::RandomWalk => "rw",
            ReprKind::SymNormSelfLoop => "sym",
            ReprKind::PersonalizedPageRank => "ppr",
        }
    }
}

/// Square sparse matrix in CSR form with sorted column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row `(col, value)` lists; columns must be sorted.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        assert_eq!(rows.len(), n);
        let mut row_ptr = vec![0usize; n + 1];
        for (i, r) in rows.iter().enumerate() {
            debug_assert!(r.windows(2).all(|w| w[0].0 < w[1].0));
            row_ptr[i + 1] = row_ptr[i] + r.len();
        }
        let nnz = row_ptr[n];
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for r in rows {
            for (c, v) in r {
                col_idx.push(c);
                values.push(v);
            }
        }
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Y = A X, row-by-row with a fixed accumulation order.
    pub fn matmul_dense(&self, x: &Mat) -> Mat {
        let cols = x.cols();
        let mut out = Mat::zeros(self.n, cols);
        for i in 0..self.n {
            let out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                for (o, &b) in out_row.iter_mut().zip(x.row(j)) {
                    *o += v * b;
                }
            }
        }
        out
    }

    /// Y = A^T X, computed by scattering rows (deterministic order).
    pub fn matmul_dense_transpose(&self, x: &Mat) -> Mat {
        let cols = x.cols();
        let mut out = Mat::zeros(self.n, cols);
        for i in 0..self.n {
            let xi = x.row(i).to_vec();
            for (j, v) in self.row(i) {
                let out_row = out.row_mut(j);
                for (o, &b) in out_row.iter_mut().zip(&xi) {
                    *o += v * b;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        m
    }
}

/// A concrete representing matrix P, sparse for the first three kinds and
/// dense for personalized PageRank.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationMatrix {
    kind: ReprKind,
    storage: Storage,
    /// Nodes whose random-walk row is all-zero (isolated in the base graph).
    isolated_nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Sparse(CsrMatrix),
    Dense(Mat),
}

impl PropagationMatrix {
    pub fn kind(&self) -> ReprKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        match &self.storage {
            Storage::Sparse(c) => c.n(),
            Storage::Dense(m) => m.rows(),
        }
    }

    /// Isolated-node count diagnostic (nonzero only for random-walk).
    pub fn isolated_nodes(&self) -> usize {
        self.isolated_nodes
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn to_dense(&self) -> Mat {
        match &self.storage {
            Storage::Sparse(c) => c.to_dense(),
            Storage::Dense(m) => m.clone(),
        }
    }

    /// y = P x.
    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::Config(format!(
                "propagation apply length mismatch: n = {}, len = {}",
                self.n(),
                x.len()
            )));
        }
        Ok(match &self.storage {
            Storage::Sparse(c) => c.matvec(x),
            Storage::Dense(m) => m.matvec(x).expect("square dense matvec"),
        })
    }
}

/// P X for an `n x c` feature matrix X.
pub fn spmm(p: &PropagationMatrix, x: &Mat) -> Result<Mat> {
    if x.rows() != p.n() {
        return Err(Error::Config(format!(
            "spmm shape mismatch: P is {0}x{0}, X is {1}x{2}",
            p.n(),
            x.rows(),
            x.cols()
        )));
    }
    Ok(match &p.storage {
        Storage::Sparse(c) => c.matmul_dense(x),
        Storage::Dense(m) => m.matmul(x).expect("square dense matmul"),
    })
}

/// P^T X — needed by backpropagation through non-symmetric kinds.
pub fn spmm_transpose(p: &PropagationMatrix, x: &Mat) -> Result<Mat> {
    if x.rows() != p.n() {
        return Err(Error::Config(format!(
            "spmm_transpose shape mismatch: P is {0}x{0}, X is {1}x{2}",
            p.n(),
            x.rows(),
            x.cols()
        )));
    }
    Ok(match &p.storage {
        Storage::Sparse(c) => c.matmul_dense_transpose(x),
        Storage::Dense(m) => m.transpose().matmul(x).expect("square dense matmul"),
    })
}

/// Build the representing matrix of `kind` for `g`.
pub fn build_representation(g: &Graph, kind: ReprKind) -> Result<PropagationMatrix> {
    let n = g.node_count();
    match kind {
        ReprKind::RawAdjacency => {
            let rows = (0..n)
                .map(|i| g.neighbors(i).iter().map(|&j| (j, 1.0)).collect())
                .collect();
            Ok(PropagationMatrix {
                kind,
                storage: Storage::Sparse(CsrMatrix::from_rows(n, rows)),
                isolated_nodes: 0,
            })
        }
        ReprKind::RandomWalk => {
            let mut isolated = 0usize;
            let rows = (0..n)
                .map(|i| {
                    let d = g.degree(i);
                    if d == 0 {
                        isolated += 1;
                        Vec::new()
                    } else {
                        let w = 1.0 / d as f64;
                        g.neighbors(i).iter().map(|&j| (j, w)).collect()
                    }
                })
                .collect();
            Ok(PropagationMatrix {
                kind,
                storage: Storage::Sparse(CsrMatrix::from_rows(n, rows)),
                isolated_nodes: isolated,
            })
        }
        ReprKind::SymNormSelfLoop => Ok(PropagationMatrix {
            kind,
            storage: Storage::Sparse(sym_norm_selfloop(g)),
            isolated_nodes: 0,
        }),
        ReprKind::PersonalizedPageRank => {
            let sym = sym_norm_selfloop(g).to_dense();
            // (I - 0.9 P_sym) M = 0.1 I
            let mut system = sym.scale(-0.9);
            for i in 0..n {
                system[(i, i)] += 1.0;
            }
            let rhs = Mat::identity(n).scale(0.1);
            let m = system.solve(&rhs)?;
            if !m.is_finite() {
                return Err(Error::Numerical(
                    "personalized-pagerank solve produced non-finite entries".into(),
                ));
            }
            // symmetrize away solver round-off
            let sym_m = Mat::from_fn(n, n, |i, j| 0.5 * (m.get(i, j) + m.get(j, i)));
            Ok(PropagationMatrix {
                kind,
                storage: Storage::Dense(sym_m),
                isolated_nodes: 0,
            })
        }
    }
}

/// D~^-1/2 (A + I) D~^-1/2 in CSR form, D~ = deg + 1.
fn sym_norm_selfloop(g: &Graph) -> CsrMatrix {
    let n = g.node_count();
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
    let rows = (0..n)
        .map(|i| {
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(g.degree(i) + 1);
            let mut placed_diag = false;
            for &j in g.neighbors(i) {
                if !placed_diag && j > i {
                    row.push((i, inv_sqrt[i] * inv_sqrt[i]));
                    placed_diag = true;
                }
                row.push((j, inv_sqrt[i] * inv_sqrt[j]));
            }
            if !placed_diag {
                row.push((i, inv_sqrt[i] * inv_sqrt[i]));
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(n, rows)
}
