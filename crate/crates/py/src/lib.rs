//! Python bindings for the graph spectral / TGCN toolbox.
//!
//! Exposes the main types (Graph, PropagationMatrix, SpectralBasis,
//! PolynomialCoeffs) and operations (representation building, spmm,
//! eigendecomposition, wavelet filtering, Taylor/Chebyshev approximation,
//! split generation, node-classifier training) as a `tgcn` module.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use tgcn_core::data::{make_splits as core_make_splits, Dataset, SplitRatio, SplitSpec};
use tgcn_core::graph;
use tgcn_core::layers::ModelKind;
use tgcn_core::mat::Mat;
use tgcn_core::prop;
use tgcn_core::spectral;
use tgcn_core::train;
use tgcn_core::Error;

fn to_py_err(err: Error) -> PyErr {
    match err {
        Error::Config(_) => PyValueError::new_err(err.to_string()),
        Error::Data(_) | Error::Io(_) => PyIOError::new_err(err.to_string()),
        Error::Numerical(_) => PyRuntimeError::new_err(err.to_string()),
    }
}

fn mat_from_rows(rows: Vec<Vec<f64>>) -> PyResult<Mat> {
    Mat::from_rows(&rows).map_err(to_py_err)
}

fn mat_to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Immutable undirected graph with CSR adjacency.
#[pyclass(name = "Graph")]
#[derive(Clone)]
struct PyGraph {
    inner: graph::Graph,
}

#[pymethods]
impl PyGraph {
    /// Build from an edge list over nodes 0..n.
    #[new]
    fn new(edges: Vec<(usize, usize)>, n: usize) -> PyResult<Self> {
        Ok(PyGraph {
            inner: graph::build_graph(&edges, n).map_err(to_py_err)?,
        })
    }

    /// kNN graph over a point cloud (union-symmetrized).
    #[staticmethod]
    fn knn(points: Vec<Vec<f64>>, k: usize) -> PyResult<Self> {
        let pts = mat_from_rows(points)?;
        Ok(PyGraph {
            inner: graph::knn_graph(&pts, k).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.edge_count()
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees().0
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges()
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        if i >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {i} out of range")));
        }
        Ok(self.inner.neighbors(i).to_vec())
    }

    fn connected_components(&self) -> usize {
        self.inner.connected_components()
    }

    /// Dense 0/1 adjacency matrix.
    fn adjacency(&self) -> Vec<Vec<f64>> {
        mat_to_rows(&self.inner.adjacency_dense())
    }

    /// Build a representing matrix: "adj" | "rw" | "sym" | "ppr".
    fn representation(&self, kind: &str) -> PyResult<PyPropagation> {
        let kind = prop::ReprKind::parse(kind).map_err(to_py_err)?;
        Ok(PyPropagation {
            inner: prop::build_representation(&self.inner, kind).map_err(to_py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

/// A representing matrix P (sparse or dense).
#[pyclass(name = "PropagationMatrix")]
#[derive(Clone)]
struct PyPropagation {
    inner: prop::PropagationMatrix,
}

#[pymethods]
impl PyPropagation {
    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().flag_name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn isolated_nodes(&self) -> usize {
        self.inner.isolated_nodes()
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        mat_to_rows(&self.inner.to_dense())
    }

    /// P @ X for an n x c feature matrix.
    fn spmm(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let xm = mat_from_rows(x)?;
        Ok(mat_to_rows(&prop::spmm(&self.inner, &xm).map_err(to_py_err)?))
    }

    fn __repr__(&self) -> String {
        format!("PropagationMatrix(kind={}, n={})", self.kind(), self.inner.n())
    }
}

/// Orthonormal eigenbasis of a symmetric matrix.
#[pyclass(name = "SpectralBasis")]
struct PySpectralBasis {
    inner: spectral::SpectralBasis,
}

#[pymethods]
impl PySpectralBasis {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn vectors(&self) -> Vec<Vec<f64>> {
        mat_to_rows(self.inner.vectors())
    }

    #[getter]
    fn lambda_max(&self) -> f64 {
        self.inner.lambda_max()
    }

    fn gft(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.gft(&x).map_err(to_py_err)
    }

    fn igft(&self, x_hat: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.igft(&x_hat).map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!("SpectralBasis(n={})", self.inner.n())
    }
}

/// Taylor or Chebyshev expansion coefficients.
#[pyclass(name = "PolynomialCoeffs")]
#[derive(Clone)]
struct PyCoeffs {
    inner: spectral::PolynomialCoeffs,
}

#[pymethods]
impl PyCoeffs {
    /// theta_k = g^(k)(center) / k! for a registry kernel spec like
    /// "heat:1.0", "monomial:2" or "poly:1,0,2".
    #[staticmethod]
    fn taylor(kernel: &str, center: f64, order: usize) -> PyResult<Self> {
        let k = spectral::Kernel::parse(kernel).map_err(to_py_err)?;
        Ok(PyCoeffs {
            inner: spectral::taylor_coeffs(&k, center, order),
        })
    }

    /// Gauss-Chebyshev quadrature coefficients on 2x/lambda_max - 1.
    #[staticmethod]
    fn chebyshev(kernel: &str, order: usize, lambda_max: f64) -> PyResult<Self> {
        let k = spectral::Kernel::parse(kernel).map_err(to_py_err)?;
        Ok(PyCoeffs {
            inner: spectral::chebyshev_coeffs(&k, order, lambda_max).map_err(to_py_err)?,
        })
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta.clone()
    }

    /// Scalar evaluation of the approximant.
    fn eval(&self, lam: f64) -> f64 {
        self.inner.eval(lam)
    }

    fn __repr__(&self) -> String {
        format!("PolynomialCoeffs(order={})", self.inner.order())
    }
}

/// Dense symmetric eigendecomposition (Jacobi; oracle-scale only).
#[pyfunction]
fn eigendecompose(matrix: Vec<Vec<f64>>) -> PyResult<PySpectralBasis> {
    let m = mat_from_rows(matrix)?;
    Ok(PySpectralBasis {
        inner: spectral::eigendecompose(&m).map_err(to_py_err)?,
    })
}

/// Graph convolution of two signals through the spectrum.
#[pyfunction]
fn spectral_convolve(basis: &PySpectralBasis, x: Vec<f64>, y: Vec<f64>) -> PyResult<Vec<f64>> {
    spectral::spectral_convolve(&basis.inner, &x, &y).map_err(to_py_err)
}

/// Apply V diag(g(lambda)) V^T to a signal; `kernel` is a registry spec.
#[pyfunction]
fn wavelet_apply(basis: &PySpectralBasis, kernel: &str, x: Vec<f64>) -> PyResult<Vec<f64>> {
    let k = spectral::Kernel::parse(kernel).map_err(to_py_err)?;
    spectral::wavelet_apply(&basis.inner, &spectral::WaveletKernel::Closed(k), &x)
        .map_err(to_py_err)
}

/// Vertex-domain taps sigma with V^T sigma = g_hat.
#[pyfunction]
fn kernel_taps(basis: &PySpectralBasis, kernel: &str) -> PyResult<Vec<f64>> {
    let k = spectral::Kernel::parse(kernel).map_err(to_py_err)?;
    spectral::kernel_taps(&basis.inner, &spectral::WaveletKernel::Closed(k)).map_err(to_py_err)
}

/// Polynomial filter evaluated by repeated multiplies in the vertex domain.
#[pyfunction]
fn filter_vertex(p: &PyPropagation, coeffs: &PyCoeffs, x: Vec<f64>) -> PyResult<Vec<f64>> {
    spectral::polynomial_filter_vertex(&p.inner, &coeffs.inner, &x).map_err(to_py_err)
}

/// The same filter evaluated exactly through the eigenbasis.
#[pyfunction]
fn filter_spectral(basis: &PySpectralBasis, coeffs: &PyCoeffs, x: Vec<f64>) -> PyResult<Vec<f64>> {
    spectral::polynomial_filter_spectral(&basis.inner, &coeffs.inner, &x).map_err(to_py_err)
}

/// Generate a stochastic block model: (graph, labels, one-hot seed features).
#[pyfunction]
#[pyo3(signature = (n, blocks, p_in, p_out, seeds_per_block, seed=0))]
fn sbm_generate(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    seeds_per_block: usize,
    seed: u64,
) -> PyResult<(PyGraph, Vec<usize>, Vec<Vec<f64>>)> {
    let params = graph::SbmParams {
        n,
        blocks,
        p_in,
        p_out,
        seeds_per_block,
    };
    let (g, labels, features) = graph::sbm_generate(&params, seed).map_err(to_py_err)?;
    Ok((PyGraph { inner: g }, labels, mat_to_rows(&features)))
}

/// Seeded train/val/test split: ratio is "10/30/60" or "60/20/20".
#[pyfunction]
#[pyo3(signature = (n, ratio="10/30/60", seed=0))]
fn make_splits(n: usize, ratio: &str, seed: u64) -> PyResult<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let r = SplitRatio::parse(ratio).map_err(to_py_err)?;
    let s = core_make_splits(n, r, seed).map_err(to_py_err)?;
    Ok((s.train, s.val, s.test))
}

fn metrics_to_dict(py: Python<'_>, metrics: &train::Metrics) -> PyResult<Py<PyDict>> {
    let out = PyDict::new(py);
    let epochs = PyList::empty(py);
    for e in &metrics.epochs {
        let d = PyDict::new(py);
        d.set_item("loss", e.loss)?;
        d.set_item("train_acc", e.train_acc)?;
        d.set_item("val_acc", e.val_acc)?;
        d.set_item("ms", e.ms)?;
        epochs.append(d)?;
    }
    out.set_item("epochs", epochs)?;
    out.set_item("test_acc", metrics.test_acc)?;
    Ok(out.into())
}

/// Train a node classifier on in-memory data and return its metrics.
#[pyfunction]
#[pyo3(signature = (
    graph, features, labels, num_classes, *,
    model="gcn", layers=2, order=1, prop="sym", alpha=None, auto_alpha=false,
    hidden=40, epochs=200, lr=0.01, dropout=0.5, weight_decay=5e-4,
    seed=0, split="10/30/60", split_seed=0
))]
#[allow(clippy::too_many_arguments)]
fn train_node_classifier(
    py: Python<'_>,
    graph: &PyGraph,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
    model: &str,
    layers: usize,
    order: usize,
    prop: &str,
    alpha: Option<f64>,
    auto_alpha: bool,
    hidden: usize,
    epochs: usize,
    lr: f64,
    dropout: f64,
    weight_decay: f64,
    seed: u64,
    split: &str,
    split_seed: u64,
) -> PyResult<Py<PyDict>> {
    let kind = prop::ReprKind::parse(prop).map_err(to_py_err)?;
    let model_kind = ModelKind::parse(model).map_err(to_py_err)?;
    let features = mat_from_rows(features)?;
    let dataset = Dataset {
        graph: graph.inner.clone(),
        features,
        labels,
        num_classes,
        name: "python".into(),
        class_names: None,
    };
    dataset.validate().map_err(to_py_err)?;
    let ratio = SplitRatio::parse(split).map_err(to_py_err)?;
    let split_spec: SplitSpec =
        core_make_splits(dataset.n(), ratio, split_seed).map_err(to_py_err)?;

    let mut config = train::ModelConfig::node_classifier(
        model_kind,
        layers,
        order,
        dataset.num_features(),
        hidden,
        num_classes,
        auto_alpha,
    )
    .map_err(to_py_err)?;
    config.dropout = dropout;
    config.lr = lr;
    config.weight_decay = weight_decay;
    config.epochs = epochs;
    config.seed = seed;
    if let Some(a) = alpha {
        config.alpha_init = a;
    }
    config.validate().map_err(to_py_err)?;

    let (_, metrics) = train::train(&config, &dataset, &split_spec, kind).map_err(to_py_err)?;
    metrics_to_dict(py, &metrics)
}

#[pymodule]
fn tgcn(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPropagation>()?;
    m.add_class::<PySpectralBasis>()?;
    m.add_class::<PyCoeffs>()?;
    m.add_function(wrap_pyfunction!(eigendecompose, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_convolve, m)?)?;
    m.add_function(wrap_pyfunction!(wavelet_apply, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_taps, m)?)?;
    m.add_function(wrap_pyfunction!(filter_vertex, m)?)?;
    m.add_function(wrap_pyfunction!(filter_spectral, m)?)?;
    m.add_function(wrap_pyfunction!(sbm_generate, m)?)?;
    m.add_function(wrap_pyfunction!(make_splits, m)?)?;
    m.add_function(wrap_pyfunction!(train_node_classifier, m)?)?;
    Ok(())
}
