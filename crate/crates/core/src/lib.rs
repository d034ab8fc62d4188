//! Graph spectral filtering and Taylor-expansion GCN (TGCN) layers.
//!
//! The crate has two halves that check each other:
//!
//! * an exact, dense spectral toolbox ([`spectral`]) — Jacobi eigendecomposition,
//!   graph Fourier transform, wavelet operators and polynomial kernel
//!   approximation — small enough to serve as a ground-truth oracle;
//! * a sparse vertex-domain side ([`graph`], [`prop`], [`layers`], [`train`]) —
//!   CSR graphs, propagation matrices, the four TGCN layer types plus the GCN
//!   baseline, hand-derived gradients and an Adam training loop for
//!   semi-supervised node classification.
//!
//! [`data`] defines a plain-text dataset directory format, and [`cli`] wires
//! everything into the `tgcn` binary.

pub mod cli;
pub mod data;
pub mod graph;
pub mod layers;
pub mod mat;
pub mod prop;
pub mod rng;
pub mod spectral;
pub mod train;

use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// `Config` → 2, `Data`/`Io` → 3, `Numerical` → 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameters, shapes or flag combinations.
    #[error("config error: {0}")]
    Config(String),
    /// Unreadable or inconsistent dataset content.
    #[error("data error: {0}")]
    Data(String),
    /// Non-finite values or failed numerical procedures.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub use graph::{Graph, SbmParams};
pub use mat::Mat;
pub use prop::{PropagationMatrix, ReprKind};
pub use spectral::{Kernel, PolynomialCoeffs, SpectralBasis, WaveletKernel};
pub use train::{ModelConfig, ParamStore};
