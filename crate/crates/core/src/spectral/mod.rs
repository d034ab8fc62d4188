//! Exact dense spectral machinery — the ground-truth oracle the sparse
//! vertex-domain layers are verified against.
//!
//! Everything here is O(n^2)..O(n^3) and capped at [`EIGEN_CAP`] nodes by
//! default: it exists for correctness checks and diagnostics, not scale.

mod eigen;
mod filter;
mod kernel;

pub use filter::{
    chebyshev_coeffs, polynomial_filter_spectral, polynomial_filter_vertex, taylor_coeffs,
    taylor_coeffs_fd, LinearOp, PolynomialCoeffs, Scheme,
};
pub use kernel::{Kernel, WaveletKernel};

use crate::mat::Mat;
use crate::{Error, Result};

/// Default node-count cap for eigendecomposition.
pub const EIGEN_CAP: usize = 2000;

/// Orthonormal eigenbasis of a symmetric representing matrix.
///
/// Columns of `vectors` are the eigenvectors (the graph Fourier basis),
/// `values` holds the matching eigenvalues in ascending order.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis {
    vectors: Mat,
    values: Vec<f64>,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &Mat {
        &self.vectors
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.last().expect("non-empty basis")
    }

    /// Column `r` of V (the r-th eigenvector).
    pub fn eigenvector(&self, r: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.vectors.get(i, r)).collect()
    }

    /// Graph Fourier transform: x_hat = V^T x.
    pub fn gft(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::Config(format!(
                "gft length mismatch: basis {n}, signal {}",
                x.len()
            )));
        }
        Ok((0..n)
            .map(|r| (0..n).map(|i| self.vectors.get(i, r) * x[i]).sum())
            .collect())
    }

    /// Inverse transform: x = V x_hat.
    pub fn igft(&self, x_hat: &[f64]) -> Result<Vec<f64>> {
        let n = self.n();
        if x_hat.len() != n {
            return Err(Error::Config(format!(
                "igft length mismatch: basis {n}, spectrum {}",
                x_hat.len()
            )));
        }
        Ok((0..n)
            .map(|i| (0..n).map(|r| self.vectors.get(i, r) * x_hat[r]).sum())
            .collect())
    }

    /// Reconstruct V diag(values) V^T.
    pub fn reconstruct(&self) -> Mat {
        let n = self.n();
        Mat::from_fn(n, n, |i, j| {
            (0..n)
                .map(|r| self.vectors.get(i, r) * self.values[r] * self.vectors.get(j, r))
                .sum()
        })
    }
}

/// Dense symmetric eigendecomposition with the default size cap.
pub fn eigendecompose(m: &Mat) -> Result<SpectralBasis> {
    eigendecompose_capped(m, EIGEN_CAP)
}

pub fn eigendecompose_capped(m: &Mat, cap: usize) -> Result<SpectralBasis> {
    if m.rows() != m.cols() || m.rows() == 0 {
        return Err(Error::Config(format!(
            "eigendecomposition needs a non-empty square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.rows() > cap {
        return Err(Error::Config(format!(
            "matrix size {} exceeds the dense-oracle cap {cap}",
            m.rows()
        )));
    }
    if !m.is_symmetric(1e-10) {
        return Err(Error::Config("eigendecomposition input is not symmetric".into()));
    }
    let (values, vectors) = eigen::jacobi_eigen(m)?;
    Ok(SpectralBasis { vectors, values })
}

/// Graph convolution through the spectrum: V ((V^T x) o (V^T y)).
pub fn spectral_convolve(basis: &SpectralBasis, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let x_hat = basis.gft(x)?;
    let y_hat = basis.gft(y)?;
    let prod: Vec<f64> = x_hat.iter().zip(&y_hat).map(|(a, b)| a * b).collect();
    basis.igft(&prod)
}

/// Wavelet operator: V diag(g(lambda_1)..g(lambda_N)) V^T x.
pub fn wavelet_apply(basis: &SpectralBasis, kernel: &WaveletKernel, x: &[f64]) -> Result<Vec<f64>> {
    let g = kernel.sample(basis.values())?;
    let mut x_hat = basis.gft(x)?;
    for (c, gv) in x_hat.iter_mut().zip(&g) {
        *c *= gv;
    }
    basis.igft(&x_hat)
}

/// Vertex-domain taps sigma = V g_hat, so that convolving with sigma equals
/// applying the wavelet operator.
pub fn kernel_taps(basis: &SpectralBasis, kernel: &WaveletKernel) -> Result<Vec<f64>> {
    let g = kernel.sample(basis.values())?;
    basis.igft(&g)
}
