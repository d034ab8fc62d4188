//! Polynomial kernel approximation: Taylor and Chebyshev coefficient
//! construction, plus the two independent evaluation routes (spectral and
//! vertex domain) whose agreement is the module's central equivalence.

use crate::mat::Mat;
use crate::prop::{CsrMatrix, PropagationMatrix};
use crate::spectral::kernel::Kernel;
use crate::spectral::SpectralBasis;
use crate::{Error, Result};

/// Anything that can act as the representing matrix in a vertex-domain
/// filter: dense, CSR, or a built propagation matrix.
pub trait LinearOp {
    fn dim(&self) -> usize;
    /// y = P x; `x.len() == dim()` is the caller's responsibility.
    fn apply(&self, x: &[f64]) -> Vec<f64>;
}

impl LinearOp for Mat {
    fn dim(&self) -> usize {
        self.rows()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x).expect("LinearOp dimension contract")
    }
}

impl LinearOp for CsrMatrix {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matvec(x)
    }
}

impl LinearOp for PropagationMatrix {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.apply_vec(x).expect("LinearOp dimension contract")
    }
}

/// Which polynomial family the coefficients belong to.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    /// theta_k (x - center)^k
    Taylor { center: f64 },
    /// theta_k T_k(2x / lambda_max - 1), k = 0 term already halved
    Chebyshev { lambda_max: f64 },
}

/// Expansion coefficients theta_0..theta_K with their evaluation scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialCoeffs {
    pub theta: Vec<f64>,
    pub scheme: Scheme,
}

impl PolynomialCoeffs {
    pub fn order(&self) -> usize {
        self.theta.len() - 1
    }

    /// Scalar evaluation of the approximant at `lambda`.
    pub fn eval(&self, lambda: f64) -> f64 {
        match &self.scheme {
            Scheme::Taylor { center } => {
                let x = lambda - center;
                self.theta.iter().rev().fold(0.0, |acc, &t| acc * x + t)
            }
            Scheme::Chebyshev { lambda_max } => {
                let y = 2.0 * lambda / lambda_max - 1.0;
                let mut acc = self.theta[0];
                let mut t_prev = 1.0;
                let mut t_cur = y;
                for &c in &self.theta[1..] {
                    acc += c * t_cur;
                    let t_next = 2.0 * y * t_cur - t_prev;
                    t_prev = t_cur;
                    t_cur = t_next;
                }
                acc
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta.is_empty() {
            return Err(Error::Config("polynomial needs at least theta_0".into()));
        }
        if self.theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Numerical("non-finite polynomial coefficient".into()));
        }
        Ok(())
    }
}

/// Taylor coefficients theta_k = g^(k)(a) / k! for a registry kernel.
pub fn taylor_coeffs(kernel: &Kernel, center: f64, order: usize) -> PolynomialCoeffs {
    let mut factorial = 1.0;
    let theta = (0..=order)
        .map(|k| {
            if k > 0 {
                factorial *= k as f64;
            }
            kernel.derivative(k, center) / factorial
        })
        .collect();
    PolynomialCoeffs {
        theta,
        scheme: Scheme::Taylor { center },
    }
}

/// Taylor coefficients for an arbitrary function via central finite
/// differences (fallback when no closed-form derivatives exist).
pub fn taylor_coeffs_fd(g: impl Fn(f64) -> f64, center: f64, order: usize) -> PolynomialCoeffs {
    let h = 1e-2;
    let mut factorial = 1.0;
    let theta = (0..=order)
        .map(|k| {
            if k > 0 {
                factorial *= k as f64;
            }
            central_difference(&g, center, k, h) / factorial
        })
        .collect();
    PolynomialCoeffs {
        theta,
        scheme: Scheme::Taylor { center },
    }
}

/// k-th central difference: h^-k sum_i (-1)^i C(k,i) g(a + (k/2 - i) h).
fn central_difference(g: &impl Fn(f64) -> f64, a: f64, k: usize, h: f64) -> f64 {
    if k == 0 {
        return g(a);
    }
    let mut acc = 0.0;
    let mut binom = 1.0;
    for i in 0..=k {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let x = a + (k as f64 / 2.0 - i as f64) * h;
        acc += sign * binom * g(x);
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    acc / h.powi(k as i32)
}

/// Chebyshev coefficients via Gauss-Chebyshev quadrature on the rescaled
/// variable y = 2 lambda / lambda_max - 1, with the k = 0 term halved.
pub fn chebyshev_coeffs(kernel: &Kernel, order: usize, lambda_max: f64) -> Result<PolynomialCoeffs> {
    if lambda_max <= 0.0 {
        return Err(Error::Config(format!(
            "chebyshev rescaling requires lambda_max > 0, got {lambda_max}"
        )));
    }
    let nodes = 128.max(8 * (order + 1));
    let mut theta = vec![0.0; order + 1];
    for j in 0..nodes {
        let angle = std::f64::consts::PI * (j as f64 + 0.5) / nodes as f64;
        let y = angle.cos();
        let g = kernel.eval(lambda_max * (y + 1.0) / 2.0);
        for (k, t) in theta.iter_mut().enumerate() {
            *t += (k as f64 * angle).cos() * g;
        }
    }
    for t in theta.iter_mut() {
        *t *= 2.0 / nodes as f64;
    }
    theta[0] /= 2.0;
    Ok(PolynomialCoeffs {
        theta,
        scheme: Scheme::Chebyshev { lambda_max },
    })
}

/// Spectral route: sum_r h(lambda_r) f_r (f_r^T x).
pub fn polynomial_filter_spectral(
    basis: &SpectralBasis,
    coeffs: &PolynomialCoeffs,
    x: &[f64],
) -> Result<Vec<f64>> {
    coeffs.validate()?;
    let response: Vec<f64> = basis.values().iter().map(|&l| coeffs.eval(l)).collect();
    let mut x_hat = basis.gft(x)?;
    for (c, h) in x_hat.iter_mut().zip(&response) {
        *c *= h;
    }
    basis.igft(&x_hat)
}

/// Vertex route: repeated multiplies only, never a dense power of P.
///
/// Taylor coefficients run through Horner accumulation on (P - a I);
/// Chebyshev coefficients use the T recursion on 2 P / lambda_max - I.
pub fn polynomial_filter_vertex(
    op: &impl LinearOp,
    coeffs: &PolynomialCoeffs,
    x: &[f64],
) -> Result<Vec<f64>> {
    coeffs.validate()?;
    if op.dim() != x.len() {
        return Err(Error::Config(format!(
            "filter dimension mismatch: operator {} vs signal {}",
            op.dim(),
            x.len()
        )));
    }
    match &coeffs.scheme {
        Scheme::Taylor { center } => {
            let order = coeffs.order();
            let mut y: Vec<f64> = x.iter().map(|&v| v * coeffs.theta[order]).collect();
            for k in (0..order).rev() {
                let py = op.apply(&y);
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = py[i] - center * *yi + coeffs.theta[k] * x[i];
                }
            }
            Ok(y)
        }
        Scheme::Chebyshev { lambda_max } => {
            // t_k on the rescaled operator: apply(v) = 2/lambda_max P v - v
            let rescaled = |v: &[f64]| -> Vec<f64> {
                let pv = op.apply(v);
                pv.iter()
                    .zip(v)
                    .map(|(&p, &o)| 2.0 / lambda_max * p - o)
                    .collect()
            };
            let mut acc: Vec<f64> = x.iter().map(|&v| coeffs.theta[0] * v).collect();
            if coeffs.order() == 0 {
                return Ok(acc);
            }
            let mut t_prev = x.to_vec();
            let mut t_cur = rescaled(x);
            for (a, &t) in acc.iter_mut().zip(&t_cur) {
                *a += coeffs.theta[1] * t;
            }
            for k in 2..=coeffs.order() {
                let mut t_next = rescaled(&t_cur);
                for (tn, &tp) in t_next.iter_mut().zip(&t_prev) {
                    *tn = 2.0 * *tn - tp;
                }
                for (a, &t) in acc.iter_mut().zip(&t_next) {
                    *a += coeffs.theta[k] * t;
                }
                t_prev = t_cur;
                t_cur = t_next;
            }
            Ok(acc)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::eigendecompose;

    #[test]
    fn taylor_exponential_series() {
        // e^lambda = heat kernel with t = -1
        let c = taylor_coeffs(&Kernel::Heat { t: -1.0 }, 0.0, 3);
        let want = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (got, want) in c.theta.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn taylor_exact_quadratic() {
        let c = taylor_coeffs(&Kernel::Monomial { power: 2 }, 1.0, 2);
        assert!((c.theta[0] - 1.0).abs() < 1e-15);
        assert!((c.theta[1] - 2.0).abs() < 1e-15);
        assert!((c.theta[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn taylor_remainder_tracks_series_oracle() {
        // reconstructed K=4 expansion of exp(-lambda) about 0.5 should differ
        // from the kernel by exactly the dropped tail, evaluated independently
        let kernel = Kernel::Heat { t: 1.0 };
        let a = 0.5;
        let c4 = taylor_coeffs(&kernel, a, 4);
        for step in 0..=20 {
            let lambda = step as f64 / 20.0;
            let approx = c4.eval(lambda);
            // tail sum_{k=5..40} g^(k)(a)/k! (lambda-a)^k from the series oracle
            let mut tail = 0.0;
            let mut factorial = 1.0;
            for k in 1..=40usize {
                factorial *= k as f64;
                if k >= 5 {
                    let deriv = if k % 2 == 0 { 1.0 } else { -1.0 } * (-a).exp();
                    tail += deriv / factorial * (lambda - a).powi(k as i32);
                }
            }
            let err = (approx - kernel.eval(lambda)).abs();
            assert!(
                (err - tail.abs()).abs() < 1e-12,
                "lambda {lambda}: err {err} vs tail {tail}"
            );
        }
    }

    #[test]
    fn fd_coefficients_match_closed_form() {
        let kernel = Kernel::Heat { t: 1.0 };
        let closed = taylor_coeffs(&kernel, 0.3, 3);
        let fd = taylor_coeffs_fd(|x| kernel.eval(x), 0.3, 3);
        for (a, b) in closed.theta.iter().zip(&fd.theta) {
            assert!((a - b).abs() < 1e-4, "closed {a} vs fd {b}");
        }
    }

    #[test]
    fn chebyshev_constant_kernel() {
        let c = chebyshev_coeffs(&Kernel::Polynomial { coeffs: vec![3.5] }, 4, 2.0).unwrap();
        assert!((c.theta[0] - 3.5).abs() < 1e-10);
        for &t in &c.theta[1..] {
            assert!(t.abs() < 1e-10);
        }
    }

    #[test]
    fn chebyshev_linear_kernel_identity_rescale() {
        // lambda_max = 2 maps lambda in [0,2] to y in [-1,1]; g(lambda) =
        // lambda - 1 = y, so theta_1 = 1 and everything else vanishes
        let c = chebyshev_coeffs(&Kernel::ShiftedLinear { shift: -1.0 }, 4, 2.0).unwrap();
        assert!(c.theta[0].abs() < 1e-10);
        assert!((c.theta[1] - 1.0).abs() < 1e-10);
        for &t in &c.theta[2..] {
            assert!(t.abs() < 1e-10);
        }
    }

    #[test]
    fn chebyshev_rejects_bad_lambda_max() {
        assert!(chebyshev_coeffs(&Kernel::Identity, 2, 0.0).is_err());
        assert!(chebyshev_coeffs(&Kernel::Identity, 2, -1.0).is_err());
    }

    #[test]
    fn vertex_square_on_single_edge_is_identity() {
        // A^2 = I for the single-edge adjacency
        let a = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let coeffs = PolynomialCoeffs {
            theta: vec![0.0, 0.0, 1.0],
            scheme: Scheme::Taylor { center: 0.0 },
        };
        let x = vec![0.3, -1.7];
        let y = polynomial_filter_vertex(&a, &coeffs, &x).unwrap();
        for (got, want) in y.iter().zip(&x) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn vertex_linear_kernel_is_px_plus_2x() {
        let p = Mat::from_rows(&[
            vec![0.1, 0.4, 0.0],
            vec![0.4, -0.2, 0.3],
            vec![0.0, 0.3, 0.5],
        ])
        .unwrap();
        let coeffs = PolynomialCoeffs {
            theta: vec![2.0, 1.0],
            scheme: Scheme::Taylor { center: 0.0 },
        };
        let x = vec![1.0, -1.0, 2.0];
        let y = polynomial_filter_vertex(&p, &coeffs, &x).unwrap();
        let px = p.matvec(&x).unwrap();
        for i in 0..3 {
            assert!((y[i] - (px[i] + 2.0 * x[i])).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_and_vertex_routes_agree() {
        // the two computations are each other's oracle
        let p = Mat::from_rows(&[
            vec![0.0, 1.0, 0.0, 0.2],
            vec![1.0, 0.5, 0.3, 0.0],
            vec![0.0, 0.3, -0.4, 1.0],
            vec![0.2, 0.0, 1.0, 0.1],
        ])
        .unwrap();
        let basis = eigendecompose(&p).unwrap();
        let coeffs = PolynomialCoeffs {
            theta: vec![0.3, -1.0, 0.25, 0.05, -0.4, 0.12],
            scheme: Scheme::Taylor { center: 0.2 },
        };
        let x = vec![1.0, 2.0, -0.5, 0.7];
        let s = polynomial_filter_spectral(&basis, &coeffs, &x).unwrap();
        let v = polynomial_filter_vertex(&p, &coeffs, &x).unwrap();
        for (a, b) in s.iter().zip(&v) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}
