//! Cyclic Jacobi eigendecomposition for real symmetric matrices.

use crate::mat::Mat;
use crate::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_NORM_TOL: f64 = 1e-12;

/// Diagonalize a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` with eigenvalues ascending and eigenvector
/// columns sign-fixed so the largest-magnitude entry (first on ties) is
/// positive. The sweep loop stops once the off-diagonal Frobenius norm drops
/// below `1e-12` (relative to the input scale) and errors out if 100 sweeps
/// are not enough.
pub fn jacobi_eigen(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    let n = m.rows();
    let mut a = m.clone();
    let mut v = Mat::identity(n);
    let scale = m.frob_norm_sq().sqrt().max(1.0);
    let tol = OFF_NORM_TOL * scale;

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_norm(&a) > tol {
        return Err(Error::Numerical(format!(
            "jacobi eigensolver did not converge after {MAX_SWEEPS} sweeps (off-norm {:.3e})",
            off_norm(&a)
        )));
    }

    let mut values: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
    values = order.iter().map(|&i| a.get(i, i)).collect();

    let mut vectors = Mat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        // fix sign: make the largest-magnitude entry positive
        let mut best = 0usize;
        let mut best_mag = -1.0;
        for r in 0..n {
            let mag = v.get(r, old_col).abs();
            if mag > best_mag {
                best_mag = mag;
                best = r;
            }
        }
        let flip = if v.get(best, old_col) < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors.set(r, new_col, flip * v.get(r, old_col));
        }
    }
    Ok((values, vectors))
}

fn off_norm(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a.get(p, q) * a.get(p, q);
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `a[p][q]`, accumulated into `v`.
fn rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let n = a.rows();
    let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // A <- J^T A J applied as column then row updates
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}
