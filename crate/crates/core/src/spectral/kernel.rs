//! Wavelet-kernel registry. Each closed-form kernel knows its own
//! derivatives, which is what the Taylor expansion needs.

use crate::{Error, Result};

/// Closed-form spectral kernels g(lambda).
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// g(lambda) = exp(-t * lambda)
    Heat { t: f64 },
    /// g(lambda) = 1
    Identity,
    /// g(lambda) = lambda + shift
    ShiftedLinear { shift: f64 },
    /// g(lambda) = lambda^power
    Monomial { power: u32 },
    /// g(lambda) = sum_j coeffs[j] * lambda^j
    Polynomial { coeffs: Vec<f64> },
}

impl Kernel {
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            Kernel::Heat { t } => (-t * lambda).exp(),
            Kernel::Identity => 1.0,
            Kernel::ShiftedLinear { shift } => lambda + shift,
            Kernel::Monomial { power } => lambda.powi(*power as i32),
            Kernel::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * lambda + c)
            }
        }
    }

    /// k-th derivative evaluated at `a`, in closed form.
    pub fn derivative(&self, k: usize, a: f64) -> f64 {
        match self {
            Kernel::Heat { t } => (-t).powi(k as i32) * (-t * a).exp(),
            Kernel::Identity => {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::ShiftedLinear { shift } => match k {
                0 => a + shift,
                1 => 1.0,
                _ => 0.0,
            },
            Kernel::Monomial { power } => monomial_derivative(*power as usize, k, a),
            Kernel::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(j, &c)| c * monomial_derivative(j, k, a))
                .sum(),
        }
    }

    /// Parse a CLI kernel spec: `heat[:t]`, `identity`, `linear[:shift]`,
    /// `monomial:p`, `poly:c0,c1,...`.
    pub fn parse(s: &str) -> Result<Kernel> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let bad = |msg: String| Error::Config(msg);
        match name {
            "heat" => {
                let t = match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| bad(format!("invalid heat scale '{a}'")))?,
                    None => 1.0,
                };
                Ok(Kernel::Heat { t })
            }
            "identity" => Ok(Kernel::Identity),
            "linear" => {
                let shift = match arg {
                    Some(a) => a
                        .parse()
                        .map_err(|_| bad(format!("invalid linear shift '{a}'")))?,
                    None => 0.0,
                };
                Ok(Kernel::ShiftedLinear { shift })
            }
            "monomial" => {
                let p = arg
                    .ok_or_else(|| bad("monomial kernel needs a power, e.g. monomial:2".into()))?
                    .parse()
                    .map_err(|_| bad("invalid monomial power".into()))?;
                Ok(Kernel::Monomial { power: p })
            }
            "poly" => {
                let coeffs = arg
                    .ok_or_else(|| bad("poly kernel needs coefficients, e.g. poly:1,0,2".into()))?
                    .split(',')
                    .map(|c| {
                        c.trim()
                            .parse()
                            .map_err(|_| bad(format!("invalid poly coefficient '{c}'")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                if coeffs.is_empty() {
                    return Err(bad("poly kernel needs at least one coefficient".into()));
                }
                Ok(Kernel::Polynomial { coeffs })
            }
            other => Err(bad(format!("unknown kernel '{other}'"))),
        }
    }
}

/// d^k/dx^k [x^p] at `a`: p!/(p-k)! * a^(p-k), zero for k > p.
fn monomial_derivative(p: usize, k: usize, a: f64) -> f64 {
    if k > p {
        return 0.0;
    }
    let mut falling = 1.0;
    for i in 0..k {
        falling *= (p - i) as f64;
    }
    falling * a.powi((p - k) as i32)
}

/// A kernel for the wavelet operator: either a registry function or raw
/// sampled values aligned with a basis.
#[derive(Clone, Debug, PartialEq)]
pub enum WaveletKernel {
    Closed(Kernel),
    Sampled(Vec<f64>),
}

impl WaveletKernel {
    /// g(lambda_i) for every eigenvalue, rejecting non-finite values.
    pub fn sample(&self, eigenvalues: &[f64]) -> Result<Vec<f64>> {
        match self {
            WaveletKernel::Closed(k) => eigenvalues
                .iter()
                .map(|&l| {
                    let g = k.eval(l);
                    if g.is_finite() {
                        Ok(g)
                    } else {
                        Err(Error::Numerical(format!(
                            "kernel is non-finite at eigenvalue {l}"
                        )))
                    }
                })
                .collect(),
            WaveletKernel::Sampled(values) => {
                if values.len() != eigenvalues.len() {
                    return Err(Error::Config(format!(
                        "sampled kernel length {} does not match basis size {}",
                        values.len(),
                        eigenvalues.len()
                    )));
                }
                for (i, v) in values.iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Numerical(format!(
                            "sampled kernel non-finite at eigenvalue {}",
                            eigenvalues[i]
                        )));
                    }
                }
                Ok(values.clone())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_derivatives() {
        let k = Kernel::Heat { t: 2.0 };
        assert!((k.derivative(0, 0.0) - 1.0).abs() < 1e-15);
        assert!((k.derivative(1, 0.0) + 2.0).abs() < 1e-15);
        assert!((k.derivative(2, 0.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_matches_monomials() {
        // g = 3 + 2x + x^3
        let k = Kernel::Polynomial {
            coeffs: vec![3.0, 2.0, 0.0, 1.0],
        };
        assert!((k.eval(2.0) - 15.0).abs() < 1e-15);
        assert!((k.derivative(1, 2.0) - 14.0).abs() < 1e-15); // 2 + 3x^2
        assert!((k.derivative(3, 5.0) - 6.0).abs() < 1e-15);
        assert_eq!(k.derivative(4, 1.0), 0.0);
    }

    #[test]
    fn parse_round_trips() {
        assert_eq!(Kernel::parse("heat:0.5").unwrap(), Kernel::Heat { t: 0.5 });
        assert_eq!(Kernel::parse("identity").unwrap(), Kernel::Identity);
        assert_eq!(
            Kernel::parse("poly:1,0,2").unwrap(),
            Kernel::Polynomial {
                coeffs: vec![1.0, 0.0, 2.0]
            }
        );
        assert!(Kernel::parse("banana").is_err());
        assert!(Kernel::parse("monomial").is_err());
    }

    #[test]
    fn sampled_kernel_checks_length() {
        let wk = WaveletKernel::Sampled(vec![1.0, 2.0]);
        assert!(wk.sample(&[0.0, 1.0, 2.0]).is_err());
        assert_eq!(wk.sample(&[0.0, 1.0]).unwrap(), vec![1.0, 2.0]);
    }
}
