//! Forward and backward computation of the GCN baseline layer and the four
//! Taylor-expansion propagation layer types, plus the activations they
//! compose with.
//!
//! Layer equations, with Q = P + alpha I (or P + diag(beta)):
//!
//! * gcn:    O = P X Theta
//! * tgcn1:  O = (P + alpha I) X Theta
//! * tgcn2:  O = (P + diag(beta)) X Theta
//! * tgcn3:  O = [sum_{k=0}^K Q^k] X Theta
//! * tgcn4:  O = sum_{k=0}^K Q^k X Theta_k
//!
//! Powers are applied right-to-left on the feature matrix by repeated sparse
//! multiplies; a dense Q^k is never formed. The projection X Theta happens
//! first for the shared-Theta kinds, so the propagated width is `out_dim`.

use rand::Rng;

use crate::mat::Mat;
use crate::prop::{spmm, spmm_transpose, PropagationMatrix};
use crate::{Error, Result};

/// Which propagation model a layer uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModelKind {
    Gcn,
    Tgcn1,
    Tgcn2,
    Tgcn3,
    Tgcn4,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<ModelKind> {
        match s {
            "gcn" => Ok(ModelKind::Gcn),
            "tgcn1" => Ok(ModelKind::Tgcn1),
            "tgcn2" => Ok(ModelKind::Tgcn2),
            "tgcn3" => Ok(ModelKind::Tgcn3),
            "tgcn4" => Ok(ModelKind::Tgcn4),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected gcn|tgcn1|tgcn2|tgcn3|tgcn4)"
            ))),
        }
    }

    pub fn flag_name(&self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::Tgcn1 => "tgcn1",
            ModelKind::Tgcn2 => "tgcn2",
            ModelKind::Tgcn3 => "tgcn3",
            ModelKind::Tgcn4 => "tgcn4",
        }
    }

    /// Has a scalar self-influence alpha.
    pub fn has_alpha(&self) -> bool {
        matches!(self, ModelKind::Tgcn1 | ModelKind::Tgcn3 | ModelKind::Tgcn4)
    }

    /// Has a per-node self-influence vector beta.
    pub fn has_beta(&self) -> bool {
        matches!(self, ModelKind::Tgcn2)
    }

    /// Accepts a polynomial order K > 1.
    pub fn supports_order(&self) -> bool {
        matches!(self, ModelKind::Tgcn3 | ModelKind::Tgcn4)
    }
}

/// Structural choice for one layer.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LayerSpec {
    pub model: ModelKind,
    /// Polynomial order K (meaningful for tgcn3/tgcn4; 1 otherwise).
    pub order: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    /// Learn alpha during training (tgcn1/3/4 only).
    pub alpha_trainable: bool,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        if self.model.supports_order() {
            if self.order < 1 {
                return Err(Error::Config(format!(
                    "{} requires order >= 1",
                    self.model.flag_name()
                )));
            }
        } else if self.order != 1 {
            return Err(Error::Config(format!(
                "{} is first-order; order must be 1",
                self.model.flag_name()
            )));
        }
        if self.alpha_trainable && !self.model.has_alpha() {
            return Err(Error::Config(format!(
                "{} has no alpha parameter to train",
                self.model.flag_name()
            )));
        }
        Ok(())
    }

    /// Number of Theta matrices this layer carries.
    pub fn theta_count(&self) -> usize {
        match self.model {
            ModelKind::Tgcn4 => self.order + 1,
            _ => 1,
        }
    }
}

/// Trainable values for one layer. The same struct doubles as the gradient
/// holder: gradient shapes mirror parameter shapes exactly.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LayerParams {
    /// One projection matrix, or K+1 of them for tgcn4.
    pub theta: Vec<Mat>,
    /// Scalar self-influence (tgcn1/3/4; ignored elsewhere).
    pub alpha: f64,
    /// Per-node self-influence (tgcn2; empty elsewhere).
    pub beta: Vec<f64>,
}

impl LayerParams {
    /// All-zero parameters with the shapes `spec` demands (`n` is the node
    /// count, needed for beta).
    pub fn zeros_like(spec: &LayerSpec, n: usize) -> LayerParams {
        LayerParams {
            theta: (0..spec.theta_count())
                .map(|_| Mat::zeros(spec.in_dim, spec.out_dim))
                .collect(),
            alpha: 0.0,
            beta: if spec.model.has_beta() {
                vec![0.0; n]
            } else {
                Vec::new()
            },
        }
    }

    fn check_shapes(&self, spec: &LayerSpec, n: usize) -> Result<()> {
        if self.theta.len() != spec.theta_count() {
            return Err(Error::Config(format!(
                "expected {} theta matrices, got {}",
                spec.theta_count(),
                self.theta.len()
            )));
        }
        for t in &self.theta {
            if t.rows() != spec.in_dim || t.cols() != spec.out_dim {
                return Err(Error::Config(format!(
                    "theta shape {}x{} does not match layer {}x{}",
                    t.rows(),
                    t.cols(),
                    spec.in_dim,
                    spec.out_dim
                )));
            }
            if !t.is_finite() {
                return Err(Error::Numerical("non-finite theta entry".into()));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::Numerical("non-finite alpha".into()));
        }
        if spec.model.has_beta() {
            if self.beta.len() != n {
                return Err(Error::Config(format!(
                    "beta length {} does not match node count {n}",
                    self.beta.len()
                )));
            }
            if self.beta.iter().any(|b| !b.is_finite()) {
                return Err(Error::Numerical("non-finite beta entry".into()));
            }
        }
        Ok(())
    }
}

/// Intermediate products a forward pass keeps for backpropagation.
#[derive(Clone, Debug)]
pub struct LayerCache {
    /// Layer input X (post-dropout).
    input: Mat,
    /// X Theta for the shared-Theta kinds.
    h: Option<Mat>,
    /// tgcn3: Q^k (X Theta) for k = 0..K-1.
    s_list: Vec<Mat>,
    /// tgcn4: Q^k X for k = 0..K.
    t_list: Vec<Mat>,
}

/// Q M = P M + alpha M.
fn apply_q_alpha(p: &PropagationMatrix, alpha: f64, m: &Mat) -> Result<Mat> {
    let mut out = spmm(p, m)?;
    out.axpy(alpha, m);
    Ok(out)
}

/// Q^T M = P^T M + alpha M.
fn apply_qt_alpha(p: &PropagationMatrix, alpha: f64, m: &Mat) -> Result<Mat> {
    let mut out = spmm_transpose(p, m)?;
    out.axpy(alpha, m);
    Ok(out)
}

/// (P + diag(beta)) M.
fn apply_q_beta(p: &PropagationMatrix, beta: &[f64], m: &Mat) -> Result<Mat> {
    let mut out = spmm(p, m)?;
    for i in 0..out.rows() {
        let b = beta[i];
        for (o, &v) in out.row_mut(i).iter_mut().zip(m.row(i)) {
            *o += b * v;
        }
    }
    Ok(out)
}

/// One layer forward: `spec`/`params` against propagation matrix `p` and
/// input features `x` (n x in_dim). Returns n x out_dim.
pub fn propagate(
    spec: &LayerSpec,
    params: &LayerParams,
    p: &PropagationMatrix,
    x: &Mat,
) -> Result<Mat> {
    propagate_cached(spec, params, p, x).map(|(out, _)| out)
}

/// Forward pass that also returns the cache backpropagation needs.
pub fn propagate_cached(
    spec: &LayerSpec,
    params: &LayerParams,
    p: &PropagationMatrix,
    x: &Mat,
) -> Result<(Mat, LayerCache)> {
    if x.rows() != p.n() {
        return Err(Error::Config(format!(
            "feature rows {} do not match node count {}",
            x.rows(),
            p.n()
        )));
    }
    if x.cols() != spec.in_dim {
        return Err(Error::Config(format!(
            "feature width {} does not match layer in_dim {}",
            x.cols(),
            spec.in_dim
        )));
    }
    params.check_shapes(spec, p.n())?;

    let mut cache = LayerCache {
        input: x.clone(),
        h: None,
        s_list: Vec::new(),
        t_list: Vec::new(),
    };

    let out = match spec.model {
        ModelKind::Gcn => {
            let h = x.matmul(&params.theta[0])?;
            let out = spmm(p, &h)?;
            cache.h = Some(h);
            out
        }
        ModelKind::Tgcn1 => {
            let h = x.matmul(&params.theta[0])?;
            let out = apply_q_alpha(p, params.alpha, &h)?;
            cache.h = Some(h);
            out
        }
        ModelKind::Tgcn2 => {
            let h = x.matmul(&params.theta[0])?;
            let out = apply_q_beta(p, &params.beta, &h)?;
            cache.h = Some(h);
            out
        }
        ModelKind::Tgcn3 => {
            let h = x.matmul(&params.theta[0])?;
            let mut acc = h.clone();
            let mut s = h.clone();
            for _ in 1..=spec.order {
                cache.s_list.push(s.clone());
                s = apply_q_alpha(p, params.alpha, &s)?;
                acc.axpy(1.0, &s);
            }
            cache.h = Some(h);
            acc
        }
        ModelKind::Tgcn4 => {
            let mut t = x.clone();
            let mut acc = t.matmul(&params.theta[0])?;
            cache.t_list.push(t.clone());
            for k in 1..=spec.order {
                t = apply_q_alpha(p, params.alpha, &t)?;
                cache.t_list.push(t.clone());
                acc.axpy(1.0, &t.matmul(&params.theta[k])?);
            }
            acc
        }
    };
    Ok((out, cache))
}

/// Backward through one layer: gradients for its parameters and its input.
///
/// Non-trainable alpha slots get a zero gradient so the shapes always mirror
/// the parameters.
pub fn propagate_backward(
    spec: &LayerSpec,
    params: &LayerParams,
    p: &PropagationMatrix,
    cache: &LayerCache,
    grad_out: &Mat,
) -> Result<(LayerParams, Mat)> {
    let mut grads = LayerParams::zeros_like(spec, p.n());
    let x = &cache.input;

    let grad_input = match spec.model {
        ModelKind::Gcn => {
            let g_h = spmm_transpose(p, grad_out)?;
            grads.theta[0] = x.transpose().matmul(&g_h)?;
            g_h.matmul(&params.theta[0].transpose())?
        }
        ModelKind::Tgcn1 => {
            let h = cache.h.as_ref().expect("tgcn1 cache");
            let g_h = apply_qt_alpha(p, params.alpha, grad_out)?;
            grads.theta[0] = x.transpose().matmul(&g_h)?;
            if spec.alpha_trainable {
                grads.alpha = grad_out.frob_inner(h);
            }
            g_h.matmul(&params.theta[0].transpose())?
        }
        ModelKind::Tgcn2 => {
            let h = cache.h.as_ref().expect("tgcn2 cache");
            // Q^T = P^T + diag(beta)
            let mut g_h = spmm_transpose(p, grad_out)?;
            for i in 0..g_h.rows() {
                let b = params.beta[i];
                for (gh, &g) in g_h.row_mut(i).iter_mut().zip(grad_out.row(i)) {
                    *gh += b * g;
                }
            }
            grads.theta[0] = x.transpose().matmul(&g_h)?;
            for i in 0..h.rows() {
                grads.beta[i] = grad_out
                    .row(i)
                    .iter()
                    .zip(h.row(i))
                    .map(|(g, hv)| g * hv)
                    .sum();
            }
            g_h.matmul(&params.theta[0].transpose())?
        }
        ModelKind::Tgcn3 => {
            // dL/dH = sum_{k=0}^K (Q^T)^k G
            let mut g_pow = grad_out.clone();
            let mut g_h = grad_out.clone();
            for _ in 1..=spec.order {
                g_pow = apply_qt_alpha(p, params.alpha, &g_pow)?;
                g_h.axpy(1.0, &g_pow);
            }
            grads.theta[0] = x.transpose().matmul(&g_h)?;
            if spec.alpha_trainable {
                // d(Q^k)/dalpha = k Q^{k-1} since dQ/dalpha = I commutes with Q
                grads.alpha = cache
                    .s_list
                    .iter()
                    .enumerate()
                    .map(|(idx, s)| (idx as f64 + 1.0) * grad_out.frob_inner(s))
                    .sum();
            }
            g_h.matmul(&params.theta[0].transpose())?
        }
        ModelKind::Tgcn4 => {
            let mut grad_input = Mat::zeros(x.rows(), x.cols());
            // dTheta_k = T_k^T G for every k (G is the same for all terms)
            for k in 0..=spec.order {
                grads.theta[k] = cache.t_list[k].transpose().matmul(grad_out)?;
            }
            // dX = sum_k (Q^T)^k G Theta_k^T
            let mut g_pow = grad_out.clone();
            grad_input.axpy(1.0, &g_pow.matmul(&params.theta[0].transpose())?);
            for k in 1..=spec.order {
                g_pow = apply_qt_alpha(p, params.alpha, &g_pow)?;
                grad_input.axpy(1.0, &g_pow.matmul(&params.theta[k].transpose())?);
            }
            if spec.alpha_trainable {
                // dO/dalpha = sum_k k Q^{k-1} X Theta_k
                grads.alpha = (1..=spec.order)
                    .map(|k| {
                        let term = cache.t_list[k - 1].matmul(&params.theta[k])?;
                        Ok(k as f64 * grad_out.frob_inner(&term))
                    })
                    .sum::<Result<f64>>()?;
            }
            grad_input
        }
    };
    Ok((grads, grad_input))
}

/// Entrywise max(0, x).
pub fn relu(x: &Mat) -> Mat {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Gradient of relu given the pre-activation values.
pub fn relu_backward(pre: &Mat, grad: &Mat) -> Mat {
    let mut out = grad.clone();
    for (o, &p) in out.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *o = 0.0;
        }
    }
    out
}

/// Row-wise softmax with max-subtraction for stability; rows sum to 1.
pub fn softmax_rows(x: &Mat) -> Mat {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Inverted dropout: in training mode each entry survives with probability
/// 1 - rate and is scaled by 1/(1 - rate); in eval mode the identity.
pub fn dropout(x: &Mat, rate: f64, rng: &mut impl Rng, training: bool) -> Result<Mat> {
    dropout_with_mask(x, rate, rng, training).map(|(out, _)| out)
}

/// Dropout that also returns the mask (scale factor per entry) so the
/// backward pass can reuse the exact sampled pattern.
pub fn dropout_with_mask(
    x: &Mat,
    rate: f64,
    rng: &mut impl Rng,
    training: bool,
) -> Result<(Mat, Option<Mat>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = 1.0 / (1.0 - rate);
    let mut mask = Mat::zeros(x.rows(), x.cols());
    for m in mask.data_mut() {
        if rng.random::<f64>() >= rate {
            *m = scale;
        }
    }
    let mut out = x.clone();
    for (o, &m) in out.data_mut().iter_mut().zip(mask.data()) {
        *o *= m;
    }
    Ok((out, Some(mask)))
}
