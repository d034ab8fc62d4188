//! Model assembly and training: masked cross-entropy over labeled nodes,
//! hand-derived gradients (checked against finite differences in the test
//! suite), bias-corrected Adam with coupled weight decay on the first
//! layer's projection, and the full-graph train/evaluate loops.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitSpec};
use crate::layers::{
    dropout_with_mask, propagate_backward, propagate_cached, relu, relu_backward, softmax_rows,
    LayerCache, LayerParams, LayerSpec, ModelKind,
};
use crate::mat::Mat;
use crate::prop::{build_representation, PropagationMatrix, ReprKind};
use crate::rng;
use crate::{Error, Result};

/// Probability floor inside the log of the cross-entropy.
const PROB_CLAMP: f64 = 1e-12;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Full model + optimizer configuration. The defaults mirror the usual
/// node-classification recipe: dropout 0.5, learning rate 0.01, weight
/// decay 5e-4, 40 hidden units, 200 epochs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub layer_specs: Vec<LayerSpec>,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub seed: u64,
    pub deterministic: bool,
    /// Initial (or fixed, when not trainable) self-influence alpha.
    pub alpha_init: f64,
}

pub const DEFAULT_HIDDEN: usize = 40;
pub const DEFAULT_DROPOUT: f64 = 0.5;
pub const DEFAULT_LR: f64 = 0.01;
pub const DEFAULT_WEIGHT_DECAY: f64 = 5e-4;
pub const DEFAULT_EPOCHS: usize = 200;
/// Starting point for a trainable alpha.
pub const DEFAULT_TRAINABLE_ALPHA: f64 = 0.2;

impl ModelConfig {
    /// A 1- or 2-layer node classifier of the given kind.
    pub fn node_classifier(
        model: ModelKind,
        num_layers: usize,
        order: usize,
        in_dim: usize,
        hidden: usize,
        num_classes: usize,
        alpha_trainable: bool,
    ) -> Result<ModelConfig> {
        let layer_specs = match num_layers {
            1 => vec![LayerSpec {
                model,
                order,
                in_dim,
                out_dim: num_classes,
                alpha_trainable,
            }],
            2 => vec![
                LayerSpec {
                    model,
                    order,
                    in_dim,
                    out_dim: hidden,
                    alpha_trainable,
                },
                LayerSpec {
                    model,
                    order,
                    in_dim: hidden,
                    out_dim: num_classes,
                    alpha_trainable,
                },
            ],
            other => {
                return Err(Error::Config(format!(
                    "node classifier supports 1 or 2 layers, got {other}"
                )))
            }
        };
        let config = ModelConfig {
            layer_specs,
            dropout: DEFAULT_DROPOUT,
            lr: DEFAULT_LR,
            weight_decay: DEFAULT_WEIGHT_DECAY,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            deterministic: false,
            alpha_init: if alpha_trainable { DEFAULT_TRAINABLE_ALPHA } else { 0.0 },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_specs.is_empty() {
            return Err(Error::Config("model needs at least one layer".into()));
        }
        for spec in &self.layer_specs {
            spec.validate()?;
        }
        for pair in self.layer_specs.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::Config(format!(
                    "layer dims do not chain: {} -> {}",
                    pair[0].out_dim, pair[1].in_dim
                )));
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::Config(format!("bad learning rate {}", self.lr)));
        }
        if self.weight_decay < 0.0 || !self.weight_decay.is_finite() {
            return Err(Error::Config(format!("bad weight decay {}", self.weight_decay)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        Ok(())
    }

    pub fn in_dim(&self) -> usize {
        self.layer_specs[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layer_specs.last().expect("non-empty").out_dim
    }
}

/// Per-layer parameters with a fixed flat ordering (layer index, then
/// alpha / beta / theta within a layer). The same shape doubles as the
/// gradient and Adam-moment holder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamStore {
    pub layers: Vec<LayerParams>,
}

/// Gradient shapes mirror parameter shapes exactly.
pub type Gradients = ParamStore;

impl ParamStore {
    /// Glorot-uniform thetas seeded per (run seed, layer, matrix); alpha at
    /// `config.alpha_init`; beta all-zero.
    pub fn init(config: &ModelConfig, n: usize) -> ParamStore {
        let layers = config
            .layer_specs
            .iter()
            .enumerate()
            .map(|(l, spec)| {
                let mut params = LayerParams::zeros_like(spec, n);
                for (j, theta) in params.theta.iter_mut().enumerate() {
                    let limit = (6.0 / (spec.in_dim + spec.out_dim) as f64).sqrt();
                    let mut r = rng::stream(config.seed, 0x1000 + (l as u64) * 64 + j as u64);
                    *theta = Mat::from_fn(spec.in_dim, spec.out_dim, |_, _| {
                        r.random_range(-limit..limit)
                    });
                }
                if spec.model.has_alpha() {
                    params.alpha = config.alpha_init;
                }
                params
            })
            .collect();
        ParamStore { layers }
    }

    pub fn zeros_like(config: &ModelConfig, n: usize) -> ParamStore {
        ParamStore {
            layers: config
                .layer_specs
                .iter()
                .map(|spec| LayerParams::zeros_like(spec, n))
                .collect(),
        }
    }
}

/// Everything a backward pass needs from the forward pass.
pub struct ForwardCache {
    /// Dropout masks per layer input (scale factor per entry; None = identity).
    masks: Vec<Option<Mat>>,
    layer_caches: Vec<LayerCache>,
    /// Propagate outputs per layer (logits for the last layer).
    pre_acts: Vec<Mat>,
    /// Softmax output.
    pub z: Mat,
}

impl ForwardCache {
    /// The sampled dropout masks, for replaying the same network in
    /// [`forward_with_masks`].
    pub fn masks(&self) -> &[Option<Mat>] {
        &self.masks
    }
}

enum DropoutMode<'a, R: Rng> {
    Sample { rng: &'a mut R, training: bool },
    Reuse(&'a [Option<Mat>]),
}

fn forward_impl<R: Rng>(
    config: &ModelConfig,
    params: &ParamStore,
    p: &PropagationMatrix,
    x: &Mat,
    mut mode: DropoutMode<'_, R>,
) -> Result<(Mat, ForwardCache)> {
    config.validate()?;
    if params.layers.len() != config.layer_specs.len() {
        return Err(Error::Config("param store does not match layer specs".into()));
    }
    let num_layers = config.layer_specs.len();
    let mut masks = Vec::with_capacity(num_layers);
    let mut layer_caches = Vec::with_capacity(num_layers);
    let mut pre_acts: Vec<Mat> = Vec::with_capacity(num_layers);

    for l in 0..num_layers {
        let base = if l == 0 {
            x.clone()
        } else {
            relu(&pre_acts[l - 1])
        };
        let (dropped, mask) = match &mut mode {
            DropoutMode::Sample { rng, training } => {
                dropout_with_mask(&base, config.dropout, *rng, *training)?
            }
            DropoutMode::Reuse(stored) => match &stored[l] {
                Some(mask) => {
                    let mut m = base.clone();
                    for (o, &s) in m.data_mut().iter_mut().zip(mask.data()) {
                        *o *= s;
                    }
                    (m, Some(mask.clone()))
                }
                None => (base.clone(), None),
            },
        };
        let (out, cache) =
            propagate_cached(&config.layer_specs[l], &params.layers[l], p, &dropped)?;
        masks.push(mask);
        layer_caches.push(cache);
        pre_acts.push(out);
    }
    let z = softmax_rows(pre_acts.last().expect("at least one layer"));
    Ok((
        z.clone(),
        ForwardCache {
            masks,
            layer_caches,
            pre_acts,
            z,
        },
    ))
}

/// Forward pass producing the row-stochastic prediction matrix Z.
/// Composition: [dropout ->] propagate -> relu (between layers) ->
/// propagate -> softmax; single-layer models skip the hidden stage.
pub fn forward(
    config: &ModelConfig,
    params: &ParamStore,
    p: &PropagationMatrix,
    x: &Mat,
    training: bool,
    rng: &mut impl Rng,
) -> Result<Mat> {
    forward_impl(config, params, p, x, DropoutMode::Sample { rng, training })
        .map(|(z, _)| z)
}

/// Forward pass keeping the cache for [`backward`].
pub fn forward_cached(
    config: &ModelConfig,
    params: &ParamStore,
    p: &PropagationMatrix,
    x: &Mat,
    training: bool,
    rng: &mut impl Rng,
) -> Result<(Mat, ForwardCache)> {
    forward_impl(config, params, p, x, DropoutMode::Sample { rng, training })
}

/// Forward pass reusing previously sampled dropout masks; this is the
/// function the finite-difference oracle perturbs, so that it differentiates
/// exactly the sampled network.
pub fn forward_with_masks(
    config: &ModelConfig,
    params: &ParamStore,
    p: &PropagationMatrix,
    x: &Mat,
    masks: &[Option<Mat>],
) -> Result<Mat> {
    forward_impl::<ChaCha8Rng>(config, params, p, x, DropoutMode::Reuse(masks)).map(|(z, _)| z)
}

/// Cross-entropy summed (not averaged) over the labeled nodes:
/// L = -sum_{i in labeled} ln Z[i, y_i], with probabilities clamped at 1e-12.
pub fn cross_entropy(z: &Mat, labels: &[usize], labeled: &[usize]) -> Result<f64> {
    if labeled.is_empty() {
        return Err(Error::Config("cross entropy needs a non-empty labeled set".into()));
    }
    let mut loss = 0.0;
    for &i in labeled {
        if i >= z.rows() || labels[i] >= z.cols() {
            return Err(Error::Config(format!("labeled index {i} out of range")));
        }
        loss -= z.get(i, labels[i]).max(PROB_CLAMP).ln();
    }
    Ok(loss)
}

/// Weight-decay term of the optimized objective: w/2 * ||Theta_0||^2 over
/// the first layer's projection matrices only.
pub fn weight_decay_penalty(config: &ModelConfig, params: &ParamStore) -> f64 {
    0.5 * config.weight_decay
        * params.layers[0]
            .theta
            .iter()
            .map(Mat::frob_norm_sq)
            .sum::<f64>()
}

/// The scalar the optimizer actually descends: cross-entropy plus the
/// first-layer weight-decay penalty.
pub fn objective(
    config: &ModelConfig,
    params: &ParamStore,
    z: &Mat,
    labels: &[usize],
    labeled: &[usize],
) -> Result<f64> {
    Ok(cross_entropy(z, labels, labeled)? + weight_decay_penalty(config, params))
}

/// Reverse-mode gradients of the optimized objective for every trainable
/// slot. Dropout masks from the cache are reused, so this differentiates
/// the exact sampled forward.
pub fn backward(
    config: &ModelConfig,
    params: &ParamStore,
    p: &PropagationMatrix,
    cache: &ForwardCache,
    labels: &[usize],
    labeled: &[usize],
) -> Result<Gradients> {
    if labeled.is_empty() {
        return Err(Error::Config("backward needs a non-empty labeled set".into()));
    }
    if cache.pre_acts.len() != config.layer_specs.len() {
        return Err(Error::Config("forward cache does not match the model".into()));
    }
    let n = p.n();
    let classes = config.num_classes();
    let mut grads = ParamStore::zeros_like(config, n);

    // d(objective)/d(logits): Z - Y on labeled rows, zero elsewhere
    let mut grad = Mat::zeros(n, classes);
    for &i in labeled {
        for j in 0..classes {
            let y = if labels[i] == j { 1.0 } else { 0.0 };
            let v = grad.get(i, j) + cache.z.get(i, j) - y;
            grad.set(i, j, v);
        }
    }

    for l in (0..config.layer_specs.len()).rev() {
        let (layer_grads, mut grad_input) = propagate_backward(
            &config.layer_specs[l],
            &params.layers[l],
            p,
            &cache.layer_caches[l],
            &grad,
        )?;
        grads.layers[l] = layer_grads;
        if let Some(mask) = &cache.masks[l] {
            for (g, &m) in grad_input.data_mut().iter_mut().zip(mask.data()) {
                *g *= m;
            }
        }
        if l > 0 {
            grad = relu_backward(&cache.pre_acts[l - 1], &grad_input);
        }
    }

    // coupled weight decay on the first layer's projection
    for (j, theta_grad) in grads.layers[0].theta.iter_mut().enumerate() {
        theta_grad.axpy(config.weight_decay, &params.layers[0].theta[j]);
    }
    Ok(grads)
}

/// First- and second-moment accumulators for Adam, plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: ParamStore,
    v: ParamStore,
    t: u64,
}

impl AdamState {
    pub fn new(like: &ParamStore) -> AdamState {
        let zero = ParamStore {
            layers: like
                .layers
                .iter()
                .map(|lp| LayerParams {
                    theta: lp.theta.iter().map(|t| Mat::zeros(t.rows(), t.cols())).collect(),
                    alpha: 0.0,
                    beta: vec![0.0; lp.beta.len()],
                })
                .collect(),
        };
        AdamState {
            m: zero.clone(),
            v: zero,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update. Weight decay is already coupled into the
/// gradients (see [`backward`]); this only applies the standard moments.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut ParamStore,
    grads: &Gradients,
    lr: f64,
) -> Result<()> {
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - ADAM_BETA1.powi(t);
    let bias2 = 1.0 - ADAM_BETA2.powi(t);

    #[inline]
    fn update(p: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, bias1: f64, bias2: f64) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        *p -= lr * (*m / bias1) / ((*v / bias2).sqrt() + ADAM_EPS);
    }

    for l in 0..params.layers.len() {
        // slot order within a layer: alpha, beta, theta
        let g = grads.layers[l].alpha;
        if !g.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite gradient for layer {l} alpha"
            )));
        }
        update(
            &mut params.layers[l].alpha,
            g,
            &mut state.m.layers[l].alpha,
            &mut state.v.layers[l].alpha,
            lr,
            bias1,
            bias2,
        );
        for i in 0..params.layers[l].beta.len() {
            let g = grads.layers[l].beta[i];
            if !g.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite gradient for layer {l} beta[{i}]"
                )));
            }
            update(
                &mut params.layers[l].beta[i],
                g,
                &mut state.m.layers[l].beta[i],
                &mut state.v.layers[l].beta[i],
                lr,
                bias1,
                bias2,
            );
        }
        for j in 0..params.layers[l].theta.len() {
            let gs = grads.layers[l].theta[j].data();
            let ps = params.layers[l].theta[j].data_mut();
            let ms = state.m.layers[l].theta[j].data_mut();
            let vs = state.v.layers[l].theta[j].data_mut();
            for idx in 0..ps.len() {
                let g = gs[idx];
                if !g.is_finite() {
                    return Err(Error::Numerical(format!(
                        "non-finite gradient for layer {l} theta[{j}][{idx}]"
                    )));
                }
                update(&mut ps[idx], g, &mut ms[idx], &mut vs[idx], lr, bias1, bias2);
            }
        }
    }
    Ok(())
}

/// Per-epoch training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub ms: f64,
}

/// Full training record for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub epochs: Vec<EpochMetrics>,
    pub test_acc: f64,
}

/// Row argmax with ties broken toward the lowest class index.
pub fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Fraction of `idx` whose argmax prediction matches the label.
pub fn accuracy(z: &Mat, labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let hits = idx
        .iter()
        .filter(|&&i| argmax_row(z.row(i)) == labels[i])
        .count();
    hits as f64 / idx.len() as f64
}

/// Eval-mode accuracy of a trained model on an index set.
pub fn evaluate(
    config: &ModelConfig,
    params: &ParamStore,
    p: &PropagationMatrix,
    features: &Mat,
    labels: &[usize],
    idx: &[usize],
) -> Result<f64> {
    let mut rng = rng::stream(config.seed, 0xEAA1);
    let z = forward(config, params, p, features, false, &mut rng)?;
    Ok(accuracy(&z, labels, idx))
}

/// Train on a dataset with the given split and representation kind:
/// exactly `config.epochs` full-graph Adam steps, no early stopping.
pub fn train(
    config: &ModelConfig,
    dataset: &Dataset,
    split: &SplitSpec,
    kind: ReprKind,
) -> Result<(ParamStore, Metrics)> {
    config.validate()?;
    dataset.validate()?;
    split.validate(dataset.n())?;
    if config.in_dim() != dataset.num_features() {
        return Err(Error::Config(format!(
            "model in_dim {} does not match dataset features {}",
            config.in_dim(),
            dataset.num_features()
        )));
    }
    if config.num_classes() != dataset.num_classes {
        return Err(Error::Config(format!(
            "model classes {} do not match dataset classes {}",
            config.num_classes(),
            dataset.num_classes
        )));
    }
    if split.train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }

    let p = build_representation(&dataset.graph, kind)?;
    if p.isolated_nodes() > 0 {
        eprintln!(
            "warning: {} isolated node(s) keep all-zero random-walk rows",
            p.isolated_nodes()
        );
    }
    let x = &dataset.features;
    let labels = &dataset.labels;

    let mut params = ParamStore::init(config, dataset.n());
    let mut adam = AdamState::new(&params);
    let mut dropout_rng = rng::stream(config.seed, 0xD0);
    let mut epochs = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        let t0 = Instant::now();
        let (z, cache) = forward_cached(config, &params, &p, x, true, &mut dropout_rng)?;
        let loss = objective(config, &params, &z, labels, &split.train)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("training loss diverged ({loss})")));
        }
        let grads = backward(config, &params, &p, &cache, labels, &split.train)?;
        adam_step(&mut adam, &mut params, &grads, config.lr)?;

        let mut eval_rng = rng::stream(config.seed, 0xE7A1);
        let z_eval = forward(config, &params, &p, x, false, &mut eval_rng)?;
        let train_acc = accuracy(&z_eval, labels, &split.train);
        let val_acc = accuracy(&z_eval, labels, &split.val);
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        epochs.push(EpochMetrics {
            loss,
            train_acc,
            val_acc,
            ms,
        });
    }

    let test_acc = evaluate(config, &params, &p, x, labels, &split.test)?;
    Ok((params, Metrics { epochs, test_acc }))
}

/// One row of an alpha sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub mean_val_acc: f64,
    pub std_val_acc: f64,
}

/// Grid-search a fixed (non-trainable) alpha for a tgcn1 template: one
/// training run per (grid point, seed), reporting mean and population std
/// of the final validation accuracy.
pub fn alpha_sweep(
    template: &ModelConfig,
    dataset: &Dataset,
    split: &SplitSpec,
    kind: ReprKind,
    grid: &[f64],
    seeds: &[u64],
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("alpha sweep needs a non-empty grid".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("alpha sweep needs at least one seed".into()));
    }
    for spec in &template.layer_specs {
        if spec.model != ModelKind::Tgcn1 || spec.alpha_trainable {
            return Err(Error::Config(
                "alpha sweep expects tgcn1 layers with alpha_trainable = false".into(),
            ));
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let mut vals = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut config = template.clone();
            config.seed = seed;
            config.alpha_init = alpha;
            let (_, metrics) = train(&config, dataset, split, kind)?;
            vals.push(metrics.epochs.last().expect("epochs > 0").val_acc);
        }
        rows.push(SweepRow {
            alpha,
            mean_val_acc: mean(&vals),
            std_val_acc: std_dev(&vals),
        });
    }
    Ok(rows)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}
