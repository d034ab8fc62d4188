//! Subcommand implementations behind the `tgcn` binary: training runs with
//! machine-readable metrics, the spectral equivalence battery, kernel
//! approximation comparison, alpha sweeps, and synthetic data generation.
//!
//! Exit codes (mapped by the binary from [`crate::Error`] variants):
//! 0 success, 2 configuration error, 3 data error, 4 numerical failure.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{
    load_dataset, load_point_cloud, load_splits, make_splits, row_normalize_features,
    save_dataset, Dataset, SplitRatio, SplitSpec,
};
use crate::graph::{knn_graph, sbm_generate, SbmParams};
use crate::layers::ModelKind;
use crate::mat::Mat;
use crate::prop::ReprKind;
use crate::rng;
use crate::spectral::{
    chebyshev_coeffs, eigendecompose, polynomial_filter_spectral, polynomial_filter_vertex,
    taylor_coeffs, wavelet_apply, Kernel, PolynomialCoeffs, Scheme, WaveletKernel, EIGEN_CAP,
};
use crate::train::{
    self, alpha_sweep, mean, std_dev, evaluate, EpochMetrics, Metrics, ModelConfig, ParamStore,
    DEFAULT_TRAINABLE_ALPHA,
};
use crate::{Error, Result};

/// Metrics file written by `tgcn train`. Key order is fixed by field order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsFile {
    pub schema: u32,
    pub config: ConfigEcho,
    pub runs: Vec<RunEntry>,
    pub aggregate: Aggregate,
}

/// Echo of every hyperparameter that shaped a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: String,
    pub model: String,
    pub layers: usize,
    pub order: usize,
    pub prop: String,
    pub alpha: f64,
    pub auto_alpha: bool,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub split: String,
    pub split_seed: u64,
    pub resplit_per_seed: bool,
    pub normalize_features: bool,
    pub seeds: Vec<u64>,
    pub deterministic: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunEntry {
    pub seed: u64,
    pub epochs: Vec<EpochMetrics>,
    pub test_acc: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

/// Saved trained model: enough to rebuild the forward pass for `tgcn eval`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: u32,
    pub config: ModelConfig,
    pub prop: ReprKind,
    pub normalize_features: bool,
    pub params: ParamStore,
}

/// Options for `tgcn train`.
#[derive(Clone, Debug)]
pub struct TrainOpts {
    pub dataset: PathBuf,
    pub model: String,
    pub order: usize,
    pub prop: String,
    pub alpha: Option<f64>,
    pub auto_alpha: bool,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub layers: usize,
    pub seeds: Vec<u64>,
    pub split: String,
    pub split_seed: u64,
    pub resplit_per_seed: bool,
    pub no_normalize: bool,
    pub out: PathBuf,
    pub save_model: Option<PathBuf>,
    pub deterministic: bool,
}

/// Resolve the model/alpha flag combination into a validated ModelConfig
/// template (seed filled in per run).
fn build_config(opts: &TrainOpts, in_dim: usize, num_classes: usize) -> Result<ModelConfig> {
    let model = ModelKind::parse(&opts.model)?;
    if opts.order != 1 && !model.supports_order() {
        return Err(Error::Config(format!(
            "--order {} is only valid for tgcn3/tgcn4, not {}",
            opts.order,
            model.flag_name()
        )));
    }
    if (opts.alpha.is_some() || opts.auto_alpha) && !model.has_alpha() {
        return Err(Error::Config(format!(
            "{} has no alpha parameter (--alpha / --auto-alpha invalid)",
            model.flag_name()
        )));
    }
    let mut config = ModelConfig::node_classifier(
        model,
        opts.layers,
        opts.order,
        in_dim,
        opts.hidden,
        num_classes,
        opts.auto_alpha,
    )?;
    config.dropout = opts.dropout;
    config.lr = opts.lr;
    config.weight_decay = opts.weight_decay;
    config.epochs = opts.epochs;
    config.deterministic = opts.deterministic;
    config.alpha_init = match (opts.alpha, opts.auto_alpha) {
        (Some(a), _) => a,
        (None, true) => DEFAULT_TRAINABLE_ALPHA,
        (None, false) => 0.0,
    };
    config.validate()?;
    Ok(config)
}

fn load_prepared_dataset(dir: &Path, normalize: bool) -> Result<Dataset> {
    let mut ds = load_dataset(dir)?;
    if normalize {
        ds.features = row_normalize_features(&ds.features);
    }
    Ok(ds)
}

/// Worker cap: TGCN_THREADS, else available parallelism, clamped to jobs.
fn worker_count(jobs: usize) -> usize {
    let hw = std::thread::available_parallelism()
        .map(|p| p.get())
        .unwrap_or(1);
    let cap = std::env::var("TGCN_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&c| c >= 1)
        .unwrap_or(hw);
    cap.min(jobs).max(1)
}

/// Apply `f` to every item on a small worker pool, preserving input order.
fn parallel_map<I, T, F>(items: &[I], f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync,
{
    let workers = worker_count(items.len());
    if workers <= 1 {
        return items.iter().map(|i| f(i)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("poisoned slot").expect("slot filled"))
        .collect()
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Data(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `tgcn train`: one training run per seed, metrics JSON to `--out`.
pub fn run_train(opts: &TrainOpts) -> Result<MetricsFile> {
    if opts.seeds.is_empty() {
        return Err(Error::Config("--seeds needs at least one seed".into()));
    }
    let kind = ReprKind::parse(&opts.prop)?;
    let ratio = SplitRatio::parse(&opts.split)?;
    let normalize = !opts.no_normalize;
    let dataset = load_prepared_dataset(&opts.dataset, normalize)?;
    let config_template = build_config(opts, dataset.num_features(), dataset.num_classes)?;
    let base_split = make_splits(dataset.n(), ratio, opts.split_seed)?;

    struct Job {
        seed: u64,
        config: ModelConfig,
        split: SplitSpec,
    }
    let jobs: Vec<Job> = opts
        .seeds
        .iter()
        .map(|&seed| {
            let mut config = config_template.clone();
            config.seed = seed;
            let split = if opts.resplit_per_seed {
                make_splits(dataset.n(), ratio, seed)
            } else {
                Ok(base_split.clone())
            }?;
            Ok(Job { seed, config, split })
        })
        .collect::<Result<_>>()?;

    let results: Vec<(u64, ParamStore, Metrics)> = parallel_map(&jobs, |job| {
        let (params, metrics) = train::train(&job.config, &dataset, &job.split, kind)?;
        Ok((job.seed, params, metrics))
    })?;

    if let Some(model_path) = &opts.save_model {
        // save the first seed's model
        let (_, params, _) = &results[0];
        let model_file = ModelFile {
            schema: 1,
            config: jobs[0].config.clone(),
            prop: kind,
            normalize_features: normalize,
            params: params.clone(),
        };
        write_json(&model_file, model_path)?;
    }

    let runs: Vec<RunEntry> = results
        .iter()
        .map(|(seed, _, metrics)| RunEntry {
            seed: *seed,
            epochs: metrics.epochs.clone(),
            test_acc: metrics.test_acc,
        })
        .collect();
    let accs: Vec<f64> = runs.iter().map(|r| r.test_acc).collect();
    let metrics_file = MetricsFile {
        schema: 1,
        config: ConfigEcho {
            dataset: opts.dataset.display().to_string(),
            model: opts.model.clone(),
            layers: opts.layers,
            order: opts.order,
            prop: kind.flag_name().to_string(),
            alpha: config_template.alpha_init,
            auto_alpha: opts.auto_alpha,
            hidden: opts.hidden,
            epochs: opts.epochs,
            lr: opts.lr,
            dropout: opts.dropout,
            weight_decay: opts.weight_decay,
            split: ratio.tag().to_string(),
            split_seed: opts.split_seed,
            resplit_per_seed: opts.resplit_per_seed,
            normalize_features: normalize,
            seeds: opts.seeds.clone(),
            deterministic: opts.deterministic,
        },
        runs,
        aggregate: Aggregate {
            mean: mean(&accs),
            std: std_dev(&accs),
        },
    };
    write_json(&metrics_file, &opts.out)?;
    for r in &metrics_file.runs {
        println!("seed {:>3}: test accuracy {:.4}", r.seed, r.test_acc);
    }
    println!(
        "aggregate: {:.4} +/- {:.4} over {} seed(s)",
        metrics_file.aggregate.mean,
        metrics_file.aggregate.std,
        metrics_file.runs.len()
    );
    Ok(metrics_file)
}

/// Options for `tgcn spectral-check`.
#[derive(Clone, Debug)]
pub struct SpectralCheckOpts {
    pub n: usize,
    pub trials: usize,
    pub degree: usize,
    pub seed: u64,
}

/// Spectral-vs-vertex equivalence battery on random symmetric matrices.
/// Returns the max error over all trials; the binary exits 0 iff <= 1e-8.
pub fn run_spectral_check(opts: &SpectralCheckOpts) -> Result<f64> {
    if opts.n == 0 || opts.n > EIGEN_CAP {
        return Err(Error::Config(format!(
            "--n must lie in 1..={EIGEN_CAP}, got {}",
            opts.n
        )));
    }
    let mut max_err: f64 = 0.0;
    for trial in 0..opts.trials {
        let mut r = rng::stream(opts.seed, trial as u64);
        let n = opts.n;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = r.random_range(-1.0..1.0);
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let basis = eigendecompose(&m)?;
        let center = r.random_range(-0.5..0.5);
        let theta: Vec<f64> = (0..=opts.degree).map(|_| r.random_range(-1.0..1.0)).collect();
        let coeffs = PolynomialCoeffs {
            theta,
            scheme: Scheme::Taylor { center },
        };
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let vertex = polynomial_filter_vertex(&m, &coeffs, &x)?;
        let spectral = polynomial_filter_spectral(&basis, &coeffs, &x)?;
        let err = vertex
            .iter()
            .zip(&spectral)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_err = max_err.max(err);
    }
    println!(
        "spectral-check: {} trial(s), n = {}, degree <= {}, max |vertex - spectral| = {:.3e}",
        opts.trials, opts.n, opts.degree, max_err
    );
    Ok(max_err)
}

/// Options for `tgcn approx-compare`.
#[derive(Clone, Debug)]
pub struct ApproxCompareOpts {
    pub kernel: String,
    pub orders: Vec<usize>,
    pub n: usize,
    pub seed: u64,
}

/// One row of the approximation comparison.
#[derive(Clone, Debug)]
pub struct ApproxRow {
    pub order: usize,
    pub taylor_error: f64,
    pub chebyshev_error: f64,
}

/// Seeded random graph Laplacian used by the diagnostics commands.
pub fn random_laplacian(n: usize, seed: u64) -> Mat {
    let mut edges = Vec::new();
    // ring for connectivity plus random chords
    for i in 0..n {
        edges.push((i, (i + 1) % n));
    }
    let mut pair = 0u64;
    for i in 0..n {
        for j in (i + 2)..n {
            if rng::coin(seed, pair, 0.2) && !(i == 0 && j == n - 1) {
                edges.push((i, j));
            }
            pair += 1;
        }
    }
    let g = crate::graph::build_graph(&edges, n).expect("valid generated edges");
    let a = g.adjacency_dense();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            g.degree(i) as f64
        } else {
            -a.get(i, j)
        }
    })
}

/// Compare Taylor vs Chebyshev filtered outputs against the exact wavelet
/// operator on a random Laplacian; one row per order.
pub fn run_approx_compare(opts: &ApproxCompareOpts) -> Result<Vec<ApproxRow>> {
    if opts.orders.is_empty() {
        return Err(Error::Config("--orders needs at least one order".into()));
    }
    if opts.n == 0 || opts.n > EIGEN_CAP {
        return Err(Error::Config(format!(
            "--n must lie in 1..={EIGEN_CAP}, got {}",
            opts.n
        )));
    }
    let kernel = Kernel::parse(&opts.kernel)?;
    let lap = random_laplacian(opts.n, opts.seed);
    let basis = eigendecompose(&lap)?;
    let center = mean(basis.values());
    let lambda_max = basis.lambda_max();
    let wk = WaveletKernel::Closed(kernel.clone());

    let mut r = rng::stream(opts.seed, 0xA9);
    let signals: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..opts.n).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();

    let mut rows = Vec::with_capacity(opts.orders.len());
    for &order in &opts.orders {
        let taylor = taylor_coeffs(&kernel, center, order);
        let cheb = chebyshev_coeffs(&kernel, order, lambda_max)?;
        let mut taylor_error: f64 = 0.0;
        let mut chebyshev_error: f64 = 0.0;
        for x in &signals {
            let exact = wavelet_apply(&basis, &wk, x)?;
            let tv = polynomial_filter_vertex(&lap, &taylor, x)?;
            let cv = polynomial_filter_vertex(&lap, &cheb, x)?;
            for i in 0..opts.n {
                taylor_error = taylor_error.max((tv[i] - exact[i]).abs());
                chebyshev_error = chebyshev_error.max((cv[i] - exact[i]).abs());
            }
        }
        rows.push(ApproxRow {
            order,
            taylor_error,
            chebyshev_error,
        });
    }
    println!("order,taylor_error,chebyshev_error");
    for row in &rows {
        println!("{},{:e},{:e}", row.order, row.taylor_error, row.chebyshev_error);
    }
    Ok(rows)
}

/// Options for `tgcn sweep-alpha`.
#[derive(Clone, Debug)]
pub struct SweepOpts {
    pub dataset: PathBuf,
    pub grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub prop: String,
    pub split: String,
    pub split_seed: u64,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub dropout: f64,
    pub weight_decay: f64,
    pub layers: usize,
    pub no_normalize: bool,
    pub out: Option<PathBuf>,
}

/// Grid sweep over fixed alphas for a 2-layer (or 1-layer) tgcn1.
pub fn run_sweep_alpha(opts: &SweepOpts) -> Result<Vec<train::SweepRow>> {
    let kind = ReprKind::parse(&opts.prop)?;
    let ratio = SplitRatio::parse(&opts.split)?;
    let dataset = load_prepared_dataset(&opts.dataset, !opts.no_normalize)?;
    let split = make_splits(dataset.n(), ratio, opts.split_seed)?;
    let mut template = ModelConfig::node_classifier(
        ModelKind::Tgcn1,
        opts.layers,
        1,
        dataset.num_features(),
        opts.hidden,
        dataset.num_classes,
        false,
    )?;
    template.dropout = opts.dropout;
    template.lr = opts.lr;
    template.weight_decay = opts.weight_decay;
    template.epochs = opts.epochs;

    // fan grid points out across workers; each row trains its seeds serially
    let grid_jobs: Vec<f64> = opts.grid.clone();
    let rows: Vec<train::SweepRow> = parallel_map(&grid_jobs, |&alpha| {
        let sub = alpha_sweep(&template, &dataset, &split, kind, &[alpha], &opts.seeds)?;
        Ok(sub.into_iter().next().expect("one row per grid point"))
    })?;

    let mut csv = String::from("alpha,mean_val_acc,std_val_acc\n");
    for row in &rows {
        csv.push_str(&format!("{},{},{}\n", row.alpha, row.mean_val_acc, row.std_val_acc));
    }
    match &opts.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    Ok(rows)
}

/// Options for `tgcn gen-sbm`.
#[derive(Clone, Debug)]
pub struct GenSbmOpts {
    pub n: usize,
    pub blocks: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seeds_per_block: usize,
    pub seed: u64,
    pub name: String,
    pub out: PathBuf,
}

/// Generate an SBM dataset directory.
pub fn run_gen_sbm(opts: &GenSbmOpts) -> Result<Dataset> {
    let params = SbmParams {
        n: opts.n,
        blocks: opts.blocks,
        p_in: opts.p_in,
        p_out: opts.p_out,
        seeds_per_block: opts.seeds_per_block,
    };
    let (graph, labels, features) = sbm_generate(&params, opts.seed)?;
    let ds = Dataset {
        graph,
        features,
        labels,
        num_classes: opts.blocks,
        name: opts.name.clone(),
        class_names: None,
    };
    save_dataset(&ds, &opts.out)?;
    println!(
        "wrote {} ({} nodes, {} edges, {} blocks) to {}",
        opts.name,
        ds.n(),
        ds.graph.edge_count(),
        opts.blocks,
        opts.out.display()
    );
    Ok(ds)
}

/// Options for `tgcn import-cloud`.
#[derive(Clone, Debug)]
pub struct ImportCloudOpts {
    pub points: PathBuf,
    pub k: usize,
    pub name: String,
    pub out: PathBuf,
}

/// Turn an `x y z label` point cloud into a dataset directory via a kNN
/// graph (k = 20 by default); features are the raw coordinates.
pub fn run_import_cloud(opts: &ImportCloudOpts) -> Result<Dataset> {
    let (points, labels) = load_point_cloud(&opts.points)?;
    let graph = knn_graph(&points, opts.k)?;
    let num_classes = labels.iter().copied().max().map(|m| m + 1).unwrap_or(0);
    let ds = Dataset {
        graph,
        features: points,
        labels,
        num_classes,
        name: opts.name.clone(),
        class_names: None,
    };
    save_dataset(&ds, &opts.out)?;
    println!(
        "wrote {} ({} points, {} edges, k = {}) to {}",
        opts.name,
        ds.n(),
        ds.graph.edge_count(),
        opts.k,
        opts.out.display()
    );
    Ok(ds)
}

/// Options for `tgcn eval`.
#[derive(Clone, Debug)]
pub struct EvalOpts {
    pub model_file: PathBuf,
    pub dataset: PathBuf,
    pub split_name: String,
    pub split: Option<String>,
    pub split_seed: u64,
}

/// Load a saved model and report accuracy on one named split. The split
/// comes from `--split`/`--split-seed` when given, otherwise from the
/// dataset's splits.json.
pub fn run_eval(opts: &EvalOpts) -> Result<f64> {
    let text = std::fs::read_to_string(&opts.model_file)?;
    let model: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: {e}", opts.model_file.display())))?;
    let dataset = load_prepared_dataset(&opts.dataset, model.normalize_features)?;

    let split = match &opts.split {
        Some(tag) => make_splits(dataset.n(), SplitRatio::parse(tag)?, opts.split_seed)?,
        None => load_splits(&opts.dataset)?.ok_or_else(|| {
            Error::Data(format!(
                "{} has no splits.json; pass --split/--split-seed",
                opts.dataset.display()
            ))
        })?,
    };
    split.validate(dataset.n())?;
    let idx = match opts.split_name.as_str() {
        "train" => &split.train,
        "val" => &split.val,
        "test" => &split.test,
        other => {
            return Err(Error::Config(format!(
                "unknown split name '{other}' (expected train|val|test)"
            )))
        }
    };
    let p = crate::prop::build_representation(&dataset.graph, model.prop)?;
    let acc = evaluate(
        &model.config,
        &model.params,
        &p,
        &dataset.features,
        &dataset.labels,
        idx,
    )?;
    println!("{} accuracy: {:.4}", opts.split_name, acc);
    Ok(acc)
}

/// Exit code for an error, per the CLI contract.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Data(_) | Error::Io(_) => 3,
        Error::Numerical(_) => 4,
    }
}
