//! Acceptance suite: one test per criterion, each printing a PASS/SKIP line
//! (run with `cargo test --test acceptance -- --nocapture` to see them).

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;

use tgcn_core::data::{make_splits, Dataset, SplitRatio, SplitSpec};
use tgcn_core::graph::{build_graph, sbm_generate, Graph, SbmParams};
use tgcn_core::layers::{propagate, LayerParams, LayerSpec, ModelKind};
use tgcn_core::mat::Mat;
use tgcn_core::prop::{build_representation, ReprKind};
use tgcn_core::rng;
use tgcn_core::spectral::{
    chebyshev_coeffs, eigendecompose, polynomial_filter_spectral, polynomial_filter_vertex,
    taylor_coeffs, wavelet_apply, Kernel, PolynomialCoeffs, Scheme, WaveletKernel,
};
use tgcn_core::train::{
    self, backward, forward_cached, forward_with_masks, mean, objective, train, ModelConfig,
    ParamStore,
};

fn random_symmetric(n: usize, seed: u64) -> Mat {
    let mut r = rng::stream(seed, 0);
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = r.random_range(-1.0..1.0);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    m
}

/// Criterion 1: spectral and vertex polynomial filters agree to 1e-8 on 50
/// random symmetric matrices (n <= 50), degree <= 5, random signals, < 10 s.
#[test]
fn criterion_1_spectral_vertex_equivalence() {
    let t0 = Instant::now();
    let mut max_err: f64 = 0.0;
    for trial in 0..50u64 {
        let mut r = rng::stream(1000 + trial, 1);
        let n = 5 + (trial as usize * 7) % 46; // spread over 5..=50
        let m = random_symmetric(n, trial);
        let basis = eigendecompose(&m).unwrap();
        let degree = (trial as usize) % 6;
        let coeffs = PolynomialCoeffs {
            theta: (0..=degree).map(|_| r.random_range(-1.0..1.0)).collect(),
            scheme: Scheme::Taylor {
                center: r.random_range(-0.5..0.5),
            },
        };
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let vertex = polynomial_filter_vertex(&m, &coeffs, &x).unwrap();
        let spectral = polynomial_filter_spectral(&basis, &coeffs, &x).unwrap();
        for (a, b) in vertex.iter().zip(&spectral) {
            max_err = max_err.max((a - b).abs());
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(max_err <= 1e-8, "max error {max_err:.3e}");
    assert!(elapsed < 10.0, "took {elapsed:.1}s");
    println!(
        "[criterion 1] PASS  spectral-vertex equivalence: max err {max_err:.3e} over 50 trials ({elapsed:.2}s)"
    );
}

fn gradient_fixture() -> (Dataset, SplitSpec) {
    let (graph, labels, _) = sbm_generate(
        &SbmParams {
            n: 10,
            blocks: 2,
            p_in: 0.8,
            p_out: 0.2,
            seeds_per_block: 2,
        },
        99,
    )
    .unwrap();
    let mut r = rng::stream(42, 0);
    let features = Mat::from_fn(10, 3, |_, _| r.random_range(-1.0..1.0));
    let ds = Dataset {
        graph,
        features,
        labels,
        num_classes: 2,
        name: "grad-fixture".into(),
        class_names: None,
    };
    let split = SplitSpec {
        train: vec![0, 2, 5, 7, 9],
        val: vec![1, 6],
        test: vec![3, 4, 8],
        seed: 0,
        ratio: None,
    };
    (ds, split)
}

/// Max relative finite-difference error over every trainable slot of one
/// configuration.
fn max_fd_error(config: &ModelConfig) -> f64 {
    let (ds, split) = gradient_fixture();
    let p = build_representation(&ds.graph, ReprKind::SymNormSelfLoop).unwrap();
    let mut params = ParamStore::init(config, ds.n());
    for lp in params.layers.iter_mut() {
        for (i, b) in lp.beta.iter_mut().enumerate() {
            *b = 0.05 * (i as f64 - 2.0) / 10.0;
        }
    }
    let mut rng_stream = rng::stream(1, 3);
    let (_, cache) =
        forward_cached(config, &params, &p, &ds.features, true, &mut rng_stream).unwrap();
    let analytic = backward(config, &params, &p, &cache, &ds.labels, &split.train).unwrap();

    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut check = |analytic_g: f64, set: &mut dyn FnMut(&mut ParamStore, f64)| {
        let mut probe = |delta: f64| {
            let mut perturbed = params.clone();
            set(&mut perturbed, delta);
            let z = forward_with_masks(config, &perturbed, &p, &ds.features, cache_masks(&cache))
                .unwrap();
            objective(config, &perturbed, &z, &ds.labels, &split.train).unwrap()
        };
        let fd = (probe(h) - probe(-h)) / (2.0 * h);
        let denom = analytic_g.abs().max(fd.abs()).max(1.0);
        worst = worst.max((analytic_g - fd).abs() / denom);
    };

    for l in 0..config.layer_specs.len() {
        let spec = config.layer_specs[l];
        if spec.model.has_alpha() && spec.alpha_trainable {
            check(analytic.layers[l].alpha, &mut |ps, d| ps.layers[l].alpha += d);
        }
        for i in 0..params.layers[l].beta.len() {
            check(analytic.layers[l].beta[i], &mut |ps, d| {
                ps.layers[l].beta[i] += d
            });
        }
        for j in 0..params.layers[l].theta.len() {
            for idx in 0..params.layers[l].theta[j].data().len() {
                check(analytic.layers[l].theta[j].data()[idx], &mut |ps, d| {
                    ps.layers[l].theta[j].data_mut()[idx] += d
                });
            }
        }
    }
    worst
}

fn cache_masks(cache: &train::ForwardCache) -> &[Option<Mat>] {
    cache.masks()
}

/// Criterion 2: finite-difference gradient agreement <= 1e-5 relative error
/// for every parameter class across the 5 model types and K in {1,2,3}, < 30 s.
#[test]
fn criterion_2_gradient_oracle() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut cases = 0usize;
    let mut run = |config: ModelConfig| {
        let e = max_fd_error(&config);
        worst = worst.max(e);
        cases += 1;
    };
    let mk = |model, layers, order, trainable| {
        let mut c =
            ModelConfig::node_classifier(model, layers, order, 3, 4, 2, trainable).unwrap();
        c.dropout = 0.5;
        c.seed = 7;
        if !trainable {
            c.alpha_init = 0.3;
        }
        c
    };
    for model in [ModelKind::Gcn, ModelKind::Tgcn1, ModelKind::Tgcn2] {
        run(mk(model, 2, 1, false));
    }
    run(mk(ModelKind::Tgcn1, 2, 1, true));
    for model in [ModelKind::Tgcn3, ModelKind::Tgcn4] {
        for order in [1, 2, 3] {
            run(mk(model, 2, order, false));
            run(mk(model, 1, order, true));
        }
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(worst <= 1e-5, "worst relative error {worst:.3e}");
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
    println!(
        "[criterion 2] PASS  gradient oracle: worst rel err {worst:.3e} over {cases} configurations ({elapsed:.2}s)"
    );
}

/// Criterion 3: gcn == tgcn1(alpha=0) == tgcn2(beta=0) exactly, and the
/// linear-stack containment holds within 1e-10.
#[test]
fn criterion_3_layer_reduction_identities() {
    let g = build_graph(&[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 4), (4, 5)], 6).unwrap();
    let p = build_representation(&g, ReprKind::SymNormSelfLoop).unwrap();
    let mut r = rng::stream(12, 0);
    let x = Mat::from_fn(6, 3, |_, _| r.random_range(-1.0..1.0));
    let theta = Mat::from_fn(3, 2, |_, _| r.random_range(-1.0..1.0));

    let spec = |model| LayerSpec {
        model,
        order: 1,
        in_dim: 3,
        out_dim: 2,
        alpha_trainable: false,
    };
    let gcn = propagate(
        &spec(ModelKind::Gcn),
        &LayerParams {
            theta: vec![theta.clone()],
            alpha: 0.0,
            beta: Vec::new(),
        },
        &p,
        &x,
    )
    .unwrap();
    let t1 = propagate(
        &spec(ModelKind::Tgcn1),
        &LayerParams {
            theta: vec![theta.clone()],
            alpha: 0.0,
            beta: Vec::new(),
        },
        &p,
        &x,
    )
    .unwrap();
    let t2 = propagate(
        &spec(ModelKind::Tgcn2),
        &LayerParams {
            theta: vec![theta.clone()],
            alpha: 0.0,
            beta: vec![0.0; 6],
        },
        &p,
        &x,
    )
    .unwrap();
    assert_eq!(gcn, t1, "gcn != tgcn1(alpha=0)");
    assert_eq!(gcn, t2, "gcn != tgcn2(beta=0)");

    // linear-stack containment: k tgcn2 layers sharing beta == single
    // Q^k X Theta' term
    let beta: Vec<f64> = (0..6).map(|i| 0.06 * i as f64 - 0.2).collect();
    let thetas: Vec<Mat> = (0..3)
        .map(|_| Mat::from_fn(3, 3, |_, _| r.random_range(-1.0..1.0)))
        .collect();
    let mut cur = Mat::from_fn(6, 3, |_, _| r.random_range(-1.0..1.0));
    let x0 = cur.clone();
    for theta_l in &thetas {
        cur = propagate(
            &LayerSpec {
                model: ModelKind::Tgcn2,
                order: 1,
                in_dim: 3,
                out_dim: 3,
                alpha_trainable: false,
            },
            &LayerParams {
                theta: vec![theta_l.clone()],
                alpha: 0.0,
                beta: beta.clone(),
            },
            &p,
            &cur,
        )
        .unwrap();
    }
    let mut q = p.to_dense();
    for i in 0..6 {
        q[(i, i)] += beta[i];
    }
    let theta_prod = thetas[0]
        .matmul(&thetas[1])
        .unwrap()
        .matmul(&thetas[2])
        .unwrap();
    let want = q
        .matmul(&q)
        .unwrap()
        .matmul(&q)
        .unwrap()
        .matmul(&x0)
        .unwrap()
        .matmul(&theta_prod)
        .unwrap();
    let diff = cur.max_abs_diff(&want);
    assert!(diff <= 1e-10, "containment diff {diff:.3e}");
    println!("[criterion 3] PASS  reduction identities exact; containment diff {diff:.3e}");
}

fn cora_dir() -> Option<PathBuf> {
    if let Ok(dir) = std::env::var("TGCN_CORA_DIR") {
        let p = PathBuf::from(dir);
        if p.join("meta.json").exists() {
            return Some(p);
        }
    }
    let fallback = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/cora");
    if fallback.join("meta.json").exists() {
        return Some(fallback);
    }
    None
}

/// Criterion 4: Cora reproduction (skipped with a warning when no converted
/// Cora directory is available).
#[test]
fn criterion_4_cora_reproduction() {
    let Some(dir) = cora_dir() else {
        println!(
            "[criterion 4] SKIP  warning: no Cora directory (set TGCN_CORA_DIR or place data/cora); \
             cannot check the paper-scale accuracy bands"
        );
        return;
    };
    let ds = {
        let mut d = tgcn_core::data::load_dataset(&dir).unwrap();
        d.features = tgcn_core::data::row_normalize_features(&d.features);
        d
    };
    let seeds: Vec<u64> = (0..10).collect();
    let run_model = |model: ModelKind| -> f64 {
        let accs: Vec<f64> = seeds
            .iter()
            .map(|&seed| {
                let mut config = ModelConfig::node_classifier(
                    model,
                    2,
                    1,
                    ds.num_features(),
                    train::DEFAULT_HIDDEN,
                    ds.num_classes,
                    false,
                )
                .unwrap();
                config.seed = seed;
                let split = make_splits(ds.n(), SplitRatio::TenThirtySixty, seed).unwrap();
                let (_, metrics) = train(&config, &ds, &split, ReprKind::SymNormSelfLoop).unwrap();
                metrics.test_acc
            })
            .collect();
        mean(&accs)
    };
    let tgcn2_mean = run_model(ModelKind::Tgcn2);
    let gcn_mean = run_model(ModelKind::Gcn);
    assert!(tgcn2_mean >= 0.78, "Type-2 mean {tgcn2_mean:.4} < 0.78");
    assert!(gcn_mean >= 0.76, "GCN mean {gcn_mean:.4} < 0.76");
    assert!(
        tgcn2_mean >= gcn_mean,
        "Type-2 {tgcn2_mean:.4} < GCN {gcn_mean:.4}"
    );
    println!(
        "[criterion 4] PASS  Cora: Type-2 mean {tgcn2_mean:.4} (>= 0.78), GCN mean {gcn_mean:.4} (>= 0.76)"
    );
}

/// Criterion 5: alpha-sweep shape on Cora for Type-1 (skipped without Cora).
#[test]
fn criterion_5_alpha_sweep_shape() {
    let Some(dir) = cora_dir() else {
        println!(
            "[criterion 5] SKIP  warning: no Cora directory (set TGCN_CORA_DIR or place data/cora); \
             cannot check the alpha-sweep band"
        );
        return;
    };
    let ds = {
        let mut d = tgcn_core::data::load_dataset(&dir).unwrap();
        d.features = tgcn_core::data::row_normalize_features(&d.features);
        d
    };
    let split = make_splits(ds.n(), SplitRatio::TenThirtySixty, 0).unwrap();
    let template = ModelConfig::node_classifier(
        ModelKind::Tgcn1,
        2,
        1,
        ds.num_features(),
        train::DEFAULT_HIDDEN,
        ds.num_classes,
        false,
    )
    .unwrap();
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let rows = train::alpha_sweep(
        &template,
        &ds,
        &split,
        ReprKind::SymNormSelfLoop,
        &grid,
        &[0, 1, 2],
    )
    .unwrap();
    let best = rows
        .iter()
        .max_by(|a, b| a.mean_val_acc.partial_cmp(&b.mean_val_acc).unwrap())
        .unwrap();
    let at_zero = rows
        .iter()
        .find(|r| r.alpha == 0.0)
        .expect("grid includes 0");
    assert!(
        best.alpha >= 0.1 && best.alpha <= 0.4,
        "best alpha {} outside [0.1, 0.4]",
        best.alpha
    );
    assert!(
        best.mean_val_acc - at_zero.mean_val_acc >= 0.003,
        "best {:.4} does not exceed alpha=0 {:.4} by 0.3 points",
        best.mean_val_acc,
        at_zero.mean_val_acc
    );
    println!(
        "[criterion 5] PASS  alpha sweep: best alpha {} (val {:.4}) vs alpha=0 ({:.4})",
        best.alpha, best.mean_val_acc, at_zero.mean_val_acc
    );
}

/// Fixed 12-node graph for the approximation criterion: a cycle with two
/// chords, so the Laplacian spectrum stays moderate.
fn fixed_12_node_laplacian() -> Mat {
    let mut edges: Vec<(usize, usize)> = (0..12).map(|i| (i, (i + 1) % 12)).collect();
    edges.push((0, 6));
    edges.push((3, 9));
    let g = build_graph(&edges, 12).unwrap();
    let a = g.adjacency_dense();
    Mat::from_fn(12, 12, |i, j| {
        if i == j {
            g.degree(i) as f64
        } else {
            -a.get(i, j)
        }
    })
}

/// Criterion 6: Taylor and Chebyshev heat-kernel errors at K=5 strictly
/// below K=1; Chebyshev at K=10 within 1e-6 of exact. Runtime < 5 s.
#[test]
fn criterion_6_kernel_approximation_convergence() {
    let t0 = Instant::now();
    let lap = fixed_12_node_laplacian();
    let basis = eigendecompose(&lap).unwrap();
    let kernel = Kernel::Heat { t: 1.0 };
    let wk = WaveletKernel::Closed(kernel.clone());
    let center = mean(basis.values());
    let lambda_max = basis.lambda_max();

    let mut r = rng::stream(66, 0);
    let signals: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..12).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();

    let error_at = |coeffs: &PolynomialCoeffs| -> f64 {
        let mut worst: f64 = 0.0;
        for x in &signals {
            let exact = wavelet_apply(&basis, &wk, x).unwrap();
            let approx = polynomial_filter_vertex(&lap, coeffs, x).unwrap();
            for (a, b) in approx.iter().zip(&exact) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    };

    let taylor_1 = error_at(&taylor_coeffs(&kernel, center, 1));
    let taylor_5 = error_at(&taylor_coeffs(&kernel, center, 5));
    let cheb_1 = error_at(&chebyshev_coeffs(&kernel, 1, lambda_max).unwrap());
    let cheb_5 = error_at(&chebyshev_coeffs(&kernel, 5, lambda_max).unwrap());
    let cheb_10 = error_at(&chebyshev_coeffs(&kernel, 10, lambda_max).unwrap());

    assert!(taylor_5 < taylor_1, "taylor {taylor_5:.3e} !< {taylor_1:.3e}");
    assert!(cheb_5 < cheb_1, "chebyshev {cheb_5:.3e} !< {cheb_1:.3e}");
    assert!(cheb_10 <= 1e-6, "chebyshev K=10 error {cheb_10:.3e} > 1e-6");
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.1}s");
    println!(
        "[criterion 6] PASS  heat-kernel convergence: taylor {taylor_1:.2e}->{taylor_5:.2e}, \
         chebyshev {cheb_1:.2e}->{cheb_5:.2e}, K=10 {cheb_10:.2e} ({elapsed:.2}s)"
    );
}

/// Plain label propagation: clamped train labels, averaged neighbor
/// distributions, argmax prediction. Independent of the training engine.
fn label_propagation_accuracy(
    graph: &Graph,
    labels: &[usize],
    num_classes: usize,
    train_idx: &[usize],
    test_idx: &[usize],
) -> f64 {
    let n = graph.node_count();
    let mut f = vec![vec![0.0f64; num_classes]; n];
    for &i in train_idx {
        f[i][labels[i]] = 1.0;
    }
    for _ in 0..100 {
        let mut next = vec![vec![0.0f64; num_classes]; n];
        for i in 0..n {
            let nbrs = graph.neighbors(i);
            if nbrs.is_empty() {
                next[i] = f[i].clone();
                continue;
            }
            for &j in nbrs {
                for c in 0..num_classes {
                    next[i][c] += f[j][c];
                }
            }
            for c in 0..num_classes {
                next[i][c] /= nbrs.len() as f64;
            }
        }
        for &i in train_idx {
            next[i] = vec![0.0; num_classes];
            next[i][labels[i]] = 1.0;
        }
        f = next;
    }
    let hits = test_idx
        .iter()
        .filter(|&&i| {
            let row = &f[i];
            let mut best = 0;
            for c in 1..num_classes {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best == labels[i]
        })
        .count();
    hits as f64 / test_idx.len() as f64
}

/// Criterion 7: two-block SBM sanity — 2-layer Type-2 reaches >= 0.95 mean
/// test accuracy over 5 seeds, cross-checked by a label-propagation oracle.
#[test]
fn criterion_7_sbm_sanity() {
    let mut model_accs = Vec::new();
    let mut oracle_accs = Vec::new();
    for seed in 0..5u64 {
        let (graph, labels, features) = sbm_generate(
            &SbmParams {
                n: 200,
                blocks: 2,
                p_in: 0.9,
                p_out: 0.05,
                seeds_per_block: 10,
            },
            seed,
        )
        .unwrap();
        let ds = Dataset {
            graph,
            features,
            labels,
            num_classes: 2,
            name: format!("sbm-{seed}"),
            class_names: None,
        };
        let split = make_splits(200, SplitRatio::TenThirtySixty, seed).unwrap();
        let mut config =
            ModelConfig::node_classifier(ModelKind::Tgcn2, 2, 1, 2, train::DEFAULT_HIDDEN, 2, false)
                .unwrap();
        config.seed = seed;
        let (_, metrics) = train(&config, &ds, &split, ReprKind::SymNormSelfLoop).unwrap();
        model_accs.push(metrics.test_acc);
        oracle_accs.push(label_propagation_accuracy(
            &ds.graph,
            &ds.labels,
            2,
            &split.train,
            &split.test,
        ));
    }
    let model_mean = mean(&model_accs);
    let oracle_mean = mean(&oracle_accs);
    assert!(
        oracle_mean >= 0.95,
        "label-propagation oracle mean {oracle_mean:.4} < 0.95 — instances not near-separable"
    );
    assert!(model_mean >= 0.95, "Type-2 mean {model_mean:.4} < 0.95");
    println!(
        "[criterion 7] PASS  SBM sanity: Type-2 mean {model_mean:.4}, label-prop oracle {oracle_mean:.4} over 5 seeds"
    );
}

/// Criterion 8: identical flags + --deterministic produce byte-identical
/// metrics files once wall-clock fields are zeroed.
#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let ds_dir = dir.path().join("ds");
    tgcn_core::cli::run_gen_sbm(&tgcn_core::cli::GenSbmOpts {
        n: 60,
        blocks: 2,
        p_in: 0.8,
        p_out: 0.05,
        seeds_per_block: 4,
        seed: 5,
        name: "det".into(),
        out: ds_dir.clone(),
    })
    .unwrap();

    let run = |out: PathBuf| {
        tgcn_core::cli::run_train(&tgcn_core::cli::TrainOpts {
            dataset: ds_dir.clone(),
            model: "tgcn2".into(),
            order: 1,
            prop: "sym".into(),
            alpha: None,
            auto_alpha: false,
            hidden: 8,
            epochs: 30,
            lr: 0.01,
            dropout: 0.5,
            weight_decay: 5e-4,
            layers: 2,
            seeds: vec![1, 2],
            split: "10/30/60".into(),
            split_seed: 0,
            resplit_per_seed: false,
            no_normalize: false,
            out: out.clone(),
            save_model: None,
            deterministic: true,
        })
        .unwrap();
        out
    };
    let f1 = run(dir.path().join("m1.json"));
    let f2 = run(dir.path().join("m2.json"));

    let normalize = |path: &PathBuf| -> Vec<u8> {
        let text = std::fs::read_to_string(path).unwrap();
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        for run in value["runs"].as_array_mut().unwrap() {
            for epoch in run["epochs"].as_array_mut().unwrap() {
                epoch["ms"] = serde_json::json!(0.0);
            }
        }
        serde_json::to_vec_pretty(&value).unwrap()
    };
    assert_eq!(
        normalize(&f1),
        normalize(&f2),
        "metrics differ beyond wall-clock fields"
    );
    println!("[criterion 8] PASS  determinism: two runs byte-identical after zeroing ms fields");
}
