//! Property tests for the structural invariants: representation formulas,
//! spectral radius bounds, permutation invariance, transform round trips.

use proptest::prelude::*;

use tgcn_core::graph::{build_graph, knn_graph, sbm_generate, Graph, SbmParams};
use tgcn_core::mat::Mat;
use tgcn_core::prop::{build_representation, spmm, ReprKind};
use tgcn_core::rng;
use tgcn_core::spectral::{
    eigendecompose, polynomial_filter_spectral, polynomial_filter_vertex, PolynomialCoeffs, Scheme,
};

/// Deterministic Erdos-Renyi-style graph from (n, seed).
fn seeded_graph(n: usize, seed: u64, p: f64) -> Graph {
    let mut edges = Vec::new();
    let mut counter = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if rng::coin(seed, counter, p) {
                edges.push((i, j));
            }
            counter += 1;
        }
    }
    build_graph(&edges, n).unwrap()
}

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..20, any::<u64>(), 0.1f64..0.6).prop_map(|(n, seed, p)| seeded_graph(n, seed, p))
}

/// Naive dense construction of each representation kind.
fn dense_oracle(g: &Graph, kind: ReprKind) -> Mat {
    let n = g.node_count();
    let a = g.adjacency_dense();
    match kind {
        ReprKind::RawAdjacency => a,
        ReprKind::RandomWalk => Mat::from_fn(n, n, |i, j| {
            let d = g.degree(i);
            if d == 0 {
                0.0
            } else {
                a.get(i, j) / d as f64
            }
        }),
        ReprKind::SymNormSelfLoop => Mat::from_fn(n, n, |i, j| {
            let a_tilde = a.get(i, j) + if i == j { 1.0 } else { 0.0 };
            a_tilde / (((g.degree(i) + 1) as f64).sqrt() * ((g.degree(j) + 1) as f64).sqrt())
        }),
        ReprKind::PersonalizedPageRank => {
            let sym = dense_oracle(g, ReprKind::SymNormSelfLoop);
            let mut system = sym.scale(-0.9);
            for i in 0..n {
                system[(i, i)] += 1.0;
            }
            system.solve(&Mat::identity(n).scale(0.1)).unwrap()
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn representations_match_dense_formulas(g in graph_strategy()) {
        for kind in [
            ReprKind::RawAdjacency,
            ReprKind::RandomWalk,
            ReprKind::SymNormSelfLoop,
            ReprKind::PersonalizedPageRank,
        ] {
            let built = build_representation(&g, kind).unwrap().to_dense();
            let oracle = dense_oracle(&g, kind);
            let diff = built.max_abs_diff(&oracle);
            prop_assert!(diff <= 1e-12, "{kind:?} diff {diff:.3e}");
        }
    }

    #[test]
    fn sym_selfloop_spectral_radius_at_most_one(g in graph_strategy()) {
        let sym = build_representation(&g, ReprKind::SymNormSelfLoop).unwrap().to_dense();
        let basis = eigendecompose(&sym).unwrap();
        for &l in basis.values() {
            prop_assert!(l.abs() <= 1.0 + 1e-10, "eigenvalue {l}");
        }
    }

    #[test]
    fn spmm_matches_dense_multiply(g in graph_strategy(), seed in any::<u64>()) {
        let p = build_representation(&g, ReprKind::RandomWalk).unwrap();
        let n = g.node_count();
        let mut r = rng::stream(seed, 0);
        use rand::Rng;
        let x = Mat::from_fn(n, 3, |_, _| r.random_range(-1.0..1.0));
        let fast = spmm(&p, &x).unwrap();
        let slow = p.to_dense().matmul(&x).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) <= 1e-12);
    }

    #[test]
    fn theorem_equivalence_on_graph_adjacency(g in graph_strategy(), seed in any::<u64>()) {
        let a = g.adjacency_dense();
        let basis = eigendecompose(&a).unwrap();
        let n = g.node_count();
        let mut r = rng::stream(seed, 1);
        use rand::Rng;
        let coeffs = PolynomialCoeffs {
            theta: (0..=4).map(|_| r.random_range(-1.0..1.0)).collect(),
            scheme: Scheme::Taylor { center: r.random_range(-0.5..0.5) },
        };
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let vertex = polynomial_filter_vertex(&a, &coeffs, &x).unwrap();
        let spectral = polynomial_filter_spectral(&basis, &coeffs, &x).unwrap();
        for (v, s) in vertex.iter().zip(&spectral) {
            prop_assert!((v - s).abs() <= 1e-8);
        }
    }

    #[test]
    fn gft_round_trip(g in graph_strategy(), seed in any::<u64>()) {
        let a = g.adjacency_dense();
        let basis = eigendecompose(&a).unwrap();
        let mut r = rng::stream(seed, 2);
        use rand::Rng;
        let x: Vec<f64> = (0..g.node_count()).map(|_| r.random_range(-3.0..3.0)).collect();
        let back = basis.igft(&basis.gft(&x).unwrap()).unwrap();
        for (b, o) in back.iter().zip(&x) {
            prop_assert!((b - o).abs() <= 1e-10);
        }
    }

    #[test]
    fn knn_is_invariant_under_point_permutation(
        n in 5usize..14,
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        prop_assume!(k < n);
        let mut r = rng::stream(seed, 3);
        use rand::Rng;
        let pts = Mat::from_fn(n, 3, |_, _| r.random_range(-5.0..5.0));
        let base = knn_graph(&pts, k).unwrap();

        let mut pi: Vec<usize> = (0..n).collect();
        rng::shuffle(&mut pi, seed);
        let permuted = Mat::from_fn(n, 3, |i, j| pts.get(pi[i], j));
        let re = knn_graph(&permuted, k).unwrap();
        let mut mapped: Vec<(usize, usize)> = re
            .edges()
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (pi[u], pi[v]);
                (a.min(b), a.max(b))
            })
            .collect();
        mapped.sort_unstable();
        prop_assert_eq!(mapped, base.edges());
    }

    #[test]
    fn sbm_is_reproducible_and_labels_partition(
        n in 6usize..40,
        blocks in 2usize..4,
        seed in any::<u64>(),
    ) {
        prop_assume!(blocks <= n);
        let params = SbmParams {
            n,
            blocks,
            p_in: 0.7,
            p_out: 0.1,
            seeds_per_block: 1,
        };
        let (g1, l1, f1) = sbm_generate(&params, seed).unwrap();
        let (g2, l2, f2) = sbm_generate(&params, seed).unwrap();
        prop_assert_eq!(&g1, &g2);
        prop_assert_eq!(&l1, &l2);
        prop_assert_eq!(&f1, &f2);
        // block sizes differ by at most one
        let mut counts = vec![0usize; blocks];
        for &l in &l1 {
            counts[l] += 1;
        }
        let max = counts.iter().max().unwrap();
        let min = counts.iter().min().unwrap();
        prop_assert!(max - min <= 1);
    }
}
