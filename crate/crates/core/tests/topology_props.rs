use lazydual::topology::{
    accelerated_gossip, apply_pk, build_graph, chebyshev_plan, pk_matrix, spectrum, GossipMatrix, GraphKind,
};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Chebyshev polynomial by its trigonometric/hyperbolic closed form.
fn cheb(k: usize, x: f64) -> f64 {
    let k = k as f64;
    if x.abs() <= 1.0 {
        (k * x.acos()).cos()
    } else if x > 1.0 {
        (k * x.acosh()).cosh()
    } else {
        let s = if (k as i64) % 2 == 0 { 1.0 } else { -1.0 };
        s * (k * (-x).acosh()).cosh()
    }
}

/// `P_K(U)` through the eigendecomposition of `U`.
fn pk_by_spectral_calculus(u: &DMatrix<f64>, k: usize, c2: f64, c3: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(u.clone());
    let vals = eig.eigenvalues.map(|l| 1.0 - cheb(k, c2 * (1.0 - c3 * l)) / cheb(k, c2));
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

fn kind_strategy() -> impl Strategy<Value = GraphKind> {
    prop_oneof![
        (2usize..8, 2usize..8).prop_map(|(rows, cols)| GraphKind::Grid2d { rows, cols }),
        (2usize..50).prop_map(|n| GraphKind::Path { n }),
        (3usize..12).prop_map(|n| GraphKind::Complete { n }),
        // well above the connectivity threshold ln(n)/n
        (3usize..50, 1.5f64..4.0, 0u64..1000).prop_map(|(n, f, seed)| {
            let p = (f * (n as f64).ln() / n as f64).min(1.0);
            GraphKind::ErdosRenyi { n, p, seed }
        }),
    ]
}

fn random_z(d: usize, n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0))
}

#[test]
fn polynomial_matches_spectral_oracle() {
    for n in [5, 10, 20, 40] {
        let g = build_graph(&GraphKind::Path { n }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        let oracle = pk_by_spectral_calculus(gm.matrix(), plan.k, plan.c2, plan.c3);
        let ours = pk_matrix(&plan, &gm);
        assert!((ours - oracle).amax() < 1e-10, "n = {n}");
    }
}

#[test]
fn path10_pk_gap_at_least_quarter() {
    let g = build_graph(&GraphKind::Path { n: 10 }).unwrap();
    let gm = GossipMatrix::metropolis(&g).unwrap();
    let plan = chebyshev_plan(&gm);
    assert!(plan.k >= 2);
    let zeta = spectrum(&pk_matrix(&plan, &gm)).unwrap().zeta;
    assert!(zeta >= 0.25, "ζ(P_K(U)) = {zeta}");
}

#[test]
fn apply_pk_matches_iteration_path3() {
    let g = build_graph(&GraphKind::Path { n: 3 }).unwrap();
    let gm = GossipMatrix::metropolis(&g).unwrap();
    let plan = chebyshev_plan(&gm);
    let z = random_z(2, 3, 1);
    let a = apply_pk(&z, &plan, &gm).unwrap();
    let b = accelerated_gossip(&z, &gm, &plan, None).unwrap();
    assert!((&a - &b).amax() <= 1e-10 * a.amax().max(1e-300));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gossip_matrix_invariants(kind in kind_strategy(), metropolis in any::<bool>()) {
        let g = build_graph(&kind).unwrap();
        let gm = if metropolis { GossipMatrix::metropolis(&g) } else { GossipMatrix::max_degree(&g) }.unwrap();
        let u = gm.matrix();
        prop_assert!((u - u.transpose()).amax() <= 1e-12);
        let ones = DMatrix::from_element(g.n(), 1, 1.0);
        prop_assert!((u * ones).amax() <= 1e-12);
        let min_eig = SymmetricEigen::new(u.clone()).eigenvalues.min();
        prop_assert!(min_eig >= -1e-10);
        prop_assert!(gm.zeta() > 0.0 && gm.zeta() <= 1.0 + 1e-12);
        for i in 0..g.n() {
            for j in 0..g.n() {
                if i != j && !g.neighbors(i).contains(&j) {
                    prop_assert_eq!(u[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn accelerated_gossip_equals_polynomial(kind in kind_strategy(), seed in 0u64..10_000) {
        let g = build_graph(&kind).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        let z = random_z(3, g.n(), seed);
        let explicit = apply_pk(&z, &plan, &gm).unwrap();
        let iterative = accelerated_gossip(&z, &gm, &plan, None).unwrap();
        let exact_first = &z * gm.matrix();
        let with_cache = accelerated_gossip(&z, &gm, &plan, Some(&exact_first)).unwrap();
        let scale = explicit.amax().max(1e-300);
        prop_assert!((&explicit - &iterative).amax() <= 1e-10 * scale);
        prop_assert!((&explicit - &with_cache).amax() <= 1e-10 * scale);
    }

    #[test]
    fn pk_gap_at_least_quarter(kind in kind_strategy()) {
        let g = build_graph(&kind).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        let zeta = if plan.bypass { gm.zeta() } else { spectrum(&pk_matrix(&plan, &gm)).unwrap().zeta };
        prop_assert!(zeta >= 0.25, "ζ(P_K(U)) = {} with K = {}", zeta, plan.k);
    }

    #[test]
    fn spectrum_invariant_under_relabeling(kind in kind_strategy(), seed in 0u64..1000) {
        let g = build_graph(&kind).unwrap();
        let mut perm: Vec<usize> = (0..g.n()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let a = GossipMatrix::metropolis(&g).unwrap().spectrum();
        let b = GossipMatrix::metropolis(&g.relabeled(&perm).unwrap()).unwrap().spectrum();
        prop_assert!((a.sigma1 - b.sigma1).abs() <= 1e-10);
        prop_assert!((a.sigma_nm1 - b.sigma_nm1).abs() <= 1e-10);
        prop_assert!((a.zeta - b.zeta).abs() <= 1e-10);
    }
}
