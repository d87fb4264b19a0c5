use lazydual::inner::{katyusha_budget, InnerBudget, SolverKind};
use lazydual::metrics::theorem1_params;
use lazydual::problems::{make_quadratic, make_scalar_quadratic, ProblemInstance};
use lazydual::topology::{apply_pk, build_graph, chebyshev_plan, GossipMatrix, GraphKind};
use lazydual::{run, AlgoConfig, Method, Simulator, StopCriteria};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quad(n: usize, d: usize, m: usize, seed: u64) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let cond: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let mu = rng.random_range(0.5..2.0);
            (mu, mu * rng.random_range(1.0..8.0))
        })
        .collect();
    make_quadratic(n, m, d, &cond, seed).unwrap().with_reference(1e-12).unwrap()
}

fn gossip(kind: GraphKind) -> GossipMatrix {
    GossipMatrix::metropolis(&build_graph(&kind).unwrap()).unwrap()
}

fn katyusha(p: &ProblemInstance, c: f64) -> InnerBudget {
    let k = p.constants();
    InnerBudget { solver: SolverKind::Katyusha, steps: katyusha_budget(p.max_m(), k.kappa_max, c, 1.0), c }
}

#[test]
fn two_worker_ssda_hand_step() {
    let p = make_scalar_quadratic(&[0.0, 2.0]).unwrap().with_reference(1e-12).unwrap();
    let gm = gossip(GraphKind::Path { n: 2 });
    let cfg = AlgoConfig::exact(Method::Ssda, 1.0, 1.0);
    let mut sim = Simulator::new(&p, &gm, &cfg, 0).unwrap();
    assert_eq!(sim.momentum(), 0.0);
    assert_eq!(sim.theta().as_slice(), &[0.0, 2.0]);
    sim.step().unwrap();
    assert_eq!(sim.cache().as_slice(), &[-1.0, 1.0]);
    assert_eq!(sim.y().as_slice(), &[1.0, -1.0]);
    assert!(sim.subopt().abs() <= 1e-10);

    let stop = StopCriteria { max_iters: 50, target_subopt: Some(1e-10) };
    let trace = run(&p, &gm, &cfg, &stop, 0).unwrap();
    assert!(trace.iterations() <= 3);
}

#[test]
fn consensual_start_is_stationary() {
    let p = make_scalar_quadratic(&[1.5, 1.5, 1.5]).unwrap().with_reference(1e-12).unwrap();
    let gm = gossip(GraphKind::Path { n: 3 });
    let cfg = AlgoConfig::exact(Method::Ssda, 0.5, 1.0);
    let mut sim = Simulator::new(&p, &gm, &cfg, 0).unwrap();
    for _ in 0..5 {
        sim.step().unwrap();
    }
    assert!(sim.y().amax() < 1e-15);
    assert!(sim.x().amax() < 1e-15);
}

#[test]
fn infinite_target_runs_max_iters() {
    let p = quad(4, 2, 2, 3);
    let gm = gossip(GraphKind::Path { n: 4 });
    let eta = p.constants().mu_min / gm.sigma1();
    let cfg = AlgoConfig::exact(Method::Ssda, eta, 1.0);
    let stop = StopCriteria { max_iters: 17, target_subopt: Some(f64::INFINITY) };
    let trace = run(&p, &gm, &cfg, &stop, 0).unwrap();
    assert_eq!(trace.iterations(), 17);
    assert_eq!(trace.rows.len(), 18);
}

fn assert_same_iterates(a: &Simulator, b: &Simulator, tol: f64) {
    let scale = |m: &DMatrix<f64>| m.amax().max(1.0);
    assert!((a.x() - b.x()).amax() <= tol * scale(a.x()));
    assert!((a.y() - b.y()).amax() <= tol * scale(a.y()));
    assert!((a.theta() - b.theta()).amax() <= tol * scale(a.theta()));
}

#[test]
fn lazy_methods_reduce_to_exact_baselines() {
    for seed in 0..5u64 {
        let kind = if seed % 2 == 0 { GraphKind::Path { n: 6 } } else { GraphKind::Grid2d { rows: 2, cols: 3 } };
        let gm = gossip(kind);
        let p = quad(6, 4, 3, seed);
        let eta = p.constants().mu_min / gm.sigma1();
        for (lazy, exact) in [(Method::Dlag, Method::Ssda), (Method::Mdlag, Method::Msda)] {
            let base = AlgoConfig::exact(exact, eta, 1.0);
            let red = AlgoConfig { method: lazy, big_d: 3, ..base };
            let mut a = Simulator::new(&p, &gm, &base, seed).unwrap();
            let mut b = Simulator::new(&p, &gm, &red, seed).unwrap();
            for _ in 0..50 {
                a.step().unwrap();
                b.step().unwrap();
                assert_same_iterates(&a, &b, 1e-10);
            }
        }
    }
}

#[test]
fn mdlag_exact_cache_matches_global_form() {
    let gm = gossip(GraphKind::Path { n: 8 });
    let plan = chebyshev_plan(&gm);
    assert!(plan.k >= 2);
    let p = quad(8, 3, 2, 11);
    let eta = p.constants().mu_min / gm.sigma1();
    let cfg = AlgoConfig { method: Method::Mdlag, ..AlgoConfig::exact(Method::Mdlag, eta, 1.0) };
    let mut sim = Simulator::new(&p, &gm, &cfg, 0).unwrap();
    for _ in 0..10 {
        let x = sim.x().clone();
        let theta = sim.theta().clone();
        sim.step().unwrap();
        // no skips with c = γ = 0 unless the update is exactly zero
        assert_eq!(sim.last_report().unwrap().skips(), 0);
        let y_global = &x - apply_pk(&theta, &plan, &gm).unwrap() * eta;
        assert!((sim.y() - &y_global).amax() <= 1e-10 * y_global.amax().max(1.0));
    }
}

struct LazyRun {
    gm: GossipMatrix,
    p: ProblemInstance,
    cfg: AlgoConfig,
}

fn lazy_setup(method: Method, seed: u64, gamma: f64, c: f64, big_d: usize) -> LazyRun {
    let gm = gossip(GraphKind::Grid2d { rows: 3, cols: 3 });
    let p = quad(9, 3, 4, seed);
    let eta = 0.25 * p.constants().mu_min / gm.sigma1();
    let cfg = AlgoConfig { method, eta, s: 1.0, gamma, c, big_d, k: None, inner: katyusha(&p, 0.1) };
    LazyRun { gm, p, cfg }
}

#[test]
fn invariants_hold_on_lazy_runs() {
    for (method, seed) in [(Method::Dlag, 0), (Method::Dlag, 1), (Method::Mdlag, 2), (Method::Mdlag, 3)] {
        let r = lazy_setup(method, seed, 0.05, 0.1, 4);
        let mut sim = Simulator::new(&r.p, &r.gm, &r.cfg, seed).unwrap();
        let n = r.p.n();
        let mut skips = 0;
        for _ in 0..150 {
            let report = sim.step().unwrap().clone();
            skips += report.skips();
            // cache coherence against a global recomputation
            let fresh = sim.theta_hat() * r.gm.matrix();
            assert!((sim.cache() - &fresh).amax() <= 1e-12 * fresh.amax().max(1.0));
            assert!(sim.delays().iter().all(|&d| d <= r.cfg.big_d));
            // iterates stay orthogonal to the consensus direction
            let ones = DMatrix::from_element(n, 1, 1.0);
            let scale = sim.x().amax().max(1.0);
            assert!((sim.x() * &ones).amax() <= 1e-10 * scale * n as f64);
            assert!((sim.y() * &ones).amax() <= 1e-10 * scale * n as f64);
        }
        assert!(skips > 0, "{method}: lazy condition never fired");
        let trace = sim.into_trace();
        assert!(trace.max_cache_error <= 1e-12);
        assert!(trace.max_delay <= r.cfg.big_d);
    }
}

#[test]
fn message_accounting_identity() {
    let r = lazy_setup(Method::Dlag, 4, 0.05, 0.1, 5);
    let trace = run(&r.p, &r.gm, &r.cfg, &StopCriteria::iterations(100), 4).unwrap();
    let full = r.gm.graph().full_round_messages();
    let bound = full * trace.iterations() as u64;
    let skips: usize = trace.rows.iter().map(|row| row.skips).sum();
    assert!(skips > 0);
    assert!(trace.last().messages < bound);

    let exact = AlgoConfig::exact(Method::Ssda, r.cfg.eta, 1.0);
    let trace = run(&r.p, &r.gm, &exact, &StopCriteria::iterations(100), 4).unwrap();
    assert_eq!(trace.last().messages, bound);
    assert_eq!(trace.edge_utilization(), 1.0);

    // recount from the per-worker send totals
    let r = lazy_setup(Method::Dlag, 5, 0.05, 0.1, 5);
    let trace = run(&r.p, &r.gm, &r.cfg, &StopCriteria::iterations(60), 5).unwrap();
    let recount: u64 =
        trace.sends_per_worker.iter().enumerate().map(|(i, &s)| s * r.gm.graph().degree(i) as u64).sum();
    assert_eq!(recount, trace.last().messages);
}

#[test]
fn msda_counts_k_rounds() {
    let gm = gossip(GraphKind::Path { n: 10 });
    let plan = chebyshev_plan(&gm);
    let p = quad(10, 2, 2, 6);
    let cfg = AlgoConfig::exact(Method::Msda, p.constants().mu_min / gm.sigma1(), 1.0);
    let trace = run(&p, &gm, &cfg, &StopCriteria::iterations(7), 0).unwrap();
    assert_eq!(trace.last().messages, 7 * plan.k as u64 * gm.graph().full_round_messages());
}

#[test]
fn delay_cap_one_forces_alternate_sends() {
    let r = lazy_setup(Method::Dlag, 7, 1e6, 0.5, 1);
    let mut sim = Simulator::new(&r.p, &r.gm, &r.cfg, 7).unwrap();
    let mut last = vec![true; r.p.n()];
    for _ in 0..40 {
        let sent = sim.step().unwrap().sent.clone();
        for i in 0..sent.len() {
            assert!(sent[i] || last[i], "worker {i} skipped twice in a row");
        }
        last = sent;
    }
}

#[test]
fn gradient_evaluation_accounting() {
    for method in [Method::Dlag, Method::Mdlag] {
        let r = lazy_setup(method, 8, 0.05, 0.1, 4);
        let iters = 30;
        let trace = run(&r.p, &r.gm, &r.cfg, &StopCriteria::iterations(iters), 8).unwrap();
        let per_iter: u64 = r.p.objectives().iter().map(|o| r.cfg.inner.evals_per_solve(o.m()).unwrap()).sum();
        let init: u64 = r.p.objectives().iter().map(|o| o.m() as u64).sum();
        assert_eq!(trace.init_grad_evals, init);
        assert_eq!(trace.rows[0].grad_evals, init);
        assert_eq!(trace.last().grad_evals, init + per_iter * iters as u64);
        for w in trace.rows.windows(2) {
            assert_eq!(w[1].grad_evals - w[0].grad_evals, per_iter);
        }
    }
}

#[test]
fn runs_are_deterministic_and_thread_independent() {
    let r = lazy_setup(Method::Dlag, 9, 0.05, 0.1, 4);
    let a = run(&r.p, &r.gm, &r.cfg, &StopCriteria::iterations(40), 9).unwrap();
    let b = run(&r.p, &r.gm, &r.cfg, &StopCriteria::iterations(40), 9).unwrap();
    assert_eq!(a, b);
    let mut sim = Simulator::new(&r.p, &r.gm, &r.cfg, 9).unwrap().with_threads(4);
    for _ in 0..40 {
        sim.step().unwrap();
    }
    assert_eq!(sim.into_trace(), a);
    let c = run(&r.p, &r.gm, &r.cfg, &StopCriteria::iterations(40), 10).unwrap();
    assert_ne!(a.rows, c.rows);
}

#[test]
fn theory_parameters_give_dual_decay() {
    let gm = gossip(GraphKind::Grid2d { rows: 3, cols: 3 });
    let p = quad(9, 2, 3, 12);
    let big_d = 3;
    let t = theorem1_params(&gm, &p, big_d).unwrap();
    let cfg = AlgoConfig {
        method: Method::Dlag,
        eta: t.eta,
        s: t.s,
        gamma: t.gamma,
        c: t.c,
        big_d,
        k: None,
        inner: katyusha(&p, t.c),
    };
    let window = (10.0 * (t.s * t.kappa).sqrt()).ceil() as usize;
    let trace = run(&p, &gm, &cfg, &StopCriteria::iterations(window), 12).unwrap();
    let first = trace.rows[0].dual_subopt.unwrap();
    let last = trace.last().dual_subopt.unwrap();
    assert!(last <= first / 10.0, "dual gap {first:e} -> {last:e} over {window} iterations");
}

#[test]
fn rejects_bad_configs() {
    let p = quad(3, 2, 2, 0);
    let gm = gossip(GraphKind::Path { n: 3 });
    let ok = AlgoConfig::exact(Method::Ssda, 0.1, 1.0);
    assert!(Simulator::new(&p, &gm, &AlgoConfig { eta: 0.0, ..ok }, 0).is_err());
    assert!(Simulator::new(&p, &gm, &AlgoConfig { s: 0.5, ..ok }, 0).is_err());
    assert!(Simulator::new(&p, &gm, &AlgoConfig { c: 1.0, ..ok }, 0).is_err());
    assert!(Simulator::new(&p, &gm, &AlgoConfig { big_d: 0, ..ok }, 0).is_err());
    let wrong = gossip(GraphKind::Path { n: 4 });
    assert!(Simulator::new(&p, &wrong, &ok, 0).is_err());
}

#[test]
fn divergence_guard_returns_partial_trace() {
    let p = quad(4, 2, 2, 1);
    let gm = gossip(GraphKind::Path { n: 4 });
    let cfg = AlgoConfig::exact(Method::Ssda, 50.0 * p.constants().l_max, 1.0);
    match run(&p, &gm, &cfg, &StopCriteria::iterations(500), 0) {
        Err(lazydual::Error::Diverged { partial, iteration, .. }) => {
            assert_eq!(partial.iterations(), iteration);
        }
        other => panic!("expected divergence, got {:?}", other.map(|t| t.last().clone())),
    }
}

#[test]
fn worker_relabeling_commutes_with_runs() {
    let g = build_graph(&GraphKind::Grid2d { rows: 3, cols: 3 }).unwrap();
    let p = quad(9, 3, 4, 21);
    let perm = [4, 7, 0, 8, 2, 5, 1, 3, 6];
    let g2 = g.relabeled(&perm).unwrap();
    let mut objs = p.objectives().to_vec();
    for (i, o) in p.objectives().iter().enumerate() {
        objs[perm[i]] = o.clone();
    }
    let p2 = ProblemInstance::new(objs).unwrap().with_reference(1e-12).unwrap();
    let (gm, gm2) = (GossipMatrix::metropolis(&g).unwrap(), GossipMatrix::metropolis(&g2).unwrap());
    for method in [Method::Dlag, Method::Mdlag] {
        let eta = 0.25 * p.constants().mu_min / gm.sigma1();
        let cfg = AlgoConfig { method, gamma: 0.05, big_d: 4, ..AlgoConfig::exact(method, eta, 1.0) };
        let mut a = Simulator::new(&p, &gm, &cfg, 0).unwrap();
        let mut b = Simulator::new(&p2, &gm2, &cfg, 0).unwrap();
        let mut skips = 0;
        for _ in 0..100 {
            let ra = a.step().unwrap().clone();
            let rb = b.step().unwrap().clone();
            skips += ra.skips();
            assert_eq!(ra.messages, rb.messages);
            for i in 0..9 {
                assert_eq!(ra.sent[i], rb.sent[perm[i]]);
                let diff = (a.theta().column(i) - b.theta().column(perm[i])).amax();
                assert!(diff < 1e-9, "{method} worker {i}: {diff:e}");
            }
            assert!((a.subopt() - b.subopt()).abs() <= 1e-9 * a.subopt().abs().max(1e-6));
        }
        assert!(skips > 0, "{method} never skipped");
    }
}
