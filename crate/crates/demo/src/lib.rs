//! Browser demo: gossip spectra, method comparison and heterogeneity scores.
//!
//! Every export returns a JSON string. The plain Rust functions behind them
//! are usable (and tested) natively.

use lazydual::inner::katyusha_budget;
use lazydual::metrics::{heterogeneity_score, pk_spectrum, predicted_comm_ratio};
use lazydual::problems::make_quadratic;
use lazydual::topology::{build_graph, chebyshev_plan, ChebyshevPlan};
use lazydual::{AlgoConfig, GossipMatrix, GraphKind, InnerBudget, Method, ProblemInstance, SolverKind, StopCriteria};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Points on the filter curve.
const CURVE_POINTS: usize = 200;

fn graph_kind(topology: &str, size: usize) -> Result<GraphKind, String> {
    Ok(match topology {
        "grid" => GraphKind::Grid2d { rows: size, cols: size },
        "path" => GraphKind::Path { n: size },
        "complete" => GraphKind::Complete { n: size },
        "random" => {
            let p = (2.0 * (size as f64).ln() / size as f64).clamp(0.0, 1.0);
            GraphKind::ErdosRenyi { n: size, p, seed: 1 }
        }
        other => return Err(format!("unknown topology `{other}`")),
    })
}

fn gossip(topology: &str, size: usize) -> Result<GossipMatrix, String> {
    let graph = build_graph(&graph_kind(topology, size)?).map_err(|e| e.to_string())?;
    GossipMatrix::metropolis(&graph).map_err(|e| e.to_string())
}

/// `P_K(λ)` for a scalar eigenvalue of `U`.
fn filter(plan: &ChebyshevPlan, lambda: f64) -> f64 {
    if plan.bypass {
        return lambda;
    }
    let x = plan.c2 * (1.0 - plan.c3 * lambda);
    let (mut prev, mut cur) = (1.0, x);
    for _ in 1..plan.k {
        (prev, cur) = (cur, 2.0 * x * cur - prev);
    }
    1.0 - cur / plan.a_k()
}

/// Spectrum of the Metropolis gossip matrix and of its Chebyshev filter.
pub fn spectrum_report(topology: &str, size: usize) -> Result<Value, String> {
    let gm = gossip(topology, size)?;
    let plan = chebyshev_plan(&gm);
    let pk = pk_spectrum(&gm, &plan).map_err(|e| e.to_string())?;
    let mut eig: Vec<f64> = gm.matrix().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let s1 = gm.sigma1();
    let curve: Vec<[f64; 2]> = (0..=CURVE_POINTS)
        .map(|i| {
            let l = s1 * i as f64 / CURVE_POINTS as f64;
            [l, filter(&plan, l)]
        })
        .collect();
    Ok(json!({
        "n": gm.n(),
        "edges": gm.graph().num_edges(),
        "sigma1": s1,
        "sigma_nm1": gm.sigma_nm1(),
        "zeta": gm.zeta(),
        "k": plan.k,
        "zeta_pk": pk.zeta,
        "eigenvalues": eig,
        "filtered": eig.iter().map(|&l| filter(&plan, l)).collect::<Vec<_>>(),
        "curve": curve,
    }))
}

/// Quadratic problem where worker 0 has `μ = L = weak` and the rest have
/// `μ = 1, L = kappa`.
fn hetero_problem(n: usize, kappa: f64, weak: f64, seed: u64) -> Result<ProblemInstance, String> {
    let mut cond = vec![(1.0, kappa); n];
    cond[0] = (weak, weak);
    make_quadratic(n, 2, 2, &cond, seed)
        .and_then(|p| p.with_reference(1e-12))
        .map_err(|e| e.to_string())
}

/// Runs all four methods with `η = μ_min/(2σ₁)` for the operator each
/// one gossips with. Diverging methods report their error instead of a trace.
#[allow(clippy::too_many_arguments)]
pub fn compare(
    topology: &str,
    size: usize,
    kappa: f64,
    weak: f64,
    gamma: f64,
    big_d: usize,
    iters: usize,
    seed: u64,
) -> Result<Value, String> {
    let gm = gossip(topology, size)?;
    let problem = hetero_problem(gm.n(), kappa, weak, seed)?;
    let plan = chebyshev_plan(&gm);
    let k = problem.constants();
    let c = 0.01;
    let inner = InnerBudget { solver: SolverKind::Katyusha, steps: katyusha_budget(2, k.kappa_max, c, 1.0), c };
    let stop = StopCriteria { max_iters: iters, target_subopt: Some(1e-10) };
    let mut runs = Vec::new();
    for method in Method::ALL {
        let sigma1 = if method.is_multi() {
            pk_spectrum(&gm, &plan).map_err(|e| e.to_string())?.sigma1
        } else {
            gm.sigma1()
        };
        let cfg = AlgoConfig {
            gamma: if method.is_lazy() { gamma } else { 0.0 },
            c: if method.is_lazy() { c } else { 0.0 },
            big_d,
            inner: if method.is_lazy() { inner } else { InnerBudget::exact() },
            ..AlgoConfig::exact(method, 0.5 * k.mu_min / sigma1, 1.0)
        };
        let run = match lazydual::run(&problem, &gm, &cfg, &stop, seed) {
            Ok(trace) => json!({
                "method": method.name(),
                "subopt": trace.rows.iter().map(|r| r.subopt).collect::<Vec<_>>(),
                "messages": trace.rows.iter().map(|r| r.messages).collect::<Vec<_>>(),
                "utilization": trace.edge_utilization(),
            }),
            Err(e) => json!({ "method": method.name(), "error": e.to_string() }),
        };
        runs.push(run);
    }
    Ok(json!({ "k": plan.k, "runs": runs }))
}

/// Heterogeneity score `h_1..h_D` and the predicted DLAG communication.
pub fn score(topology: &str, size: usize, weak: f64, gamma: f64, big_d: usize) -> Result<Value, String> {
    let gm = gossip(topology, size)?;
    let problem = hetero_problem(gm.n(), 1.0, weak, 0)?;
    let h = heterogeneity_score(&problem, gm.graph(), gamma, big_d).map_err(|e| e.to_string())?;
    let pred = predicted_comm_ratio(&h, 1, Method::Dlag);
    Ok(json!({ "h": h, "factor": pred.factor, "q": pred.q }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = spectrum)]
pub fn spectrum_js(topology: &str, size: usize) -> Result<String, JsValue> {
    to_js(spectrum_report(topology, size))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = compare)]
pub fn compare_js(
    topology: &str,
    size: usize,
    kappa: f64,
    weak: f64,
    gamma: f64,
    big_d: usize,
    iters: usize,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(compare(topology, size, kappa, weak, gamma, big_d, iters, seed as u64))
}

#[wasm_bindgen(js_name = score)]
pub fn score_js(topology: &str, size: usize, weak: f64, gamma: f64, big_d: usize) -> Result<String, JsValue> {
    to_js(score(topology, size, weak, gamma, big_d))
}
