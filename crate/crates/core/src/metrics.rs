//! Theory-side calculators: parameter schedules, heterogeneity scores,
//! predicted communication, and complexity counters.

use serde::Serialize;

use crate::algorithms::{IterationReport, Method};
use crate::error::{Error, Result};
use crate::problems::ProblemInstance;
use crate::topology::{pk_matrix, spectrum, ChebyshevPlan, GossipMatrix, Graph, Spectrum};
use crate::trace::RunTrace;

/// Parameters prescribed by one of the convergence theorems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryParams {
    pub gamma: f64,
    pub c: f64,
    pub eta: f64,
    pub s: f64,
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    /// Condition number governing the momentum.
    pub kappa: f64,
    /// `σₙ₋₁/L_max` of the gossip operator in use.
    pub alpha: f64,
    /// `σ₁/μ_min` of the gossip operator in use.
    pub beta: f64,
    pub big_d: usize,
}

/// Spectral quantities entering the schedules: `U` for DLAG, `P_K(U)` for MDLAG.
#[derive(Clone, Copy, Debug)]
struct Setting {
    alpha: f64,
    beta: f64,
    mu_min: f64,
    norm4: f64,
    /// Momentum condition number.
    kappa: f64,
    /// Condition number in the exponential factors.
    kappa_exp: f64,
}

impl Setting {
    fn new(spec: Spectrum, problem: &ProblemInstance, kappa_exp_from_f: bool) -> Self {
        let k = problem.constants();
        let kappa = k.kappa_f / spec.zeta;
        Self {
            alpha: spec.sigma_nm1 / k.l_max,
            beta: spec.sigma1 / k.mu_min,
            mu_min: k.mu_min,
            norm4: spec.sigma1 * spec.sigma1,
            kappa,
            kappa_exp: if kappa_exp_from_f { k.kappa_f } else { kappa },
        }
    }

    /// `αβμ²_min / ‖√U‖⁴`.
    fn scale(&self) -> f64 {
        self.alpha * self.beta * self.mu_min * self.mu_min / self.norm4
    }

    fn a_of(&self, gamma: f64, big_d: usize) -> f64 {
        let d = big_d as f64;
        6.0 * gamma * d * (2.0 * d / self.kappa_exp.sqrt()).exp() / self.scale()
    }

    fn b_of(&self, c: f64, big_d: usize) -> f64 {
        let d = big_d as f64;
        25.0 * c * d * (2.0 * (d + 1.0) / self.kappa_exp.sqrt()).exp() / self.scale()
    }

    fn headline(&self, big_d: usize) -> Result<TheoryParams> {
        if big_d < 2 {
            return Err(Error::Parameter(format!("the schedule needs D ≥ 2, got {big_d}")));
        }
        let d = big_d as f64;
        let sk = self.kappa_exp.sqrt();
        let gamma = self.scale() / (288.0 * d) * (-2.0 * d / sk).exp();
        let c = self.scale() / (1200.0 * d) * (-2.0 * (d + 1.0) / sk).exp();
        if !(c < 1.0) {
            return Err(Error::Parameter(format!("schedule produced c = {c} ≥ 1")));
        }
        Ok(TheoryParams {
            gamma,
            c,
            eta: 2.0 / (15.0 * self.beta),
            s: 10.0,
            a: self.a_of(gamma, big_d),
            b: self.b_of(c, big_d),
            rho: 4.0,
            kappa: self.kappa,
            alpha: self.alpha,
            beta: self.beta,
            big_d,
        })
    }

    fn general(&self, big_d: usize, gamma: f64, c: f64) -> Result<TheoryParams> {
        if big_d < 1 {
            return Err(Error::Parameter("D must be at least 1".into()));
        }
        if !(self.kappa > 2.0) {
            return Err(Error::Parameter(format!("the general schedule needs κ > 2, got {}", self.kappa)));
        }
        if !(c > 0.0 && c < 1.0) || !(gamma >= 0.0) {
            return Err(Error::Parameter(format!("need 0 < c < 1 and γ ≥ 0, got c = {c}, γ = {gamma}")));
        }
        let a = self.a_of(gamma, big_d);
        let b = self.b_of(c, big_d);
        let ab = a + b;
        let r = (2.0 + 1.0 / (12.0 * ab)).sqrt();
        let rho = 2.0 + r;
        let s = rho / r * (1.0 + 24.0 * ab * rho);
        let eta = r / (1.0 + r) / (1.0 + 24.0 * ab * rho) / self.beta;
        Ok(TheoryParams {
            gamma,
            c,
            eta,
            s,
            a,
            b,
            rho,
            kappa: self.kappa,
            alpha: self.alpha,
            beta: self.beta,
            big_d,
        })
    }
}

/// DLAG schedule: `γ = αβμ²/(288D‖√U‖⁴)·e^{−2D/√κ}`,
/// `c = αβμ²/(1200D‖√U‖⁴)·e^{−2(D+1)/√κ}`, `η = 2/(15β)`, `s = 10`,
/// with `κ = κ_F/ζ(U)`.
pub fn theorem1_params(gm: &GossipMatrix, problem: &ProblemInstance, big_d: usize) -> Result<TheoryParams> {
    Setting::new(gm.spectrum(), problem, false).headline(big_d)
}

/// General `(s, η)` for given `(γ, c)` via the constants `a`, `b` and
/// `ρ = 2 + √(2 + 1/(12(a+b)))`.
pub fn theorem4_params(
    gm: &GossipMatrix,
    problem: &ProblemInstance,
    big_d: usize,
    gamma: f64,
    c: f64,
) -> Result<TheoryParams> {
    Setting::new(gm.spectrum(), problem, false).general(big_d, gamma, c)
}

/// Spectrum of `P_K(U)`; equals that of `U` in bypass mode.
pub fn pk_spectrum(gm: &GossipMatrix, plan: &ChebyshevPlan) -> Result<Spectrum> {
    if plan.bypass {
        return Ok(gm.spectrum());
    }
    spectrum(&pk_matrix(plan, gm))
}

/// MDLAG schedule: the DLAG formulas with `P_K(U)` in place of `U` and `κ_F`
/// in the exponents. The momentum uses `κ′ = κ_F/ζ(P_K(U))`.
pub fn mdlag_params(
    gm: &GossipMatrix,
    plan: &ChebyshevPlan,
    problem: &ProblemInstance,
    big_d: usize,
) -> Result<TheoryParams> {
    let spec = pk_spectrum(gm, plan)?;
    let setting = if plan.bypass {
        Setting::new(spec, problem, false)
    } else {
        Setting::new(spec, problem, true)
    };
    setting.headline(big_d)
}

/// The general schedule on `P_K(U)`.
pub fn mdlag_general_params(
    gm: &GossipMatrix,
    plan: &ChebyshevPlan,
    problem: &ProblemInstance,
    big_d: usize,
    gamma: f64,
    c: f64,
) -> Result<TheoryParams> {
    let spec = pk_spectrum(gm, plan)?;
    Setting::new(spec, problem, !plan.bypass).general(big_d, gamma, c)
}

/// `h_d(γ) = (1/(2|E|)) Σ_i deg_i·1(H_i² ≤ γ/d)` for `d = 1..=D`, with
/// `H_i = μ_min/μ_i`.
pub fn heterogeneity_score(problem: &ProblemInstance, graph: &Graph, gamma: f64, big_d: usize) -> Result<Vec<f64>> {
    if problem.n() != graph.n() {
        return Err(Error::Dimension {
            expected: format!("{} workers", graph.n()),
            got: problem.n().to_string(),
        });
    }
    let mu_min = problem.constants().mu_min;
    let total = 2.0 * graph.num_edges() as f64;
    let h_sq: Vec<f64> = problem.objectives().iter().map(|o| (mu_min / o.mu()).powi(2)).collect();
    Ok((1..=big_d)
        .map(|d| {
            let thr = gamma / d as f64;
            let hits: usize = (0..graph.n()).filter(|&i| h_sq[i] <= thr).map(|i| graph.degree(i)).sum();
            hits as f64 / total
        })
        .collect())
}

/// Predicted communication relative to a full round per iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommPrediction {
    /// `1 − Σ(1/d − 1/(d+1))h_d` for DLAG, `K − Σ(…)` for MDLAG.
    pub factor: f64,
    /// `√10·factor`: total communication against SSDA (MSDA for MDLAG, per round).
    pub q: f64,
}

pub fn predicted_comm_ratio(h: &[f64], k: usize, method: Method) -> CommPrediction {
    let saved: f64 = h
        .iter()
        .enumerate()
        .map(|(i, hd)| {
            let d = (i + 1) as f64;
            (1.0 / d - 1.0 / (d + 1.0)) * hd
        })
        .sum();
    let factor = match method {
        Method::Dlag => 1.0 - saved,
        Method::Mdlag => k as f64 - saved,
        Method::Ssda => 1.0,
        Method::Msda => k as f64,
    };
    let q = match method {
        Method::Dlag | Method::Mdlag => 10f64.sqrt() * factor,
        Method::Ssda | Method::Msda => factor,
    };
    CommPrediction { factor, q }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommReport {
    pub measured: f64,
    pub predicted: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Default relative slack on the predicted utilization.
pub const DEFAULT_SLACK: f64 = 0.05;

/// Measured edge utilization against the predicted factor.
pub fn measured_vs_predicted(trace: &RunTrace, predicted: &CommPrediction, slack: f64) -> CommReport {
    let measured = trace.edge_utilization();
    CommReport { measured, predicted: predicted.factor, slack, pass: measured <= predicted.factor * (1.0 + slack) }
}

/// Cumulative work counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ComplexityCounters {
    pub iterations: usize,
    pub messages: u64,
    pub grad_evals: u64,
    pub sends_per_worker: Vec<u64>,
}

impl ComplexityCounters {
    pub fn new(n: usize) -> Self {
        Self { sends_per_worker: vec![0; n], ..Default::default() }
    }

    pub fn record(&mut self, report: &IterationReport) {
        self.iterations += 1;
        self.messages += report.messages;
        self.grad_evals += report.grad_evals;
        for (count, &sent) in self.sends_per_worker.iter_mut().zip(&report.sent) {
            *count += u64::from(sent);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_quadratic;
    use crate::topology::{build_graph, GraphKind};
    use approx::assert_relative_eq;

    fn setup() -> (GossipMatrix, ProblemInstance) {
        let g = build_graph(&GraphKind::Grid2d { rows: 3, cols: 3 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let p = make_quadratic(9, 2, 2, &[(0.5, 4.0); 9], 1).unwrap();
        (gm, p)
    }

    #[test]
    fn headline_schedule_closes() {
        let (gm, p) = setup();
        let t1 = theorem1_params(&gm, &p, 5).unwrap();
        assert_eq!(t1.s, 10.0);
        assert_relative_eq!(t1.eta * t1.beta, 2.0 / 15.0, epsilon = 1e-15);
        assert_relative_eq!(t1.a, 1.0 / 48.0, epsilon = 1e-14);
        assert_relative_eq!(t1.b, 1.0 / 48.0, epsilon = 1e-14);
        let t4 = theorem4_params(&gm, &p, 5, t1.gamma, t1.c).unwrap();
        assert_relative_eq!(t4.rho, 4.0, epsilon = 1e-12);
        assert_relative_eq!(t4.s, 10.0, epsilon = 1e-12);
        assert_relative_eq!(t4.eta, t1.eta, epsilon = 1e-12);
    }

    #[test]
    fn gamma_decreases_with_delay() {
        let (gm, p) = setup();
        let g: Vec<f64> = (2..10).map(|d| theorem1_params(&gm, &p, d).unwrap().gamma).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert!(theorem1_params(&gm, &p, 1).is_err());
    }

    #[test]
    fn equal_gamma_and_c_ratio() {
        let (gm, p) = setup();
        let t = theorem4_params(&gm, &p, 4, 1e-5, 1e-5).unwrap();
        let kappa = t.kappa;
        assert_relative_eq!(t.b / t.a, 25.0 * (2.0 / kappa.sqrt()).exp() / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn telescoping() {
        for big_d in 1..=100 {
            let p = predicted_comm_ratio(&vec![1.0; big_d], 1, Method::Dlag);
            assert_relative_eq!(p.factor, 1.0 / (big_d as f64 + 1.0), epsilon = 1e-13);
        }
        let p = predicted_comm_ratio(&[0.0; 7], 3, Method::Dlag);
        assert_eq!(p.factor, 1.0);
        assert_relative_eq!(p.q, 10f64.sqrt());
    }

    #[test]
    fn score_edge_cases() {
        let (gm, p) = setup();
        assert!(heterogeneity_score(&p, gm.graph(), 0.0, 4).unwrap().iter().all(|&h| h == 0.0));
        // all μ equal: H = 1, so h_d = 1 exactly when γ/d ≥ 1
        let h = heterogeneity_score(&p, gm.graph(), 2.0, 4).unwrap();
        assert_eq!(h, vec![1.0, 1.0, 0.0, 0.0]);
    }
}
