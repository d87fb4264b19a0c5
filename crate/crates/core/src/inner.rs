//! Local solvers for the dual-gradient subproblem
//! `θ ≈ argmin_θ f_i(θ) − ⟨θ, x⟩`.
//!
//! The components of the subproblem are `f_{i,j}(θ) − ⟨θ, x⟩`, so they keep the
//! worker's `L_i` and `μ_i`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::all_finite;
use crate::problems::LocalObjective;

/// Gradient-residual target of the exact solve.
pub const EXACT_TOL: f64 = 1e-12;
const EXACT_MAX_NEWTON: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Katyusha,
    Agd,
    Exact,
}

/// Per-solve work allowance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InnerBudget {
    pub solver: SolverKind,
    /// Katyusha inner iterations or AGD iterations; ignored by `Exact`.
    pub steps: usize,
    /// Target contraction of the squared error, `0 < c < 1`.
    pub c: f64,
}

impl InnerBudget {
    pub fn exact() -> Self {
        Self { solver: SolverKind::Exact, steps: 1, c: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Parameter("inner budget must be at least one step".into()));
        }
        if self.solver != SolverKind::Exact && !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::Parameter(format!("inner contraction c must lie in (0, 1), got {}", self.c)));
        }
        Ok(())
    }

    /// Component-gradient evaluations one approximate solve spends on a worker
    /// with `m` components. `None` for exact solves, whose cost is reported by
    /// the solve itself.
    pub fn evals_per_solve(&self, m: usize) -> Option<u64> {
        let (m, steps) = (m as u64, self.steps as u64);
        match self.solver {
            SolverKind::Katyusha => Some(steps.div_ceil(2 * m) * m + 2 * steps),
            SolverKind::Agd => Some(steps * m),
            SolverKind::Exact => None,
        }
    }
}

/// `⌈C_kat·(m + √(m·κ_max))·ln(2κ_max/c)⌉`.
pub fn katyusha_budget(m: usize, kappa_max: f64, c: f64, c_kat: f64) -> usize {
    let m = m as f64;
    let steps = c_kat * (m + (m * kappa_max).sqrt()) * (2.0 * kappa_max / c).ln();
    (steps.ceil() as usize).max(1)
}

/// `⌈C·√κ_max·ln(2κ_max/c)⌉` full-gradient iterations.
pub fn agd_budget(kappa_max: f64, c: f64, c_agd: f64) -> usize {
    let steps = c_agd * kappa_max.sqrt() * (2.0 * kappa_max / c).ln();
    (steps.ceil() as usize).max(1)
}

/// Independent stream for worker `worker` at outer iteration `iter`.
pub fn worker_rng(seed: u64, worker: usize, iter: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((worker as u64) << 40) | iter as u64);
    rng
}

/// Approximate minimizer of `f_i(θ) − ⟨θ, x⟩` from `warm`, plus the number of
/// component-gradient evaluations spent.
pub fn solve_subproblem(
    obj: &LocalObjective,
    x: &[f64],
    warm: &[f64],
    budget: &InnerBudget,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, u64)> {
    budget.validate()?;
    check_dims(obj, x, warm)?;
    if !all_finite(warm) || !all_finite(x) {
        return Err(Error::NonFinite("inner solver input".into()));
    }
    let theta = match budget.solver {
        SolverKind::Katyusha => katyusha(obj, x, warm, budget.steps, rng),
        SolverKind::Agd => agd(obj, x, warm, budget.steps),
        SolverKind::Exact => return exact_dual_gradient(obj, x),
    };
    if !all_finite(theta.as_slice()) {
        return Err(Error::NonFinite("inner solver iterate".into()));
    }
    let evals = budget.evals_per_solve(obj.m()).expect("approximate solver");
    Ok((theta, evals))
}

fn check_dims(obj: &LocalObjective, x: &[f64], warm: &[f64]) -> Result<()> {
    if x.len() != obj.dim() || warm.len() != obj.dim() {
        return Err(Error::Dimension {
            expected: format!("length {}", obj.dim()),
            got: format!("x: {}, warm: {}", x.len(), warm.len()),
        });
    }
    Ok(())
}

/// Katyusha for strongly convex finite sums, with the strong convexity moved
/// into the proximal term `ψ(θ) = (μ/2)‖θ‖²`. The last epoch may be cut short
/// by the budget; the returned point averages the steps actually taken.
fn katyusha(obj: &LocalObjective, x: &[f64], warm: &[f64], steps: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let d = obj.dim();
    let m = obj.m();
    let (l, sigma) = (obj.l_smooth(), obj.mu());
    let epoch = 2 * m;
    let tau2 = 0.5;
    let tau1 = ((epoch as f64 * sigma / (3.0 * l)).sqrt()).min(0.5);
    let alpha = 1.0 / (3.0 * tau1 * l);
    let decay = 1.0 + alpha * sigma;

    let mut snapshot = warm.to_vec();
    let mut y = warm.to_vec();
    let mut z = warm.to_vec();
    let mut full = vec![0.0; d];
    let mut point = vec![0.0; d];
    let mut g_point = vec![0.0; d];
    let mut g_snap = vec![0.0; d];
    let mut est = vec![0.0; d];
    let mut avg = vec![0.0; d];

    let mut done = 0;
    while done < steps {
        obj.gradient_into(&snapshot, &mut full);
        for (f, &xi) in full.iter_mut().zip(x) {
            *f -= xi;
        }
        let len = epoch.min(steps - done);
        avg.iter_mut().for_each(|a| *a = 0.0);
        let mut weight = 1.0;
        let mut total_weight = 0.0;
        for _ in 0..len {
            for k in 0..d {
                point[k] = tau1 * z[k] + tau2 * snapshot[k] + (1.0 - tau1 - tau2) * y[k];
            }
            let j = rng.random_range(0..m);
            obj.component_gradient_into(j, &point, &mut g_point);
            obj.component_gradient_into(j, &snapshot, &mut g_snap);
            for k in 0..d {
                est[k] = full[k] + g_point[k] - g_snap[k] - sigma * point[k];
                z[k] = (z[k] - alpha * est[k]) / decay;
                y[k] = (3.0 * l * point[k] - est[k]) / (3.0 * l + sigma);
                avg[k] += weight * y[k];
            }
            total_weight += weight;
            weight *= decay;
        }
        for (s, a) in snapshot.iter_mut().zip(&avg) {
            *s = a / total_weight;
        }
        done += len;
    }
    DVector::from_vec(snapshot)
}

/// Nesterov's method with constant momentum and step `1/L`.
fn agd(obj: &LocalObjective, x: &[f64], warm: &[f64], steps: usize) -> DVector<f64> {
    let d = obj.dim();
    let q = obj.kappa().sqrt();
    let beta = (q - 1.0) / (q + 1.0);
    let step = 1.0 / obj.l_smooth();
    let mut theta = warm.to_vec();
    let mut look = warm.to_vec();
    let mut prev = warm.to_vec();
    let mut g = vec![0.0; d];
    for _ in 0..steps {
        obj.gradient_into(&look, &mut g);
        for k in 0..d {
            prev[k] = theta[k];
            theta[k] = look[k] - step * (g[k] - x[k]);
            look[k] = theta[k] + beta * (theta[k] - prev[k]);
        }
    }
    DVector::from_vec(theta)
}

/// `∇f_i★(x)` and the component-gradient evaluations it cost.
///
/// Quadratics use the closed form and are charged one full pass (`m`
/// evaluations). Other objectives run Newton from the origin until
/// `‖∇f_i(θ) − x‖ ≤ 1e−12·max(1, ‖x‖)`, charged `2m` per iteration for the
/// gradient and Hessian.
pub fn exact_dual_gradient(obj: &LocalObjective, x: &[f64]) -> Result<(DVector<f64>, u64)> {
    let m = obj.m() as u64;
    if let Some(theta) = obj.dual_gradient(x) {
        return Ok((theta, m));
    }
    let xv = DVector::from_column_slice(x);
    let tol = EXACT_TOL * xv.norm().max(1.0);
    let mut theta = DVector::zeros(obj.dim());
    let mut evals = 0;
    for _ in 0..EXACT_MAX_NEWTON {
        let g = obj.gradient(theta.as_slice()) - &xv;
        evals += m;
        if !g.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("exact dual gradient".into()));
        }
        let gnorm = g.norm();
        if gnorm <= tol {
            return Ok((theta, evals));
        }
        let h = obj.hessian(theta.as_slice());
        evals += m;
        let dir = h
            .cholesky()
            .ok_or_else(|| Error::Problem("local Hessian is not positive definite".into()))?
            .solve(&(-&g));
        let objective = |t: &DVector<f64>| obj.value(t.as_slice()) - t.dot(&xv);
        let base = objective(&theta);
        let slope = g.dot(&dir);
        let mut t = 1.0;
        loop {
            let cand = &theta + &dir * t;
            let better_value = objective(&cand) <= base + 1e-4 * t * slope;
            let better_grad = || (obj.gradient(cand.as_slice()) - &xv).norm() < gnorm;
            if better_value || better_grad() {
                theta = cand;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NoConvergence(format!("exact dual gradient stalled at residual {gnorm:e}")));
            }
        }
    }
    Err(Error::NoConvergence(format!("exact dual gradient exceeded {EXACT_MAX_NEWTON} Newton steps")))
}
