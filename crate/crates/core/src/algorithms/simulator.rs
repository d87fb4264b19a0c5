use nalgebra::{DMatrix, DVector};

use super::lazy::{lazy_check, LazyState};
use super::{AlgoConfig, Method};
use crate::error::{Error, Result};
use crate::inner::{exact_dual_gradient, solve_subproblem, worker_rng, InnerBudget, SolverKind};
use crate::linalg::{column_mean, consensus_residual, dist_sq, max_abs_diff};
use crate::metrics::{pk_spectrum, ComplexityCounters};
use crate::problems::ProblemInstance;
use crate::topology::{accelerated_gossip, chebyshev_plan, ChebyshevPlan, GossipMatrix};
use crate::trace::{RunTrace, TraceMeta, TraceRow};

/// Abort once suboptimality exceeds this multiple of its initial value.
const DIVERGENCE_FACTOR: f64 = 1e6;
/// Cache drift tolerated before the run is declared broken.
const CACHE_TOLERANCE: f64 = 1e-9;

/// What happened in one outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationReport {
    pub iter: usize,
    /// Per worker: whether it sent its update in the first gossip round.
    pub sent: Vec<bool>,
    /// Directed messages, all rounds.
    pub messages: u64,
    pub grad_evals: u64,
    /// Lazy-condition sides per worker; zero for methods that always send.
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub cache_error: f64,
}

impl IterationReport {
    pub fn skips(&self) -> usize {
        self.sent.iter().filter(|&&s| !s).count()
    }
}

/// Synchronous lockstep simulation of all workers.
///
/// Iterates are stored as `d × n` matrices with worker `i` in column `i`.
/// After `k` steps the simulator holds `xᵏ`, `yᵏ`, the fresh solves `Θᵏ` at
/// `xᵏ`, and the lazily shared `Θ̂ᵏ⁻¹` with the neighbor caches `Pᵏ⁻¹`.
pub struct Simulator<'a> {
    problem: &'a ProblemInstance,
    gm: &'a GossipMatrix,
    cfg: AlgoConfig,
    inner: InnerBudget,
    plan: Option<ChebyshevPlan>,
    seed: u64,
    kappa: f64,
    momentum: f64,
    f_star: f64,
    mu_min: f64,
    threads: usize,
    k: usize,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    theta: DMatrix<f64>,
    theta_hat: DMatrix<f64>,
    cache: DMatrix<f64>,
    delays: Vec<usize>,
    lazy: Vec<LazyState>,
    counters: ComplexityCounters,
    initial_subopt: f64,
    subopt: f64,
    rows: Vec<TraceRow>,
    max_delay: usize,
    max_cache_error: f64,
    init_grad_evals: u64,
    last_report: Option<IterationReport>,
}

impl<'a> Simulator<'a> {
    /// Sets `x⁰ = y⁰ = 0` and `Θ⁰ = ∇F★(0)` by exact local solves.
    pub fn new(problem: &'a ProblemInstance, gm: &'a GossipMatrix, cfg: &AlgoConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let n = problem.n();
        if gm.n() != n {
            return Err(Error::Dimension { expected: format!("{n} graph nodes"), got: gm.n().to_string() });
        }
        let d = problem.dim();
        let consts = problem.constants();
        let plan = if cfg.method.is_multi() {
            let base = chebyshev_plan(gm);
            Some(match cfg.k {
                Some(k) => base.with_rounds(k),
                None => base,
            })
        } else {
            None
        };
        let zeta = match &plan {
            Some(p) => pk_spectrum(gm, p)?.zeta,
            None => gm.zeta(),
        };
        let kappa = consts.kappa_f / zeta;
        let root = (cfg.s * kappa).sqrt();
        let momentum = (root - 1.0) / (root + 1.0);
        let f_star = match problem.reference() {
            Some(r) => r.value,
            None => crate::problems::centralized_solve(problem, 1e-10)?.value,
        };

        let mut theta = DMatrix::zeros(d, n);
        let mut init_grad_evals = 0;
        let zero = vec![0.0; d];
        for i in 0..n {
            let (t, evals) = exact_dual_gradient(problem.objective(i), &zero)?;
            theta.set_column(i, &t);
            init_grad_evals += evals;
        }

        let mut sim = Self {
            problem,
            gm,
            cfg: *cfg,
            inner: cfg.effective_inner(),
            plan,
            seed,
            kappa,
            momentum,
            f_star,
            mu_min: consts.mu_min,
            threads: 1,
            k: 0,
            x: DMatrix::zeros(d, n),
            y: DMatrix::zeros(d, n),
            theta,
            // Θ̂⁻¹ = 0 and P⁻¹ = 0 with every delay at D: the first exchange is a
            // full round that builds the caches.
            theta_hat: DMatrix::zeros(d, n),
            cache: DMatrix::zeros(d, n),
            delays: vec![cfg.big_d; n],
            lazy: (0..n).map(|_| LazyState::new(cfg.c, cfg.gamma, cfg.big_d)).collect(),
            counters: ComplexityCounters::new(n),
            initial_subopt: 0.0,
            subopt: 0.0,
            rows: Vec::new(),
            max_delay: 0,
            max_cache_error: 0.0,
            init_grad_evals,
            last_report: None,
        };
        sim.counters.grad_evals = init_grad_evals;
        sim.subopt = sim.primal_subopt();
        sim.initial_subopt = sim.subopt;
        let row = sim.row(0);
        sim.rows.push(row);
        Ok(sim)
    }

    /// Runs the per-worker solves on up to `threads` OS threads. Results do
    /// not depend on the thread count.
    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn subopt(&self) -> f64 {
        self.subopt
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    /// Fresh local solves at the current `x`.
    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    /// Last shared values.
    pub fn theta_hat(&self) -> &DMatrix<f64> {
        &self.theta_hat
    }

    /// Neighbor aggregates `P_i = Σ_{j ∈ N(i)} U_ij θ̂_j`.
    pub fn cache(&self) -> &DMatrix<f64> {
        &self.cache
    }

    pub fn delays(&self) -> &[usize] {
        &self.delays
    }

    pub fn lazy_states(&self) -> &[LazyState] {
        &self.lazy
    }

    pub fn counters(&self) -> &ComplexityCounters {
        &self.counters
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn momentum(&self) -> f64 {
        self.momentum
    }

    pub fn plan(&self) -> Option<&ChebyshevPlan> {
        self.plan.as_ref()
    }

    pub fn last_report(&self) -> Option<&IterationReport> {
        self.last_report.as_ref()
    }

    pub fn init_grad_evals(&self) -> u64 {
        self.init_grad_evals
    }

    /// `f(θ̄) − f★`.
    fn primal_subopt(&self) -> f64 {
        let mean = column_mean(&self.theta);
        self.problem.value(mean.as_slice()) - self.f_star
    }

    fn row(&self, iter: usize) -> TraceRow {
        TraceRow {
            iter,
            subopt: self.subopt,
            consensus: consensus_residual(&self.theta),
            messages: self.counters.messages,
            grad_evals: self.counters.grad_evals,
            skips: self.last_report.as_ref().map_or(0, IterationReport::skips),
            dual_subopt: self.problem.dual_value(&self.y).map(|v| v + self.f_star),
        }
    }

    /// One outer iteration: exchange, gossip, dual update, fresh local solves.
    pub fn step(&mut self) -> Result<&IterationReport> {
        let n = self.problem.n();
        let graph = self.gm.graph();
        let lazy = self.cfg.method.is_lazy();

        // decide and exchange
        let mut sent = vec![true; n];
        let mut lhs = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        if lazy {
            for i in 0..n {
                let r = self.lazy[i].rhs(self.mu_min);
                let dec = lazy_check(
                    self.theta_hat.column(i).as_slice(),
                    self.theta.column(i).as_slice(),
                    self.delays[i],
                    self.cfg.big_d,
                    r,
                );
                sent[i] = !dec.skip;
                lhs[i] = dec.lhs;
                rhs[i] = dec.rhs;
            }
        }
        let mut messages = 0u64;
        for (j, &sent_j) in sent.iter().enumerate() {
            if !sent_j {
                self.delays[j] += 1;
                continue;
            }
            self.delays[j] = 0;
            messages += graph.degree(j) as u64;
            if lazy {
                let q: DVector<f64> = self.theta.column(j) - self.theta_hat.column(j);
                self.cache.column_mut(j).axpy(self.gm.weight(j, j), &q, 1.0);
                for &i in graph.neighbors(j) {
                    self.cache.column_mut(i).axpy(self.gm.weight(i, j), &q, 1.0);
                }
            }
            self.theta_hat.set_column(j, &self.theta.column(j));
        }
        self.max_delay = self.max_delay.max(self.delays.iter().copied().max().unwrap_or(0));
        let fresh = &self.theta_hat * self.gm.matrix();
        let cache_error = if lazy {
            let scale = fresh.amax().max(1.0);
            max_abs_diff(&self.cache, &fresh) / scale
        } else {
            self.cache = fresh;
            0.0
        };
        self.max_cache_error = self.max_cache_error.max(cache_error);
        if !(cache_error <= CACHE_TOLERANCE) {
            return Err(Error::CacheCoherence { iteration: self.k, error: cache_error });
        }

        // gossip direction
        let direction = match &self.plan {
            Some(plan) => {
                messages += (plan.rounds() as u64 - 1) * graph.full_round_messages();
                accelerated_gossip(&self.theta_hat, self.gm, plan, Some(&self.cache))?
            }
            None => self.cache.clone(),
        };

        // dual update
        let y_next = &self.x - direction * self.cfg.eta;
        let x_next = &y_next + (&y_next - &self.y) * self.momentum;
        if lazy {
            for i in 0..n {
                let delta = dist_sq(self.x.column(i).as_slice(), x_next.column(i).as_slice());
                self.lazy[i].push(delta);
            }
        }
        self.x = x_next;
        self.y = y_next;
        self.k += 1;

        // fresh local solves at xᵏ⁺¹, warm-started at Θᵏ
        let grad_evals = self.solve_all()?;

        let report = IterationReport { iter: self.k - 1, sent, messages, grad_evals, lhs, rhs, cache_error };
        self.counters.record(&report);
        self.last_report = Some(report);

        self.subopt = self.primal_subopt();
        let row = self.row(self.k);
        self.rows.push(row);
        let guard = DIVERGENCE_FACTOR * self.initial_subopt.abs().max(1e-12);
        if !self.subopt.is_finite() || self.subopt > guard {
            return Err(Error::Diverged {
                iteration: self.k,
                subopt: self.subopt,
                partial: Box::new(self.trace_snapshot()),
            });
        }
        Ok(self.last_report.as_ref().expect("just set"))
    }

    fn solve_all(&mut self) -> Result<u64> {
        let n = self.problem.n();
        let (problem, inner, seed, k) = (self.problem, self.inner, self.seed, self.k);
        let x = &self.x;
        let warm = &self.theta;
        let solve = |i: usize| -> Result<(DVector<f64>, u64)> {
            let xi = x.column(i);
            let obj = problem.objective(i);
            if inner.solver == SolverKind::Exact {
                exact_dual_gradient(obj, xi.as_slice())
            } else {
                let mut rng = worker_rng(seed, i, k);
                solve_subproblem(obj, xi.as_slice(), warm.column(i).as_slice(), &inner, &mut rng)
            }
        };
        let results: Vec<Result<(DVector<f64>, u64)>> = if self.threads <= 1 || n < 2 {
            (0..n).map(solve).collect()
        } else {
            let chunk = n.div_ceil(self.threads);
            std::thread::scope(|scope| {
                let handles: Vec<_> = (0..n)
                    .step_by(chunk)
                    .map(|start| {
                        let solve = &solve;
                        scope.spawn(move || (start..(start + chunk).min(n)).map(solve).collect::<Vec<_>>())
                    })
                    .collect();
                handles.into_iter().flat_map(|h| h.join().expect("solver thread panicked")).collect()
            })
        };
        let mut evals = 0;
        for (i, r) in results.into_iter().enumerate() {
            let (t, e) = r?;
            self.theta.set_column(i, &t);
            evals += e;
        }
        Ok(evals)
    }

    fn trace_snapshot(&self) -> RunTrace {
        let graph = self.gm.graph();
        RunTrace {
            meta: TraceMeta {
                method: self.cfg.method,
                seed: self.seed,
                n: self.problem.n(),
                dim: self.problem.dim(),
                edges: graph.num_edges(),
                eta: self.cfg.eta,
                s: self.cfg.s,
                gamma: self.cfg.gamma,
                c: self.cfg.c,
                big_d: self.cfg.big_d,
                k: self.plan.as_ref().map_or(1, ChebyshevPlan::rounds),
                chebyshev_bypass: self.plan.as_ref().is_some_and(|p| p.bypass),
                kappa: self.kappa,
                momentum: self.momentum,
                inner: self.inner,
                f_star: self.f_star,
                config_hash: None,
                theory: None,
            },
            rows: self.rows.clone(),
            sends_per_worker: self.counters.sends_per_worker.clone(),
            max_delay: self.max_delay,
            max_cache_error: self.max_cache_error,
            init_grad_evals: self.init_grad_evals,
        }
    }

    pub fn into_trace(self) -> RunTrace {
        self.trace_snapshot()
    }

    pub fn method(&self) -> Method {
        self.cfg.method
    }
}
