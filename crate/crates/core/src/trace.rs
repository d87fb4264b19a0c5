//! Per-iteration records of a run.

use serde::Serialize;

use crate::algorithms::Method;
use crate::inner::InnerBudget;
use crate::metrics::TheoryParams;

/// One row per completed iteration; row 0 is the initial state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    /// `f(θ̄) − f★` with `θ̄` the mean of the fresh local dual gradients.
    pub subopt: f64,
    /// `‖Θ(I − 11ᵀ/n)‖_F`.
    pub consensus: f64,
    /// Cumulative directed vector messages.
    pub messages: u64,
    /// Cumulative component-gradient evaluations.
    pub grad_evals: u64,
    /// Workers that skipped this iteration's exchange.
    pub skips: usize,
    /// `F★(y) + f★`, quadratic instances only.
    pub dual_subopt: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceMeta {
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub dim: usize,
    pub edges: usize,
    pub eta: f64,
    pub s: f64,
    pub gamma: f64,
    pub c: f64,
    pub big_d: usize,
    /// Gossip rounds per iteration.
    pub k: usize,
    pub chebyshev_bypass: bool,
    /// Condition number driving the momentum.
    pub kappa: f64,
    pub momentum: f64,
    pub inner: InnerBudget,
    pub f_star: f64,
    pub config_hash: Option<String>,
    pub theory: Option<TheoryParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTrace {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
    pub sends_per_worker: Vec<u64>,
    /// Largest delay counter seen on any worker.
    pub max_delay: usize,
    /// Largest deviation of a neighbor cache from its recomputation.
    pub max_cache_error: f64,
    /// Component-gradient evaluations spent on the initial exact solves.
    pub init_grad_evals: u64,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("a trace always holds row 0")
    }

    /// First iteration whose suboptimality is at most `eps`.
    pub fn first_below(&self, eps: f64) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.subopt <= eps)
    }

    /// Directed messages per iteration in units of full rounds (`2|E|`).
    pub fn edge_utilization(&self) -> f64 {
        let iters = self.iterations();
        if iters == 0 {
            return 0.0;
        }
        self.last().messages as f64 / (2.0 * self.meta.edges as f64 * iters as f64)
    }
}
