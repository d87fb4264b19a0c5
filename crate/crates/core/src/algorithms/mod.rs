//! Outer methods on the dual of the consensus problem.
//!
//! All four methods run
//!
//! ```text
//! yᵏ⁺¹ = xᵏ − η·Θ̂ᵏ·G
//! xᵏ⁺¹ = yᵏ⁺¹ + ((√(sκ) − 1)/(√(sκ) + 1))·(yᵏ⁺¹ − yᵏ)
//! ```
//!
//! where `G = U` (SSDA, DLAG) or `G = P_K(U)` (MSDA, MDLAG). SSDA and MSDA use
//! exact dual gradients `Θ̂ᵏ = ∇F★(xᵏ)`; DLAG and MDLAG use warm-started
//! inexact local solves and let workers skip sending when the lazy condition
//! holds.

mod lazy;
mod simulator;

pub use lazy::{lazy_check, lazy_rhs_update, LazyDecision, LazyState};
pub use simulator::{IterationReport, Simulator};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{InnerBudget, SolverKind};
use crate::problems::ProblemInstance;
use crate::topology::GossipMatrix;
use crate::trace::RunTrace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ssda,
    Msda,
    Dlag,
    Mdlag,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ssda, Method::Msda, Method::Dlag, Method::Mdlag];

    /// Whether the method skips messages and solves inexactly.
    pub fn is_lazy(self) -> bool {
        matches!(self, Method::Dlag | Method::Mdlag)
    }

    /// Whether the method gossips with `P_K(U)`.
    pub fn is_multi(self) -> bool {
        matches!(self, Method::Msda | Method::Mdlag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Ssda => "ssda",
            Method::Msda => "msda",
            Method::Dlag => "dlag",
            Method::Mdlag => "mdlag",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssda" => Ok(Method::Ssda),
            "msda" => Ok(Method::Msda),
            "dlag" => Ok(Method::Dlag),
            "mdlag" => Ok(Method::Mdlag),
            other => Err(Error::Parameter(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlgoConfig {
    pub method: Method,
    pub eta: f64,
    /// Momentum inflation, `s ≥ 1`.
    pub s: f64,
    /// Staleness tolerance.
    pub gamma: f64,
    /// Inexactness weight in the lazy condition.
    pub c: f64,
    /// Delay cap.
    pub big_d: usize,
    /// Gossip rounds for MSDA and MDLAG; `None` uses `⌊1/√ζ(U)⌋`.
    pub k: Option<usize>,
    /// Local solver of the lazy methods. SSDA and MSDA always solve exactly.
    pub inner: InnerBudget,
}

impl AlgoConfig {
    /// Exact-oracle baseline.
    pub fn exact(method: Method, eta: f64, s: f64) -> Self {
        Self { method, eta, s, gamma: 0.0, c: 0.0, big_d: 1, k: None, inner: InnerBudget::exact() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::Parameter(format!("η must be positive, got {}", self.eta)));
        }
        if !(self.s >= 1.0) || !self.s.is_finite() {
            return Err(Error::Parameter(format!("s must be at least 1, got {}", self.s)));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Parameter(format!("γ must be non-negative, got {}", self.gamma)));
        }
        if !(self.c >= 0.0 && self.c < 1.0) {
            return Err(Error::Parameter(format!("c must lie in [0, 1), got {}", self.c)));
        }
        if self.big_d == 0 {
            return Err(Error::Parameter("D must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(Error::Parameter("K must be at least 1".into()));
        }
        if self.method.is_lazy() {
            self.inner.validate()?;
        }
        Ok(())
    }

    /// The solver actually used by this method.
    pub fn effective_inner(&self) -> InnerBudget {
        if self.method.is_lazy() {
            self.inner
        } else {
            InnerBudget::exact()
        }
    }

    pub fn uses_exact_solves(&self) -> bool {
        self.effective_inner().solver == SolverKind::Exact
    }
}

/// When to stop a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StopCriteria {
    pub max_iters: usize,
    /// Stop once `f(θ̄) − f★` reaches this value. `None` or a non-finite value
    /// runs all `max_iters` iterations.
    pub target_subopt: Option<f64>,
}

impl StopCriteria {
    pub fn iterations(max_iters: usize) -> Self {
        Self { max_iters, target_subopt: None }
    }

    pub fn done(&self, iter: usize, subopt: f64) -> bool {
        if iter >= self.max_iters {
            return true;
        }
        matches!(self.target_subopt, Some(t) if t.is_finite() && subopt <= t)
    }
}

/// Runs one method until `stop` and returns its trace.
pub fn run(
    problem: &ProblemInstance,
    gm: &GossipMatrix,
    cfg: &AlgoConfig,
    stop: &StopCriteria,
    seed: u64,
) -> Result<RunTrace> {
    let mut sim = Simulator::new(problem, gm, cfg, seed)?;
    while !stop.done(sim.iteration(), sim.subopt()) {
        sim.step()?;
    }
    Ok(sim.into_trace())
}
