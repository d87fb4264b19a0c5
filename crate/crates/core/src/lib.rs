//! Simulator for decentralized dual accelerated gradient methods.
//!
//! Workers on a graph solve `min Σ_i f_i(θ)` by running Nesterov's method on
//! the dual of the consensus-constrained problem. Four outer methods are
//! provided: the exact-oracle baselines SSDA and MSDA and their variants
//! DLAG and MDLAG, which use warm-started fixed-budget local solves and skip
//! neighbor messages when the cached dual gradient is still accurate enough.
//!
//! Every run keeps exact counts of iterations, directed vector messages, and
//! component gradient evaluations so the complexity trade-offs between the
//! methods can be measured.

pub mod algorithms;
pub mod error;
pub mod inner;
pub mod linalg;
pub mod metrics;
pub mod problems;
pub mod topology;
pub mod trace;

pub use algorithms::{run, AlgoConfig, IterationReport, Method, Simulator, StopCriteria};
pub use error::{Error, Result};
pub use inner::{InnerBudget, SolverKind};
pub use problems::{LocalObjective, ProblemInstance};
pub use topology::{ChebyshevPlan, GossipMatrix, Graph, GraphKind};
pub use trace::{RunTrace, TraceRow};
