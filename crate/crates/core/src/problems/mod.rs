//! Local finite-sum objectives and problem instances.
//!
//! Worker `i` holds `f_i(θ) = (1/m) Σ_j f_{i,j}(θ)` where every component is
//! `L_i`-smooth and `μ_i`-strongly convex. The global objective is
//! `f(θ) = Σ_i f_i(θ)`.

mod libsvm;
mod logistic;
mod partition;
mod quadratic;
mod reference;

pub use libsvm::{load_libsvm, parse_libsvm, Dataset, LibsvmOptions, DEFAULT_NNZ_CAP};
pub use logistic::{make_logistic, Logistic};
pub use partition::{partition_uneven, PartitionSpec};
pub use quadratic::{make_quadratic, make_scalar_quadratic, Quadratic, QuadraticComponent};
pub use reference::centralized_solve;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Quadratic,
    LogisticL2,
}

#[derive(Clone, Debug)]
enum Body {
    Quadratic(Quadratic),
    Logistic(Logistic),
}

/// One worker's objective with its certified constants.
#[derive(Clone, Debug)]
pub struct LocalObjective {
    body: Body,
    l_smooth: f64,
    mu: f64,
}

impl LocalObjective {
    pub fn quadratic(q: Quadratic, mu: f64, l_smooth: f64) -> Result<Self> {
        Self::with_constants(Body::Quadratic(q), mu, l_smooth)
    }

    pub fn logistic(l: Logistic) -> Result<Self> {
        let (mu, l_smooth) = (l.mu(), l.l_smooth());
        Self::with_constants(Body::Logistic(l), mu, l_smooth)
    }

    fn with_constants(body: Body, mu: f64, l_smooth: f64) -> Result<Self> {
        if !(mu > 0.0) || !(l_smooth >= mu) || !l_smooth.is_finite() {
            return Err(Error::Problem(format!("need L ≥ μ > 0, got μ = {mu}, L = {l_smooth}")));
        }
        Ok(Self { body, l_smooth, mu })
    }

    pub fn kind(&self) -> ObjectiveKind {
        match self.body {
            Body::Quadratic(_) => ObjectiveKind::Quadratic,
            Body::Logistic(_) => ObjectiveKind::LogisticL2,
        }
    }

    /// Number of components.
    pub fn m(&self) -> usize {
        match &self.body {
            Body::Quadratic(q) => q.m(),
            Body::Logistic(l) => l.m(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.body {
            Body::Quadratic(q) => q.dim(),
            Body::Logistic(l) => l.dim(),
        }
    }

    /// Smoothness constant shared by every component.
    pub fn l_smooth(&self) -> f64 {
        self.l_smooth
    }

    /// Strong-convexity constant shared by every component.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.l_smooth / self.mu
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        match &self.body {
            Body::Quadratic(q) => q.value(theta),
            Body::Logistic(l) => l.value(theta),
        }
    }

    /// `∇f_i(θ)` written into `out`.
    pub fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        match &self.body {
            Body::Quadratic(q) => q.gradient_into(theta, out),
            Body::Logistic(l) => l.gradient_into(theta, out),
        }
    }

    pub fn gradient(&self, theta: &[f64]) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        self.gradient_into(theta, g.as_mut_slice());
        g
    }

    /// `∇f_{i,j}(θ)` written into `out`.
    pub fn component_gradient_into(&self, j: usize, theta: &[f64], out: &mut [f64]) {
        match &self.body {
            Body::Quadratic(q) => q.component_gradient_into(j, theta, out),
            Body::Logistic(l) => l.component_gradient_into(j, theta, out),
        }
    }

    pub fn component_value(&self, j: usize, theta: &[f64]) -> f64 {
        match &self.body {
            Body::Quadratic(q) => q.component_value(j, theta),
            Body::Logistic(l) => l.component_value(j, theta),
        }
    }

    pub fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        match &self.body {
            Body::Quadratic(q) => q.mean_a().clone(),
            Body::Logistic(l) => l.hessian(theta),
        }
    }

    /// Closed-form `∇f_i★(x)`, available for quadratics only.
    pub fn dual_gradient(&self, x: &[f64]) -> Option<DVector<f64>> {
        match &self.body {
            Body::Quadratic(q) => Some(q.dual_gradient(x)),
            Body::Logistic(_) => None,
        }
    }

    /// Closed-form conjugate value `f_i★(x)`, quadratics only.
    pub fn conjugate(&self, x: &[f64]) -> Option<f64> {
        match &self.body {
            Body::Quadratic(q) => Some(q.conjugate(x)),
            Body::Logistic(_) => None,
        }
    }

    pub fn has_dual_oracle(&self) -> bool {
        matches!(self.body, Body::Quadratic(_))
    }

    pub fn as_quadratic(&self) -> Option<&Quadratic> {
        match &self.body {
            Body::Quadratic(q) => Some(q),
            Body::Logistic(_) => None,
        }
    }
}

/// Reference optimum of `f = Σ_i f_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Reference {
    pub theta: DVector<f64>,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constants {
    pub mu_min: f64,
    pub l_max: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    /// `L_max / μ_min`.
    pub kappa_f: f64,
}

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    d: usize,
    objectives: Vec<LocalObjective>,
    constants: Constants,
    reference: Option<Reference>,
}

impl ProblemInstance {
    pub fn new(objectives: Vec<LocalObjective>) -> Result<Self> {
        let first = objectives
            .first()
            .ok_or_else(|| Error::Problem("problem needs at least one worker".into()))?;
        let d = first.dim();
        if let Some(bad) = objectives.iter().position(|o| o.dim() != d) {
            return Err(Error::Dimension {
                expected: format!("dimension {d}"),
                got: format!("worker {bad} has dimension {}", objectives[bad].dim()),
            });
        }
        let mu_min = objectives.iter().map(LocalObjective::mu).fold(f64::INFINITY, f64::min);
        let l_max = objectives.iter().map(LocalObjective::l_smooth).fold(0.0, f64::max);
        let kappa_min = objectives.iter().map(LocalObjective::kappa).fold(f64::INFINITY, f64::min);
        let kappa_max = objectives.iter().map(LocalObjective::kappa).fold(0.0, f64::max);
        let constants = Constants { mu_min, l_max, kappa_min, kappa_max, kappa_f: l_max / mu_min };
        Ok(Self { d, objectives, constants, reference: None })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[LocalObjective] {
        &self.objectives
    }

    pub fn objective(&self, i: usize) -> &LocalObjective {
        &self.objectives[i]
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn reference(&self) -> Option<&Reference> {
        self.reference.as_ref()
    }

    pub fn set_reference(&mut self, reference: Reference) {
        self.reference = Some(reference);
    }

    /// Solves for the reference optimum and stores it.
    pub fn with_reference(mut self, tol: f64) -> Result<Self> {
        let r = centralized_solve(&self, tol)?;
        self.reference = Some(r);
        Ok(self)
    }

    /// Largest number of components on any worker.
    pub fn max_m(&self) -> usize {
        self.objectives.iter().map(LocalObjective::m).max().unwrap_or(0)
    }

    /// `f(θ) = Σ_i f_i(θ)`.
    pub fn value(&self, theta: &[f64]) -> f64 {
        self.objectives.iter().map(|o| o.value(theta)).sum()
    }

    pub fn gradient(&self, theta: &[f64]) -> DVector<f64> {
        let mut total = DVector::zeros(self.d);
        let mut g = DVector::zeros(self.d);
        for o in &self.objectives {
            o.gradient_into(theta, g.as_mut_slice());
            total += &g;
        }
        total
    }

    pub fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for o in &self.objectives {
            h += o.hessian(theta);
        }
        h
    }

    pub fn all_quadratic(&self) -> bool {
        self.objectives.iter().all(LocalObjective::has_dual_oracle)
    }

    /// `F★(Y) = Σ_i f_i★(y_i)` for quadratic instances.
    pub fn dual_value(&self, y: &DMatrix<f64>) -> Option<f64> {
        let mut total = 0.0;
        for (i, o) in self.objectives.iter().enumerate() {
            let col: Vec<f64> = y.column(i).iter().copied().collect();
            total += o.conjugate(&col)?;
        }
        Some(total)
    }
}
