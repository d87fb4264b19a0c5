use nalgebra::{DMatrix, DVector};

use super::{Dataset, LocalObjective, PartitionSpec, ProblemInstance};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq};

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy with `λ‖θ‖²` on every component:
/// `f_j(θ) = −b_j log σ(a_jᵀθ) − (1 − b_j) log σ(−a_jᵀθ) + λ‖θ‖²`.
#[derive(Clone, Debug)]
pub struct Logistic {
    /// One sample per row.
    features: DMatrix<f64>,
    labels: Vec<f64>,
    lambda: f64,
    row_norms_sq: Vec<f64>,
    /// Row-major copy for fast per-sample access.
    rows: Vec<f64>,
}

impl Logistic {
    pub fn new(features: DMatrix<f64>, labels: Vec<f64>, lambda: f64) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::Problem("empty worker shard".into()));
        }
        if features.nrows() != labels.len() {
            return Err(Error::Dimension {
                expected: format!("{} labels", features.nrows()),
                got: labels.len().to_string(),
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::Problem(format!("λ must be positive, got {lambda}")));
        }
        if let Some(bad) = labels.iter().find(|&&b| b != 0.0 && b != 1.0) {
            return Err(Error::Problem(format!("labels must be 0 or 1, found {bad}")));
        }
        let d = features.ncols();
        let mut rows = Vec::with_capacity(features.len());
        for r in features.row_iter() {
            rows.extend(r.iter());
        }
        let row_norms_sq = (0..features.nrows()).map(|j| norm_sq(&rows[j * d..(j + 1) * d])).collect();
        Ok(Self { features, labels, lambda, row_norms_sq, rows })
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Curvature comes only from the penalty: `μ = 2λ`.
    pub fn mu(&self) -> f64 {
        2.0 * self.lambda
    }

    /// `max_j ‖a_j‖²/4 + 2λ`.
    pub fn l_smooth(&self) -> f64 {
        self.row_norms_sq.iter().copied().fold(0.0, f64::max) / 4.0 + 2.0 * self.lambda
    }

    /// Smoothness constant of component `j`.
    pub fn component_l(&self, j: usize) -> f64 {
        self.row_norms_sq[j] / 4.0 + 2.0 * self.lambda
    }

    #[inline]
    fn row(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.rows[j * d..(j + 1) * d]
    }

    pub(super) fn component_value(&self, j: usize, theta: &[f64]) -> f64 {
        let z = dot(self.row(j), theta);
        softplus(z) - self.labels[j] * z + self.lambda * norm_sq(theta)
    }

    pub(super) fn value(&self, theta: &[f64]) -> f64 {
        let loss: f64 = (0..self.m())
            .map(|j| {
                let z = dot(self.row(j), theta);
                softplus(z) - self.labels[j] * z
            })
            .sum();
        loss / self.m() as f64 + self.lambda * norm_sq(theta)
    }

    pub(super) fn component_gradient_into(&self, j: usize, theta: &[f64], out: &mut [f64]) {
        let a = self.row(j);
        let r = sigmoid(dot(a, theta)) - self.labels[j];
        let two_lambda = 2.0 * self.lambda;
        for ((o, &ak), &tk) in out.iter_mut().zip(a).zip(theta) {
            *o = r * ak + two_lambda * tk;
        }
    }

    pub(super) fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        let two_lambda = 2.0 * self.lambda;
        for (o, &t) in out.iter_mut().zip(theta) {
            *o = two_lambda * t;
        }
        let scale = 1.0 / self.m() as f64;
        for j in 0..self.m() {
            let a = self.row(j);
            let r = (sigmoid(dot(a, theta)) - self.labels[j]) * scale;
            for (o, &ak) in out.iter_mut().zip(a) {
                *o += r * ak;
            }
        }
    }

    pub(super) fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut h = DMatrix::identity(d, d) * (2.0 * self.lambda);
        let scale = 1.0 / self.m() as f64;
        for j in 0..self.m() {
            let a = DVector::from_column_slice(self.row(j));
            let s = sigmoid(a.dot(&DVector::from_column_slice(theta)));
            h.ger(s * (1.0 - s) * scale, &a, &a, 1.0);
        }
        h
    }
}

/// Splits the dataset over workers by `partition.counts`, in file order.
pub fn make_logistic(dataset: &Dataset, lambda: f64, partition: &PartitionSpec) -> Result<ProblemInstance> {
    let total: usize = partition.counts.iter().sum();
    if total != dataset.len() {
        return Err(Error::Problem(format!(
            "partition covers {total} samples but the dataset has {}",
            dataset.len()
        )));
    }
    let mut start = 0;
    let mut objectives = Vec::with_capacity(partition.counts.len());
    for &count in &partition.counts {
        if count == 0 {
            return Err(Error::Problem("empty worker shard".into()));
        }
        let features = dataset.features.rows(start, count).into_owned();
        let labels = dataset.labels[start..start + count].to_vec();
        objectives.push(LocalObjective::logistic(Logistic::new(features, labels, lambda)?)?);
        start += count;
    }
    ProblemInstance::new(objectives)
}
