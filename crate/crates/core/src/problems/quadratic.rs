use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::{LocalObjective, ProblemInstance};
use crate::error::{Error, Result};

/// `f(θ) = ½θᵀAθ − bᵀθ + offset` with `A` symmetric positive definite.
#[derive(Clone, Debug)]
pub struct QuadraticComponent {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub offset: f64,
}

/// Mean of quadratic components, with the averaged data cached for the
/// closed-form conjugate.
#[derive(Clone, Debug)]
pub struct Quadratic {
    components: Vec<QuadraticComponent>,
    mean_a: DMatrix<f64>,
    mean_b: DVector<f64>,
    mean_offset: f64,
    chol: Cholesky<f64, Dyn>,
}

impl Quadratic {
    pub fn from_components(components: Vec<QuadraticComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Problem("quadratic needs at least one component".into()))?;
        let d = first.b.len();
        for c in &components {
            if c.a.shape() != (d, d) || c.b.len() != d {
                return Err(Error::Dimension {
                    expected: format!("{d}x{d} matrix and length-{d} vector"),
                    got: format!("{}x{} and {}", c.a.nrows(), c.a.ncols(), c.b.len()),
                });
            }
        }
        let m = components.len() as f64;
        let mean_a = components.iter().fold(DMatrix::zeros(d, d), |acc, c| acc + &c.a) / m;
        let mean_b = components.iter().fold(DVector::zeros(d), |acc, c| acc + &c.b) / m;
        let mean_offset = components.iter().map(|c| c.offset).sum::<f64>() / m;
        let chol = Cholesky::new(mean_a.clone())
            .ok_or_else(|| Error::Problem("mean Hessian is not positive definite".into()))?;
        Ok(Self { components, mean_a, mean_b, mean_offset, chol })
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean_b.len()
    }

    pub fn components(&self) -> &[QuadraticComponent] {
        &self.components
    }

    pub fn mean_a(&self) -> &DMatrix<f64> {
        &self.mean_a
    }

    pub fn mean_b(&self) -> &DVector<f64> {
        &self.mean_b
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    pub(super) fn value(&self, theta: &[f64]) -> f64 {
        let t = DVector::from_column_slice(theta);
        0.5 * t.dot(&(&self.mean_a * &t)) - self.mean_b.dot(&t) + self.mean_offset
    }

    pub(super) fn component_value(&self, j: usize, theta: &[f64]) -> f64 {
        let c = &self.components[j];
        let t = DVector::from_column_slice(theta);
        0.5 * t.dot(&(&c.a * &t)) - c.b.dot(&t) + c.offset
    }

    pub(super) fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        mat_vec_minus(&self.mean_a, theta, self.mean_b.as_slice(), out);
    }

    pub(super) fn component_gradient_into(&self, j: usize, theta: &[f64], out: &mut [f64]) {
        let c = &self.components[j];
        mat_vec_minus(&c.a, theta, c.b.as_slice(), out);
    }

    /// `∇f★(x) = Ā⁻¹(x + b̄)`.
    pub fn dual_gradient(&self, x: &[f64]) -> DVector<f64> {
        let rhs = DVector::from_column_slice(x) + &self.mean_b;
        self.chol.solve(&rhs)
    }

    /// `f★(x) = ½(x + b̄)ᵀĀ⁻¹(x + b̄) − offset`.
    pub fn conjugate(&self, x: &[f64]) -> f64 {
        let rhs = DVector::from_column_slice(x) + &self.mean_b;
        let sol = self.chol.solve(&rhs);
        0.5 * rhs.dot(&sol) - self.mean_offset
    }
}

/// `out = A·θ − b` without allocating.
fn mat_vec_minus(a: &DMatrix<f64>, theta: &[f64], b: &[f64], out: &mut [f64]) {
    let d = b.len();
    out.copy_from_slice(b);
    for v in out.iter_mut() {
        *v = -*v;
    }
    let data = a.as_slice();
    for (col, &t) in theta.iter().enumerate() {
        let column = &data[col * d..(col + 1) * d];
        for (o, &aij) in out.iter_mut().zip(column) {
            *o += aij * t;
        }
    }
}

fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

/// Random quadratic instance: `n` workers, `m` components each, dimension `d`.
///
/// `conditioning[i] = (μ_i, L_i)`. Every component's Hessian has spectrum in
/// `[μ_i, L_i]` with both ends attained when `d ≥ 2`, so the stored constants
/// are tight. Linear terms are standard normal.
pub fn make_quadratic(
    n: usize,
    m: usize,
    d: usize,
    conditioning: &[(f64, f64)],
    seed: u64,
) -> Result<ProblemInstance> {
    if d == 0 || m == 0 || n == 0 {
        return Err(Error::Problem("n, m and d must be positive".into()));
    }
    if conditioning.len() != n {
        return Err(Error::Dimension {
            expected: format!("{n} (μ, L) pairs"),
            got: conditioning.len().to_string(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objectives = Vec::with_capacity(n);
    for &(mu, l) in conditioning {
        if !(mu > 0.0) || !(l >= mu) {
            return Err(Error::Problem(format!("need L ≥ μ > 0, got μ = {mu}, L = {l}")));
        }
        let spread = Uniform::new_inclusive(mu, l).expect("μ ≤ L checked above");
        let mut components = Vec::with_capacity(m);
        for j in 0..m {
            let eig: Vec<f64> = (0..d)
                .map(|k| match (d, k) {
                    (1, _) if j == 0 => mu,
                    (1, _) if j == 1 => l,
                    (_, 0) => mu,
                    (_, k) if k == d - 1 => l,
                    _ => spread.sample(&mut rng),
                })
                .collect();
            let q = random_orthogonal(d, &mut rng);
            let a = &q * DMatrix::from_diagonal(&DVector::from_vec(eig)) * q.transpose();
            // exact symmetry
            let a = (&a + a.transpose()) * 0.5;
            let b = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            components.push(QuadraticComponent { a, b, offset: 0.0 });
        }
        objectives.push(LocalObjective::quadratic(Quadratic::from_components(components)?, mu, l)?);
    }
    ProblemInstance::new(objectives)
}

/// One-dimensional instance `f_i(θ) = ½(θ − t_i)²`.
pub fn make_scalar_quadratic(targets: &[f64]) -> Result<ProblemInstance> {
    let objectives = targets
        .iter()
        .map(|&t| {
            let c = QuadraticComponent {
                a: DMatrix::from_element(1, 1, 1.0),
                b: DVector::from_element(1, t),
                offset: 0.5 * t * t,
            };
            LocalObjective::quadratic(Quadratic::from_components(vec![c])?, 1.0, 1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(objectives)
}
