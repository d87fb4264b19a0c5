use nalgebra::DVector;

use super::{ProblemInstance, Reference};
use crate::error::{Error, Result};

const MAX_NEWTON: usize = 200;

/// Minimizes `f = Σ_i f_i` to `‖∇f(θ★)‖ ≤ tol`.
///
/// Quadratic instances are solved in closed form; otherwise damped Newton
/// from the origin with Armijo backtracking.
pub fn centralized_solve(p: &ProblemInstance, tol: f64) -> Result<Reference> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be positive, got {tol}")));
    }
    let d = p.dim();
    let mut theta = DVector::zeros(d);
    if p.all_quadratic() {
        let h = p.hessian(theta.as_slice());
        let g = p.gradient(theta.as_slice());
        let chol = h
            .cholesky()
            .ok_or_else(|| Error::Problem("Hessian of f is not positive definite".into()))?;
        theta = chol.solve(&(-g));
        // one refinement step absorbs the round-off of the solve
        let g = p.gradient(theta.as_slice());
        theta -= chol.solve(&g);
        let value = p.value(theta.as_slice());
        return Ok(Reference { theta, value });
    }
    newton(p, theta, tol, MAX_NEWTON)
}

pub(crate) fn newton(
    p: &ProblemInstance,
    mut theta: DVector<f64>,
    tol: f64,
    max_iters: usize,
) -> Result<Reference> {
    let mut value = p.value(theta.as_slice());
    for _ in 0..max_iters {
        let g = p.gradient(theta.as_slice());
        let gnorm = g.norm();
        if !gnorm.is_finite() {
            return Err(Error::NonFinite("reference solve".into()));
        }
        if gnorm <= tol {
            return Ok(Reference { theta, value });
        }
        let h = p.hessian(theta.as_slice());
        let step = h
            .cholesky()
            .ok_or_else(|| Error::Problem("Hessian of f is not positive definite".into()))?
            .solve(&(-&g));
        let slope = g.dot(&step);
        let mut t = 1.0;
        loop {
            let cand = &theta + &step * t;
            let v = p.value(cand.as_slice());
            // near the optimum f stops resolving decreases, so fall back on ‖∇f‖
            if v <= value + 1e-4 * t * slope || p.gradient(cand.as_slice()).norm() < gnorm {
                theta = cand;
                value = v;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NoConvergence(format!(
                    "line search stalled with ‖∇f‖ = {gnorm:e} > {tol:e}"
                )));
            }
        }
    }
    let gnorm = p.gradient(theta.as_slice()).norm();
    if gnorm <= tol {
        Ok(Reference { theta, value })
    } else {
        Err(Error::NoConvergence(format!("{max_iters} Newton steps left ‖∇f‖ = {gnorm:e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_logistic, make_scalar_quadratic, Dataset, PartitionSpec};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn two_scalar_workers() {
        let p = make_scalar_quadratic(&[0.0, 2.0]).unwrap();
        let r = centralized_solve(&p, 1e-12).unwrap();
        assert_relative_eq!(r.theta[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn logistic_matches_grid_search() {
        let ds = Dataset {
            features: DMatrix::from_row_slice(4, 2, &[1.0, 0.5, -0.3, 1.2, 0.8, -1.0, -1.5, -0.2]),
            labels: vec![1.0, 0.0, 1.0, 0.0],
        };
        let part = PartitionSpec { a: 1.0, b: 1.0, seed: 0, counts: vec![2, 2] };
        let p = make_logistic(&ds, 0.01, &part).unwrap();
        let r = centralized_solve(&p, 1e-12).unwrap();
        assert!(p.gradient(r.theta.as_slice()).norm() <= 1e-12);

        // coarse grid, then coordinate polishing with shrinking steps
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in -200..=200 {
            for j in -200..=200 {
                let t = [i as f64 * 0.05, j as f64 * 0.05];
                let v = p.value(&t);
                if v < best.0 {
                    best = (v, t);
                }
            }
        }
        let mut h = 0.05;
        while h > 1e-10 {
            let mut improved = false;
            for (di, dj) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let t = [best.1[0] + di, best.1[1] + dj];
                let v = p.value(&t);
                if v < best.0 {
                    best = (v, t);
                    improved = true;
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        assert!((r.theta[0] - best.1[0]).abs() < 1e-6);
        assert!((r.theta[1] - best.1[1]).abs() < 1e-6);
        assert!(r.value <= best.0 + 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let p = make_scalar_quadratic(&[0.0]).unwrap();
        assert!(centralized_solve(&p, 0.0).is_err());
    }
}
