//! Small dense helpers shared by the solvers. Hot loops work on slices to
//! avoid allocating in the inner solvers.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Mean of the columns of a `d × n` matrix.
pub fn column_mean(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.ncols() as f64;
    m.column_sum() / n
}

/// Frobenius norm of `M (I − 11ᵀ/n)`, the distance of the columns from their mean.
pub fn consensus_residual(m: &DMatrix<f64>) -> f64 {
    let mean = column_mean(m);
    m.column_iter()
        .map(|c| (c - &mean).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
