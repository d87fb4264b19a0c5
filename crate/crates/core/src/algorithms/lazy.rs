//! The per-worker lazy condition
//!
//! ```text
//! ‖θ̂ᵏ⁻¹ − θᵏ‖² ≤ (3/μ²_min)·( Σ_{j=0}^{k−D−1} c^{k−D−j} δʲ
//!                          + Σ_{j=0}^{k−1}   c^{k−j}   δʲ
//!                          + (c + γ)·Σ_{j=k−D}^{k−1} δʲ )
//! ```
//!
//! with `δʲ = ‖xʲ − xʲ⁺¹‖²` and `δʲ = 0` for `j < 0`, evaluated in `O(D)`
//! memory.

use std::collections::VecDeque;

use crate::linalg::dist_sq;

#[derive(Clone, Debug, PartialEq)]
pub struct LazyState {
    c: f64,
    gamma: f64,
    big_d: usize,
    /// `Σ_{j=0}^{k−1} c^{k−j} δʲ`
    acc_a: f64,
    /// `Σ_{j=0}^{k−D−1} c^{k−D−j} δʲ`
    acc_b: f64,
    /// The last `D` deltas, oldest first.
    window: VecDeque<f64>,
}

impl LazyState {
    pub fn new(c: f64, gamma: f64, big_d: usize) -> Self {
        Self { c, gamma, big_d, acc_a: 0.0, acc_b: 0.0, window: VecDeque::with_capacity(big_d + 1) }
    }

    pub fn acc_a(&self) -> f64 {
        self.acc_a
    }

    pub fn acc_b(&self) -> f64 {
        self.acc_b
    }

    pub fn window_sum(&self) -> f64 {
        self.window.iter().sum()
    }

    /// Advances from iteration `k − 1` to `k` given `δᵏ⁻¹`.
    pub fn push(&mut self, delta: f64) {
        debug_assert!(delta >= 0.0);
        self.window.push_back(delta);
        let evicted = if self.window.len() > self.big_d { self.window.pop_front().unwrap_or(0.0) } else { 0.0 };
        self.acc_a = self.c * (self.acc_a + delta);
        self.acc_b = self.c * (self.acc_b + evicted);
    }

    /// Bracketed sum of the right-hand side, before the `3/μ²_min` factor.
    pub fn history(&self) -> f64 {
        self.acc_b + self.acc_a + (self.c + self.gamma) * self.window_sum()
    }

    pub fn rhs(&self, mu_min: f64) -> f64 {
        3.0 / (mu_min * mu_min) * self.history()
    }
}

/// Pushes `δ` and returns the new right-hand side.
pub fn lazy_rhs_update(state: &mut LazyState, delta: f64, mu_min: f64) -> f64 {
    state.push(delta);
    state.rhs(mu_min)
}

/// Outcome of the lazy test for one worker.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LazyDecision {
    pub skip: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Skip iff `‖θ̂ − θ‖² ≤ rhs` and the delay counter is below `D`.
pub fn lazy_check(theta_hat: &[f64], theta_new: &[f64], delay: usize, big_d: usize, rhs: f64) -> LazyDecision {
    let lhs = dist_sq(theta_hat, theta_new);
    LazyDecision { skip: lhs <= rhs && delay < big_d, lhs, rhs }
}
