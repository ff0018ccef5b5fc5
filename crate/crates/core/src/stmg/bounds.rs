//! Empirical check of the perturbation bounds for the midpoint surrogate of
//! a patch matrix.
//!
//! With `S` the exact patch matrix, `S̃` its surrogate and
//! `ε = ‖S̃ - S‖ ‖S^{-1}‖ < 1` (spectral norms), the Neumann series gives
//!
//! 1. `‖S̃^{-1}‖ <= ‖S^{-1}‖ / (1 - ε)`,
//! 2. `‖I - S^{-1} S̃‖ <= ε`,
//! 3. `(1 - ε) s_min(S) <= s_min(S̃)` and `s_max(S̃) <= (1 + ε) s_max(S)`.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use super::vanka::{patch_convection, patch_matrix, CellMatrices, VankaMode};
use crate::slab::SlabOperator;

/// Measured quantities of one exact/surrogate pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurrogateBounds {
    /// `‖S̃ - S‖`.
    pub perturbation: f64,
    /// `‖S̃ - S‖ ‖S^{-1}‖`.
    pub epsilon: f64,
    pub inverse_norm_exact: f64,
    pub inverse_norm_surrogate: f64,
    /// `‖I - S^{-1} S̃‖`.
    pub approximation: f64,
    pub smin_exact: f64,
    pub smax_exact: f64,
    pub smin_surrogate: f64,
    pub smax_surrogate: f64,
}

impl SurrogateBounds {
    /// Inverse bound, with relative rounding slack `slack`.
    pub fn inverse_bound_holds(&self, slack: f64) -> bool {
        self.epsilon < 1.0 && self.inverse_norm_surrogate <= self.inverse_norm_exact / (1.0 - self.epsilon) * (1.0 + slack)
    }

    pub fn approximation_holds(&self, slack: f64) -> bool {
        self.approximation <= self.epsilon * (1.0 + slack) + slack
    }

    pub fn singular_values_hold(&self, slack: f64) -> bool {
        self.smin_surrogate >= (1.0 - self.epsilon) * self.smin_exact * (1.0 - slack)
            && self.smax_surrogate <= (1.0 + self.epsilon) * self.smax_exact * (1.0 + slack)
    }

    pub fn all_hold(&self, slack: f64) -> bool {
        self.inverse_bound_holds(slack) && self.approximation_holds(slack) && self.singular_values_hold(slack)
    }
}

fn extreme_singular_values(m: &Mat<f64>) -> (f64, f64) {
    let s = m.singular_values().expect("SVD converges");
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// Evaluates the bounds for the exact matrix `exact` and its surrogate.
pub fn surrogate_bounds(exact: &Mat<f64>, surrogate: &Mat<f64>) -> SurrogateBounds {
    let n = exact.nrows();
    let (smin_exact, smax_exact) = extreme_singular_values(exact);
    let (smin_surrogate, smax_surrogate) = extreme_singular_values(surrogate);
    let perturbation = extreme_singular_values(&(surrogate - exact)).1;
    let exact_inv = exact.partial_piv_lu().inverse();
    let approx = Mat::<f64>::identity(n, n) - &exact_inv * surrogate;
    SurrogateBounds {
        perturbation,
        epsilon: perturbation / smin_exact,
        inverse_norm_exact: 1.0 / smin_exact,
        inverse_norm_surrogate: 1.0 / smin_surrogate,
        approximation: extreme_singular_values(&approx).1,
        smin_exact,
        smax_exact,
        smin_surrogate,
        smax_surrogate,
    }
}

/// Exact and surrogate patch matrices of `cell` at the per-node velocities.
pub fn patch_pair(op: &SlabOperator, linear: &[CellMatrices], velocities: &[Vec<f64>], cell: usize) -> (Mat<f64>, Mat<f64>) {
    let exact = patch_matrix(op, linear, &patch_convection(op, velocities, VankaMode::Exact), cell);
    let surrogate = patch_matrix(op, linear, &patch_convection(op, velocities, VankaMode::Surrogate), cell);
    (exact, surrogate)
}
