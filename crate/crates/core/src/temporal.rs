//! Temporal DG(k) matrices of one slab and the Kronecker application
//! pattern `(A ⊗ B) X`: one spatial action per temporal block followed by
//! dense mixing of the results.

use crate::elements::{gauss_legendre_reference, TemporalBasis};
use crate::error::{check_len, Result};

/// Temporal matrices of one slab (row-major `(k+1) x (k+1)`).
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalMatrices {
    pub k: usize,
    pub tau: f64,
    pub slab: usize,
    /// `K_ab = ∫ φ_b' φ_a + φ_b(t_{n-1}^+) φ_a(t_{n-1}^+)`.
    pub stiffness: Vec<f64>,
    /// Diagonal of the lumped-exact mass `(τ/2) ω_a`.
    pub mass: Vec<f64>,
    /// Jump coupling to the previous slab trace.
    pub jump: Vec<f64>,
    pub basis: TemporalBasis,
}

impl TemporalMatrices {
    pub fn n(&self) -> usize {
        self.k + 1
    }

    pub fn k_entry(&self, a: usize, b: usize) -> f64 {
        self.stiffness[a * self.n() + b]
    }

    pub fn mass_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            m[a * n + a] = self.mass[a];
        }
        m
    }

    /// Times of the temporal nodes of a slab starting at `t_start`.
    pub fn node_times(&self, t_start: f64) -> Vec<f64> {
        self.basis.nodes().iter().map(|&s| t_start + 0.5 * self.tau * (1.0 + s)).collect()
    }
}

/// Assembles the matrices for degree `k`, slab length `tau` and zero-based
/// slab index `slab`. The jump matrix has the same form for the first slab
/// because the initial value is packed into the last block of the
/// previous-slab vector.
pub fn assemble_temporal(k: usize, tau: f64, slab: usize) -> TemporalMatrices {
    let basis = TemporalBasis::new(k);
    let n = k + 1;
    let gl = gauss_legendre_reference(n);
    let left = basis.eval_all(-1.0);
    let mut stiffness = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let integral = gl.integrate(|t| basis.deriv(b, t) * basis.eval(a, t));
            stiffness[a * n + b] = integral + left[b] * left[a];
        }
    }
    let mass = basis.rule.weights.iter().map(|w| 0.5 * tau * w).collect();
    let mut jump = vec![0.0; n * n];
    for a in 0..n {
        jump[a * n + k] = left[a];
    }
    TemporalMatrices { k, tau, slab, stiffness, mass, jump, basis }
}

/// `Y^i = Σ_a A_ia · action(X^a)` for `X` made of `n` contiguous blocks.
pub fn kron_apply(
    a: &[f64],
    n: usize,
    mut action: impl FnMut(&[f64], &mut [f64]),
    x: &[f64],
    m_out: usize,
) -> Result<Vec<f64>> {
    check_len(n * n, a.len())?;
    if n == 0 || x.len() % n != 0 {
        return Err(crate::Error::Shape { expected: n, got: x.len() });
    }
    let m_in = x.len() / n;
    let mut z = vec![0.0; n * m_out];
    for b in 0..n {
        action(&x[b * m_in..(b + 1) * m_in], &mut z[b * m_out..(b + 1) * m_out]);
    }
    let mut y = vec![0.0; n * m_out];
    for i in 0..n {
        for b in 0..n {
            let c = a[i * n + b];
            if c != 0.0 {
                crate::linalg::axpy(c, &z[b * m_out..(b + 1) * m_out], &mut y[i * m_out..(i + 1) * m_out]);
            }
        }
    }
    Ok(y)
}

/// `(C ⊗ M_h) V_{n-1}` from the previous trace with a single mass action.
pub fn jump_apply(
    tm: &TemporalMatrices,
    mass_action: impl FnOnce(&[f64], &mut [f64]),
    v_prev: &[f64],
) -> Vec<f64> {
    let m = v_prev.len();
    let n = tm.n();
    let mut mv = vec![0.0; m];
    mass_action(v_prev, &mut mv);
    let mut y = vec![0.0; n * m];
    for a in 0..n {
        let c = tm.jump[a * n + tm.k];
        for (yi, &v) in y[a * m..(a + 1) * m].iter_mut().zip(&mv) {
            *yi = c * v;
        }
    }
    y
}
