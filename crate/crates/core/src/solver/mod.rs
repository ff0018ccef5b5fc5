//! Nonlinear slab solver and time march.

pub mod fgmres;
pub mod march;
pub mod newton;

pub use fgmres::{fgmres, FgmresOutcome};
pub use march::{march, MarchSetup, Trajectory};
pub use newton::{armijo, ew_forcing, newton_solve_slab, EwVariant, LineSearch, MeritWindow, NewtonConfig};

use crate::error::Result;
use crate::linalg::dot;
use crate::operators::SpatialOps;
use crate::slab::{SlabOperator, SlabVector};

/// Preconditioner of the slab Jacobian.
pub trait SlabPreconditioner {
    /// Binds the preconditioner to the slab operator of a new slab.
    fn begin_slab(&mut self, op: &SlabOperator) -> Result<()>;
    /// Moves the linearization to `state`; smoother data is rebuilt only when
    /// `rebuild` is set.
    fn update(&mut self, state: &SlabVector, rebuild: bool) -> Result<()>;
    /// `z ≈ J^{-1} r`.
    fn apply(&mut self, r: &[f64], z: &mut [f64]);
}

/// No preconditioning.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityPreconditioner;

impl SlabPreconditioner for IdentityPreconditioner {
    fn begin_slab(&mut self, _: &SlabOperator) -> Result<()> {
        Ok(())
    }

    fn update(&mut self, _: &SlabVector, _: bool) -> Result<()> {
        Ok(())
    }

    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Mean-value gauge of the pressure for pure-Dirichlet problems.
///
/// Coefficient vectors are projected onto the mean-zero subspace with
/// `p - (c^T M p / c^T M c) c`. Residual pressure rows live in the dual
/// space and are projected with `r - (c^T r / c^T M c) M c`, which removes
/// the component the Jacobian range cannot reach.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureGauge {
    pub constant: Vec<f64>,
    pub mass_constant: Vec<f64>,
    pub measure: f64,
}

impl PressureGauge {
    pub fn new(ops: &SpatialOps) -> Self {
        let constant = ops.pressure.constant();
        let mass_constant = ops.apply_pressure_mass(&constant).expect("sizes match");
        let measure = dot(&constant, &mass_constant);
        PressureGauge { constant, mass_constant, measure }
    }

    /// Gauge for `ops` if its mesh has no Neumann faces.
    pub fn for_problem(ops: &SpatialOps) -> Option<Self> {
        ops.is_pure_dirichlet().then(|| Self::new(ops))
    }

    /// Mean value `∫ p / |Ω|`.
    pub fn mean(&self, p: &[f64]) -> f64 {
        dot(&self.mass_constant, p) / self.measure
    }

    pub fn project(&self, p: &mut [f64]) {
        let m = self.mean(p);
        crate::linalg::axpy(-m, &self.constant, p);
    }

    pub fn project_dual(&self, r: &mut [f64]) {
        let m = dot(&self.constant, r) / self.measure;
        crate::linalg::axpy(-m, &self.mass_constant, r);
    }

    pub fn project_slab(&self, z: &mut [f64], k: usize, nv: usize) {
        let np = self.constant.len();
        for a in 0..=k {
            let off = (k + 1) * nv + a * np;
            self.project(&mut z[off..off + np]);
        }
    }

    pub fn project_slab_dual(&self, z: &mut [f64], k: usize, nv: usize) {
        let np = self.constant.len();
        for a in 0..=k {
            let off = (k + 1) * nv + a * np;
            self.project_dual(&mut z[off..off + np]);
        }
    }
}

/// Subtracts the mean value from every temporal pressure block.
pub fn project_pressure_mean(gauge: &PressureGauge, z: &mut SlabVector) {
    let (k, nv) = (z.k, z.nv);
    gauge.project_slab(&mut z.data, k, nv);
}

/// Statistics of one slab solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlabStats {
    pub slab: usize,
    pub newton_iterations: usize,
    /// FGMRES iterations per Newton step.
    pub krylov_iterations: Vec<usize>,
    /// Residual norms in the mass-weighted norm, starting with the initial one.
    pub residuals: Vec<f64>,
    pub step_lengths: Vec<f64>,
    pub backtracks: Vec<usize>,
    pub forcing_terms: Vec<f64>,
    pub rebuilds: usize,
    /// Newton steps whose FGMRES solve hit the iteration cap.
    pub cap_hits: usize,
    pub converged: bool,
}

/// Statistics of a whole march.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveStats {
    pub slabs: Vec<SlabStats>,
}

impl SolveStats {
    /// Average number of Newton steps per slab.
    pub fn mean_newton(&self) -> f64 {
        if self.slabs.is_empty() {
            return 0.0;
        }
        self.slabs.iter().map(|s| s.newton_iterations as f64).sum::<f64>() / self.slabs.len() as f64
    }

    /// Average number of FGMRES iterations per Newton step.
    pub fn mean_krylov(&self) -> f64 {
        let steps: usize = self.slabs.iter().map(|s| s.krylov_iterations.len()).sum();
        if steps == 0 {
            return 0.0;
        }
        let total: usize = self.slabs.iter().flat_map(|s| &s.krylov_iterations).sum();
        total as f64 / steps as f64
    }

    pub fn max_krylov(&self) -> usize {
        self.slabs.iter().flat_map(|s| s.krylov_iterations.iter().copied()).max().unwrap_or(0)
    }

    pub fn rebuilds(&self) -> usize {
        self.slabs.iter().map(|s| s.rebuilds).sum()
    }

    pub fn cap_hits(&self) -> usize {
        self.slabs.iter().map(|s| s.cap_hits).sum()
    }

    pub fn all_converged(&self) -> bool {
        self.slabs.iter().all(|s| s.converged)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{all_dirichlet, build_hierarchy};
    use crate::operators::NitscheConfig;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn ops() -> SpatialOps {
        let h = build_hierarchy(&[0.0, 0.0], &[2.0, 1.0], 1, 3, &all_dirichlet).unwrap();
        SpatialOps::new(h.level(2), 2, NitscheConfig::new(1.0))
    }

    #[test]
    fn projection_of_constants_and_mean_zero_fields() {
        let o = ops();
        let g = PressureGauge::new(&o);
        assert!((g.measure - 2.0).abs() < 1e-14);
        let mut c: Vec<f64> = g.constant.iter().map(|x| 3.5 * x).collect();
        g.project(&mut c);
        assert!(c.iter().all(|x| x.abs() < 1e-14));

        let mut rng = StdRng::seed_from_u64(1);
        let mut p: Vec<f64> = (0..o.np()).map(|_| rng.random::<f64>()).collect();
        g.project(&mut p);
        assert!(g.mean(&p).abs() <= 1e-13 * crate::linalg::norm2(&p));
        let before = p.clone();
        g.project(&mut p);
        for (a, b) in p.iter().zip(&before) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut r: Vec<f64> = (0..o.np()).map(|_| rng.random::<f64>()).collect();
        g.project_dual(&mut r);
        assert!(dot(&g.constant, &r).abs() < 1e-13);
    }

    #[test]
    fn stats_aggregates() {
        let s = SolveStats {
            slabs: vec![
                SlabStats { newton_iterations: 2, krylov_iterations: vec![4, 6], converged: true, ..Default::default() },
                SlabStats { newton_iterations: 4, krylov_iterations: vec![1, 1, 1, 1], converged: true, ..Default::default() },
            ],
        };
        assert_eq!(s.mean_newton(), 3.0);
        assert!((s.mean_krylov() - 14.0 / 6.0).abs() < 1e-15);
        assert_eq!(s.max_krylov(), 6);
        assert!(s.all_converged());
    }
}
