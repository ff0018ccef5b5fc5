//! Slab-by-slab time march.

use std::sync::Arc;

use super::newton::{newton_solve_slab, NewtonConfig};
use super::{PressureGauge, SlabPreconditioner, SolveStats};
use crate::error::{check_len, Result};
use crate::geometry::TimePartition;
use crate::operators::{SharedFn, SpatialOps};
use crate::slab::{SlabOperator, SlabProblem, SlabVector};
use crate::temporal::assemble_temporal;

/// Global problem on the finest mesh.
#[derive(Clone)]
pub struct MarchSetup {
    pub ops: Arc<SpatialOps>,
    pub k: usize,
    pub partition: TimePartition,
    pub forcing: SharedFn,
    pub dirichlet: SharedFn,
    pub convection: bool,
    /// Initial velocity coefficients.
    pub initial: Vec<f64>,
    pub newton: NewtonConfig,
}

/// Slab solutions of a march.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub partition: TimePartition,
    pub k: usize,
    pub slabs: Vec<SlabVector>,
}

impl Trajectory {
    /// Velocity at the final time.
    pub fn final_velocity(&self) -> Option<&[f64]> {
        self.slabs.last().map(SlabVector::end_trace)
    }
}

/// Builds the slab operator of slab `n`.
pub fn slab_operator(setup: &MarchSetup, n: usize) -> SlabOperator {
    let (t0, _) = setup.partition.interval(n);
    let tm = assemble_temporal(setup.k, setup.partition.tau(n), n);
    SlabOperator::new(setup.ops.clone(), tm, t0, setup.convection, setup.dirichlet.clone())
}

/// Solves all slabs in order.
///
/// Each Newton solve starts from the previous end-time velocity and pressure
/// copied into every temporal block. Slabs that miss the Newton tolerance
/// are recorded in the statistics; a non-finite residual aborts the march.
pub fn march(setup: &MarchSetup, precond: &mut dyn SlabPreconditioner) -> Result<(Trajectory, SolveStats)> {
    let (nv, np, k) = (setup.ops.nv(), setup.ops.np(), setup.k);
    check_len(nv, setup.initial.len())?;
    let gauge = PressureGauge::for_problem(&setup.ops);
    let mut trace = setup.initial.clone();
    let mut pressure = vec![0.0; np];
    let mut slabs = Vec::with_capacity(setup.partition.n_slabs());
    let mut stats = SolveStats::default();
    for n in 0..setup.partition.n_slabs() {
        let problem = SlabProblem::new(slab_operator(setup, n), setup.forcing.clone(), trace.clone());
        let mut guess = SlabVector::zeros(k, nv, np);
        for a in 0..=k {
            guess.vel_mut(a).copy_from_slice(&trace);
            guess.pres_mut(a).copy_from_slice(&pressure);
        }
        let (mut u, s) = newton_solve_slab(&problem, guess, precond, &setup.newton)?;
        if let Some(g) = &gauge {
            g.project_slab(&mut u.data, k, nv);
        }
        trace = u.end_trace().to_vec();
        pressure = u.pres(k).to_vec();
        stats.slabs.push(s);
        slabs.push(u);
    }
    Ok((Trajectory { partition: setup.partition.clone(), k, slabs }, stats))
}
