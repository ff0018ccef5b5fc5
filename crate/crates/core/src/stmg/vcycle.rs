//! V-cycle over the level schedule and its use as the Newton-Krylov
//! preconditioner.

use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::schedule::{build_schedule_ordered, CoarseningOrder, LevelSchedule, LevelSpec};
use super::transfer::Transfer;
use super::vanka::{build_patches, linear_cell_matrices, CellMatrices, PatchSet, VankaMode};
use crate::error::{Error, Result};
use crate::geometry::MeshHierarchy;
use crate::operators::{next_version, NitscheConfig, SpatialOps, SpatialState};
use crate::slab::{SlabOperator, SlabVector};
use crate::solver::{PressureGauge, SlabPreconditioner};
use crate::temporal::assemble_temporal;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultigridConfig {
    pub pre_smooth: usize,
    pub post_smooth: usize,
    /// Damping of the additive Vanka update.
    pub omega: f64,
    pub mode: VankaMode,
    pub order: CoarseningOrder,
    /// Compute `‖J̃ - J‖` on every patch build.
    pub record_perturbation: bool,
}

impl Default for MultigridConfig {
    fn default() -> Self {
        MultigridConfig {
            pre_smooth: 1,
            post_smooth: 1,
            omega: 0.8,
            mode: VankaMode::Surrogate,
            order: CoarseningOrder::default(),
            record_perturbation: false,
        }
    }
}

/// Slab-independent data of one level.
struct LevelData {
    spec: LevelSpec,
    ops: Arc<SpatialOps>,
    linear: Vec<CellMatrices>,
    gauge: Option<PressureGauge>,
}

/// Level operator and linearization for the current slab.
pub struct SlabLevel {
    pub op: SlabOperator,
    pub id: u64,
    pub velocities: Vec<Vec<f64>>,
    pub states: Vec<SpatialState>,
    pub patches: Option<PatchSet>,
}

impl SlabLevel {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply_jacobian(&self.states, x, y);
    }
}

/// Dense LU of the coarsest level with one pinned pressure DoF per temporal
/// block in pure-Dirichlet problems.
struct CoarseSolver {
    lu: faer::linalg::solvers::PartialPivLu<f64>,
    pinned: Vec<usize>,
}

impl CoarseSolver {
    fn new(level: &SlabLevel, pure_dirichlet: bool) -> Self {
        let n = level.op.len();
        let (k, nv, np) = (level.op.k(), level.op.nv(), level.op.np());
        let pinned: Vec<usize> = if pure_dirichlet { (0..=k).map(|a| (k + 1) * nv + a * np).collect() } else { Vec::new() };
        let mut a = Mat::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            level.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                a[(i, j)] = col[i];
            }
        }
        for &p in &pinned {
            for j in 0..n {
                a[(p, j)] = 0.0;
                a[(j, p)] = 0.0;
            }
            a[(p, p)] = 1.0;
        }
        CoarseSolver { lu: a.partial_piv_lu(), pinned }
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        for &p in &self.pinned {
            rhs[(p, 0)] = 0.0;
        }
        self.lu.solve_in_place(rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }
}

/// hp space-time multigrid preconditioner.
pub struct Multigrid {
    pub schedule: LevelSchedule,
    pub config: MultigridConfig,
    data: Vec<LevelData>,
    transfers: Vec<Transfer>,
    levels: Vec<SlabLevel>,
    coarse: Option<CoarseSolver>,
    /// Patch rebuilds on the finest level.
    pub patch_builds: usize,
    /// Patches that needed a diagonal shift.
    pub shifted_patches: usize,
    /// Largest recorded patch perturbation of the last build.
    pub last_perturbation: Option<f64>,
}

impl Multigrid {
    /// Multigrid for the finest level `finest` of `hierarchy` with the
    /// schedule of `config.order`.
    pub fn new(hierarchy: &MeshHierarchy, finest: LevelSpec, nitsche: NitscheConfig, config: MultigridConfig) -> Result<Self> {
        Self::with_schedule(hierarchy, build_schedule_ordered(finest, config.order), nitsche, config)
    }

    pub fn with_schedule(
        hierarchy: &MeshHierarchy,
        schedule: LevelSchedule,
        nitsche: NitscheConfig,
        config: MultigridConfig,
    ) -> Result<Self> {
        let mut data: Vec<LevelData> = Vec::with_capacity(schedule.len());
        for spec in &schedule.levels {
            let mesh = hierarchy.levels.get(spec.s).ok_or(Error::InvalidLevel(spec.s))?;
            let reuse = data.iter().find(|d| d.spec.s == spec.s && d.spec.r == spec.r).map(|d| (d.ops.clone(), d.linear.clone()));
            let (ops, linear) = match reuse {
                Some(x) => x,
                None => {
                    let ops = Arc::new(SpatialOps::new(mesh, spec.r, nitsche));
                    let linear = linear_cell_matrices(&ops);
                    (ops, linear)
                }
            };
            let gauge = PressureGauge::for_problem(&ops);
            data.push(LevelData { spec: *spec, ops, linear, gauge });
        }
        let transfers = data
            .windows(2)
            .zip(&schedule.transfers)
            .map(|(w, &kind)| Transfer::new(&w[0].ops, w[0].spec.k, &w[1].ops, w[1].spec.k, kind))
            .collect::<Result<Vec<_>>>()?;
        Ok(Multigrid {
            schedule,
            config,
            data,
            transfers,
            levels: Vec::new(),
            coarse: None,
            patch_builds: 0,
            shifted_patches: 0,
            last_perturbation: None,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.data.len()
    }

    /// Spatial operators of level `l` (0 is the finest).
    pub fn level_ops(&self, l: usize) -> &Arc<SpatialOps> {
        &self.data[l].ops
    }

    pub fn transfer(&self, l: usize) -> &Transfer {
        &self.transfers[l]
    }

    /// Level data of the current slab.
    pub fn slab_level(&self, l: usize) -> Option<&SlabLevel> {
        self.levels.get(l)
    }

    fn uses_direct_coarse(&self) -> bool {
        self.data.len() > 1
    }

    /// Restricts the finest-level state to all levels and refreshes their
    /// linearizations; patches are rebuilt when `rebuild` is set or missing.
    fn relinearize(&mut self, velocities: Vec<Vec<f64>>, rebuild: bool) {
        let mut vel = velocities;
        let n = self.levels.len();
        for l in 0..n {
            if l > 0 {
                vel = self.transfers[l - 1].interpolate_state(&vel);
            }
            let level = &mut self.levels[l];
            level.states = if level.op.convection {
                vel.iter().enumerate().map(|(a, v)| level.op.node_state(v, a)).collect()
            } else {
                Vec::new()
            };
            level.velocities = vel.clone();
            let smoothed = !(self.data.len() > 1 && l + 1 == n);
            if smoothed && (rebuild || level.patches.is_none()) {
                let set = build_patches(
                    &level.op,
                    &self.data[l].linear,
                    &level.velocities,
                    self.config.mode,
                    level.id,
                    self.config.record_perturbation && l == 0,
                );
                if l == 0 {
                    self.patch_builds += 1;
                    self.last_perturbation = set.perturbation;
                }
                self.shifted_patches += set.shifted;
                level.patches = Some(set);
            }
        }
        if self.uses_direct_coarse() {
            let last = self.levels.last().expect("levels exist");
            self.coarse = Some(CoarseSolver::new(last, self.data.last().unwrap().gauge.is_some()));
        }
    }

    fn project(&self, l: usize, x: &mut [f64]) {
        if let Some(g) = &self.data[l].gauge {
            let op = &self.levels[l].op;
            g.project_slab(x, op.k(), op.nv());
        }
    }

    fn smooth(&self, l: usize, b: &[f64], x: &mut [f64], steps: usize) -> Result<()> {
        let level = &self.levels[l];
        let patches = level.patches.as_ref().ok_or(Error::StalePatches { built: 0, current: level.id })?;
        let jac = |u: &[f64], y: &mut [f64]| level.apply(u, y);
        for _ in 0..steps {
            patches.sweep(&level.op, level.id, &jac, b, x, self.config.omega)?;
            self.project(l, x);
        }
        Ok(())
    }

    fn cycle(&self, l: usize, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.levels.len();
        if self.uses_direct_coarse() && l + 1 == n {
            let mut x = self.coarse.as_ref().expect("coarse solver is built with the levels").solve(b);
            self.project(l, &mut x);
            return Ok(x);
        }
        let mut x = vec![0.0; b.len()];
        self.smooth(l, b, &mut x, self.config.pre_smooth)?;
        if l + 1 < n {
            let mut defect = b.to_vec();
            if x.iter().any(|&v| v != 0.0) {
                let mut jx = vec![0.0; b.len()];
                self.levels[l].apply(&x, &mut jx);
                for (d, j) in defect.iter_mut().zip(&jx) {
                    *d -= j;
                }
            }
            let mut coarse_b = self.transfers[l].restrict(&defect);
            if let Some(g) = &self.data[l + 1].gauge {
                let op = &self.levels[l + 1].op;
                g.project_slab_dual(&mut coarse_b, op.k(), op.nv());
            }
            let correction = self.cycle(l + 1, &coarse_b)?;
            crate::linalg::axpy(1.0, &self.transfers[l].prolong(&correction), &mut x);
            self.project(l, &mut x);
        }
        self.smooth(l, b, &mut x, self.config.post_smooth)?;
        Ok(x)
    }

    /// One V-cycle with zero initial guess on the finest level.
    pub fn vcycle(&self, b: &[f64]) -> Result<Vec<f64>> {
        if self.levels.is_empty() {
            return Err(Error::StalePatches { built: 0, current: 0 });
        }
        self.cycle(0, b)
    }
}

impl SlabPreconditioner for Multigrid {
    fn begin_slab(&mut self, op: &SlabOperator) -> Result<()> {
        let finest = &self.data[0];
        if op.nv() != finest.ops.nv() || op.np() != finest.ops.np() || op.k() != finest.spec.k {
            return Err(Error::LevelMismatch(format!(
                "slab operator (k={}, {} + {} DoFs) does not match the finest level {:?}",
                op.k(),
                op.nv(),
                op.np(),
                finest.spec
            )));
        }
        self.levels = self
            .data
            .iter()
            .enumerate()
            .map(|(l, d)| {
                let ops = if l == 0 { op.ops.clone() } else { d.ops.clone() };
                let tm = assemble_temporal(d.spec.k, op.tm.tau, op.tm.slab);
                SlabLevel {
                    op: SlabOperator::new(ops, tm, op.t_start, op.convection, op.dirichlet.clone()),
                    id: next_version(),
                    velocities: Vec::new(),
                    states: Vec::new(),
                    patches: None,
                }
            })
            .collect();
        self.coarse = None;
        Ok(())
    }

    fn update(&mut self, state: &SlabVector, rebuild: bool) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::LevelMismatch("update before begin_slab".into()));
        }
        crate::error::check_len(self.levels[0].op.len(), state.len())?;
        let vel = (0..=state.k).map(|a| state.vel(a).to_vec()).collect();
        self.relinearize(vel, rebuild);
        Ok(())
    }

    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        let x = self.vcycle(r).expect("levels are prepared by begin_slab and update");
        z.copy_from_slice(&x);
    }
}
