//! Convergence and cavity studies.

use std::sync::Arc;
use std::time::Instant;

use super::cases::{CavityCase2D, ManufacturedCase};
use super::errors::{compute_errors, eoc, ErrorReport};
use crate::error::{Error, Result};
use crate::geometry::{all_dirichlet, build_hierarchy, build_time_partition, BoundaryTag};
use crate::operators::{zero_field, NitscheConfig, SharedFn, SpatialOps};
use crate::solver::{march, MarchSetup, NewtonConfig, SolveStats, Trajectory};
use crate::stmg::{LevelSpec, Multigrid, MultigridConfig};

/// Solver settings shared by all runs of a study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub newton: NewtonConfig,
    pub multigrid: MultigridConfig,
    /// Report zero wall times so that repeated runs give identical output.
    pub deterministic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma1: 10.0,
            gamma2: 10.0,
            newton: NewtonConfig::default(),
            multigrid: MultigridConfig::default(),
            deterministic: false,
        }
    }
}

impl SolverConfig {
    pub fn nitsche(&self, nu: f64) -> NitscheConfig {
        NitscheConfig { gamma1: self.gamma1, gamma2: self.gamma2, nu }
    }
}

/// One row of a study table.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub case: String,
    pub nu: f64,
    pub n_sm: usize,
    pub c: usize,
    pub h: f64,
    pub r: usize,
    pub k: usize,
    /// Space-time unknowns over all slabs.
    pub dofs: usize,
    pub errors: Option<ErrorReport>,
    /// Rates against the previous row of the same column, per error norm.
    pub eoc: [Option<f64>; 5],
    pub mean_newton: f64,
    pub mean_krylov: f64,
    pub max_krylov: usize,
    pub cap_hits: usize,
    pub rebuilds: usize,
    pub converged: bool,
    pub wall_time: f64,
}

/// A run together with its solution.
pub struct RunOutcome {
    pub row: RunRow,
    pub stats: SolveStats,
    pub trajectory: Option<Trajectory>,
}

/// Problem description handed to [`run_case`].
struct CaseSpec<'a> {
    name: &'a str,
    nu: f64,
    t_end: f64,
    slabs: usize,
    forcing: SharedFn,
    dirichlet: SharedFn,
    tagging: fn([f64; 2]) -> BoundaryTag,
}

fn run_case(case: &CaseSpec<'_>, c: usize, r: usize, k: usize, cfg: &SolverConfig) -> Result<RunOutcome> {
    let start = Instant::now();
    let hierarchy = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, c + 1, &case.tagging)?;
    let nitsche = cfg.nitsche(case.nu);
    let ops = Arc::new(SpatialOps::new(hierarchy.finest(), r, nitsche));
    let partition = build_time_partition(case.t_end, case.slabs)?;
    let dofs = case.slabs * (k + 1) * (ops.nv() + ops.np());
    let setup = MarchSetup {
        ops: ops.clone(),
        k,
        partition,
        forcing: case.forcing.clone(),
        dirichlet: case.dirichlet.clone(),
        convection: true,
        initial: vec![0.0; ops.nv()],
        newton: cfg.newton,
    };
    let mut mg = Multigrid::new(&hierarchy, LevelSpec::new(c, k, r), nitsche, cfg.multigrid)?;
    let (trajectory, stats, converged) = match march(&setup, &mut mg) {
        Ok((t, s)) => {
            let ok = s.all_converged();
            (Some(t), s, ok)
        }
        Err(Error::NewtonDiverged { .. }) => (None, SolveStats::default(), false),
        Err(e) => return Err(e),
    };
    let row = RunRow {
        case: case.name.to_string(),
        nu: case.nu,
        n_sm: cfg.multigrid.pre_smooth,
        c,
        h: hierarchy.finest().h,
        r,
        k,
        dofs,
        errors: None,
        eoc: [None; 5],
        mean_newton: stats.mean_newton(),
        mean_krylov: stats.mean_krylov(),
        max_krylov: stats.max_krylov(),
        cap_hits: stats.cap_hits(),
        rebuilds: stats.rebuilds(),
        converged,
        wall_time: if cfg.deterministic { 0.0 } else { start.elapsed().as_secs_f64() },
    };
    Ok(RunOutcome { row, stats, trajectory })
}

/// Manufactured problem with `h = 2^-c` and `N = 2^c` slabs on `(0, 1]`.
pub fn run_manufactured(nu: f64, r: usize, k: usize, c: usize, cfg: &SolverConfig) -> Result<RunOutcome> {
    let exact = ManufacturedCase::new(nu);
    let spec = CaseSpec {
        name: "manufactured",
        nu,
        t_end: exact.t_end,
        slabs: 1 << c,
        forcing: exact.forcing_field(),
        dirichlet: zero_field(),
        tagging: all_dirichlet,
    };
    let mut out = run_case(&spec, c, r, k, cfg)?;
    if let Some(traj) = &out.trajectory {
        let start = Instant::now();
        let h = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, c + 1, &all_dirichlet)?;
        let ops = SpatialOps::new(h.finest(), r, cfg.nitsche(nu));
        out.row.errors = Some(compute_errors(&ops, traj, &exact));
        if !cfg.deterministic {
            out.row.wall_time += start.elapsed().as_secs_f64();
        }
    }
    Ok(out)
}

/// Fills the rate columns of consecutive rows with equal case, `nu`, `r`
/// and `k` and refinement levels one apart.
pub fn fill_eoc(rows: &mut [RunRow]) {
    for i in 1..rows.len() {
        let (prev, cur) = (&rows[i - 1], &rows[i]);
        let same = prev.case == cur.case && prev.nu == cur.nu && prev.r == cur.r && prev.k == cur.k && cur.c == prev.c + 1;
        if let (true, Some(a), Some(b)) = (same, prev.errors, cur.errors) {
            let (a, b) = (a.values(), b.values());
            let rates: Vec<Option<f64>> = (0..5).map(|j| eoc(&[a[j], b[j]])[0]).collect();
            rows[i].eoc.copy_from_slice(&rates);
        }
    }
}

/// Manufactured convergence study with `k = r` for every pair of `r_list`
/// and `levels`; rows are ordered by `r`, then `c`.
///
/// A failed Newton solve is recorded in the row and the study continues.
pub fn run_convergence(r_list: &[usize], levels: &[usize], nu: f64, cfg: &SolverConfig) -> Result<Vec<RunRow>> {
    let mut rows = Vec::new();
    for &r in r_list {
        for &c in levels {
            rows.push(run_manufactured(nu, r, r, c, cfg)?.row);
        }
    }
    fill_eoc(&mut rows);
    Ok(rows)
}

/// Time horizon of the cavity study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityHorizon {
    pub t_end: f64,
    /// Slabs on level `c = 0`; level `c` uses `base_slabs * 2^c`.
    pub base_slabs: usize,
}

impl Default for CavityHorizon {
    fn default() -> Self {
        CavityHorizon { t_end: 8.0, base_slabs: 16 }
    }
}

/// One cavity run with `k = r`.
pub fn run_cavity_case(nu: f64, r: usize, c: usize, horizon: CavityHorizon, cfg: &SolverConfig) -> Result<RunOutcome> {
    let cavity = CavityCase2D { nu, t_end: horizon.t_end };
    let spec = CaseSpec {
        name: "cavity",
        nu,
        t_end: cavity.t_end,
        slabs: horizon.base_slabs << c,
        forcing: zero_field(),
        dirichlet: cavity.boundary_data(),
        tagging: CavityCase2D::tagging,
    };
    run_case(&spec, c, r, r, cfg)
}

/// Cavity iteration study over all combinations; `n_sm` sets both smoothing
/// counts. Rows are ordered by `nu`, then `r`, then `c`.
pub fn run_cavity(
    levels: &[usize],
    r_list: &[usize],
    nu_list: &[f64],
    n_sm: usize,
    horizon: CavityHorizon,
    cfg: &SolverConfig,
) -> Result<Vec<RunRow>> {
    let mut cfg = *cfg;
    cfg.multigrid.pre_smooth = n_sm;
    cfg.multigrid.post_smooth = n_sm;
    let mut rows = Vec::new();
    for &nu in nu_list {
        for &r in r_list {
            for &c in levels {
                rows.push(run_cavity_case(nu, r, c, horizon, &cfg)?.row);
            }
        }
    }
    Ok(rows)
}
