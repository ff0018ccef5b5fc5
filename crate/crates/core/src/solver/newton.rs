//! Inexact Newton-Krylov iteration with Eisenstat-Walker forcing and a
//! nonmonotone Armijo line search.

use std::collections::VecDeque;

use super::fgmres::fgmres;
use super::{PressureGauge, SlabPreconditioner, SlabStats};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::slab::{SlabProblem, SlabVector};
use crate::stmg::{stagnates, RebuildConfig, RebuildMonitor};

/// Update rule of the forcing term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EwVariant {
    /// `c η_prev (ρ)^θ`.
    #[default]
    PreviousEta,
    /// `c (ρ)^θ`.
    RatioOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
    pub eta0: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub c_eta: f64,
    pub theta: f64,
    pub ew_variant: EwVariant,
    pub lambda0: f64,
    pub c1: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub alpha_min: f64,
    /// Length of the nonmonotone merit window (0 gives the monotone test).
    pub window: usize,
    /// Quadratic interpolation of the next trial step.
    pub interpolate: bool,
    pub krylov_max: usize,
    pub rebuild: RebuildConfig,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            abs_tol: 1e-12,
            rel_tol: 1e-8,
            max_iter: 30,
            eta0: 0.4,
            eta_min: 1e-3,
            eta_max: 0.8,
            c_eta: 0.5,
            theta: 1.5,
            ew_variant: EwVariant::PreviousEta,
            lambda0: 1.0,
            c1: 1e-4,
            backtrack: 0.5,
            max_backtracks: 5,
            alpha_min: 1e-3,
            window: 5,
            interpolate: true,
            krylov_max: 50,
            rebuild: RebuildConfig::default(),
        }
    }
}

const EPS: f64 = 1e-300;

/// Forcing term of Newton step `m` from the current and previous residual
/// norms and the previous forcing term.
pub fn ew_forcing(m: usize, eta_prev: f64, r_norm: f64, r_prev: f64, cfg: &NewtonConfig) -> f64 {
    if m == 0 {
        return cfg.eta0;
    }
    let ratio = (r_norm / r_prev.max(EPS)).powf(cfg.theta);
    let eta = match cfg.ew_variant {
        EwVariant::PreviousEta => cfg.c_eta * eta_prev * ratio,
        EwVariant::RatioOnly => cfg.c_eta * ratio,
    };
    eta.clamp(cfg.eta_min, cfg.eta_max)
}

/// Sliding window of accepted merit values.
#[derive(Clone, Debug, Default)]
pub struct MeritWindow {
    values: VecDeque<f64>,
    cap: usize,
}

impl MeritWindow {
    pub fn new(cap: usize) -> Self {
        MeritWindow { values: VecDeque::with_capacity(cap + 1), cap }
    }

    pub fn push(&mut self, v: f64) {
        if self.cap == 0 {
            return;
        }
        self.values.push_back(v);
        while self.values.len() > self.cap {
            self.values.pop_front();
        }
    }

    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    pub alpha: f64,
    pub backtracks: usize,
    /// `false` when the minimum step was taken without satisfying the test.
    pub accepted: bool,
}

/// Backtracking on the merit `phi` with `phi(0) = phi0` and slope `g0`.
pub fn armijo(
    mut phi: impl FnMut(f64) -> f64,
    phi0: f64,
    g0: f64,
    window: &mut MeritWindow,
    cfg: &NewtonConfig,
) -> LineSearch {
    window.push(phi0);
    let mut alpha = cfg.lambda0;
    let mut backtracks = 0;
    while alpha > cfg.alpha_min {
        let trial = phi(alpha);
        let reference = if cfg.window > 0 { window.max().unwrap_or(phi0) } else { phi0 };
        if trial <= reference + cfg.c1 * alpha * g0 {
            window.push(trial);
            return LineSearch { alpha, backtracks, accepted: true };
        }
        if backtracks == cfg.max_backtracks {
            break;
        }
        backtracks += 1;
        let denom = 2.0 * (trial - phi0 - g0 * alpha);
        let interp = -g0 * alpha * alpha / denom;
        alpha = if cfg.interpolate && denom > 0.0 && interp.is_finite() {
            interp.clamp(0.1 * alpha, 0.5 * alpha)
        } else {
            cfg.backtrack * alpha
        };
    }
    LineSearch { alpha: cfg.alpha_min, backtracks, accepted: false }
}

fn projected_residual(problem: &SlabProblem, u: &SlabVector, gauge: Option<&PressureGauge>) -> SlabVector {
    let mut r = problem.residual(u);
    if let Some(g) = gauge {
        g.project_slab_dual(&mut r.data, r.k, r.nv);
    }
    r
}

/// Solves one slab from `guess`.
///
/// Non-convergence within `max_iter` steps is reported through
/// `SlabStats::converged`; a non-finite residual is an error.
pub fn newton_solve_slab(
    problem: &SlabProblem,
    guess: SlabVector,
    precond: &mut dyn SlabPreconditioner,
    cfg: &NewtonConfig,
) -> Result<(SlabVector, SlabStats)> {
    let op = &problem.op;
    let gauge = PressureGauge::for_problem(&op.ops);
    let (k, nv) = (op.k(), op.nv());
    let mut stats = SlabStats { slab: op.tm.slab, ..Default::default() };
    let mut x = guess;
    crate::error::check_len(op.len(), x.len())?;
    if let Some(g) = &gauge {
        g.project_slab(&mut x.data, k, nv);
    }
    let mut r = projected_residual(problem, &x, gauge.as_ref());
    let mut r_norm = op.mass_norm(&r.data);
    let n0 = r_norm;
    stats.residuals.push(r_norm);
    let target = cfg.abs_tol.max(cfg.rel_tol * n0);
    let mut monitor = RebuildMonitor::new(cfg.rebuild);
    let mut window = MeritWindow::new(cfg.window);
    let mut eta = cfg.eta0;
    let mut r_prev = n0;
    let mut fresh = false;

    precond.begin_slab(op)?;
    if r_norm > target {
        precond.update(&x, true)?;
        stats.rebuilds += 1;
        fresh = true;
    }
    let mut m = 0;
    while r_norm > target && m < cfg.max_iter {
        if m > 0 {
            let rebuild = monitor.should_rebuild();
            if !fresh {
                precond.update(&x, rebuild)?;
            }
            if rebuild {
                monitor.rebuilt();
                stats.rebuilds += 1;
            }
        }
        fresh = false;
        eta = ew_forcing(m, eta, r_norm, r_prev, cfg);
        stats.forcing_terms.push(eta);

        let jac = op.linearize(&x);
        let b: Vec<f64> = r.data.iter().map(|v| -v).collect();
        let mass_norm = |z: &[f64]| op.mass_norm(z);
        let sol = fgmres(
            &mut |u, y| jac.apply(u, y),
            &mut |u, z| {
                precond.apply(u, z);
                if let Some(g) = &gauge {
                    g.project_slab(z, k, nv);
                }
            },
            &b,
            eta,
            cfg.krylov_max,
            Some(&mass_norm),
        );
        stats.krylov_iterations.push(sol.iterations);
        if !sol.converged && sol.iterations >= cfg.krylov_max {
            stats.cap_hits += 1;
        }
        let dx = sol.x;
        let jdx = jac.apply_vec(&dx);
        let g0 = dot(&op.apply_mass_matrix(&r.data), &jdx);
        let phi0 = 0.5 * r_norm * r_norm;
        let mut last: Option<(f64, SlabVector)> = None;
        let ls = armijo(
            |alpha| {
                let mut trial = x.clone();
                crate::linalg::axpy(alpha, &dx, &mut trial.data);
                let rt = projected_residual(problem, &trial, gauge.as_ref());
                let v = 0.5 * op.mass_norm_sq(&rt.data);
                last = Some((alpha, rt));
                if v.is_finite() {
                    v
                } else {
                    f64::INFINITY
                }
            },
            phi0,
            g0,
            &mut window,
            cfg,
        );
        crate::linalg::axpy(ls.alpha, &dx, &mut x.data);
        if let Some(g) = &gauge {
            g.project_slab(&mut x.data, k, nv);
        }
        stats.step_lengths.push(ls.alpha);
        stats.backtracks.push(ls.backtracks);
        r_prev = r_norm;
        r = match last {
            Some((alpha, rt)) if alpha == ls.alpha && gauge.is_none() => rt,
            _ => projected_residual(problem, &x, gauge.as_ref()),
        };
        r_norm = op.mass_norm(&r.data);
        if !r_norm.is_finite() {
            return Err(Error::NewtonDiverged { slab: op.tm.slab, iterations: m + 1, residual: r_norm });
        }
        stats.residuals.push(r_norm);
        monitor.record(r_norm / r_prev.max(EPS), sol.iterations);
        m += 1;
        if r_norm > target && stagnates(&sol.history, &cfg.rebuild) {
            precond.update(&x, true)?;
            monitor.rebuilt();
            stats.rebuilds += 1;
            fresh = true;
        }
    }
    stats.newton_iterations = m;
    stats.converged = r_norm <= target;
    Ok((x, stats))
}
