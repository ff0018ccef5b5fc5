//! Nonlinear residual and Jacobian action of one space-time slab.
//!
//! Unknowns are stored as `[V^1..V^{k+1}, P^1..P^{k+1}]`. The residual is
//! the left-hand side minus the right-hand side of the slab equations, so a
//! Newton correction solves `J dU = -R`.

pub mod dense;

use std::sync::Arc;

use crate::error::{check_len, Result};
use crate::linalg::dot;
use crate::operators::{next_version, Applied, ConvectionForm, SharedFn, SpatialOps, SpatialState, Terms};
use crate::temporal::{jump_apply, TemporalMatrices};

/// Block coefficient vector of one slab.
#[derive(Clone, Debug, PartialEq)]
pub struct SlabVector {
    pub k: usize,
    pub nv: usize,
    pub np: usize,
    pub data: Vec<f64>,
}

impl SlabVector {
    pub fn zeros(k: usize, nv: usize, np: usize) -> Self {
        SlabVector { k, nv, np, data: vec![0.0; (k + 1) * (nv + np)] }
    }

    pub fn from_data(k: usize, nv: usize, np: usize, data: Vec<f64>) -> Result<Self> {
        check_len((k + 1) * (nv + np), data.len())?;
        Ok(SlabVector { k, nv, np, data })
    }

    pub fn n_blocks(&self) -> usize {
        self.k + 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn vel(&self, a: usize) -> &[f64] {
        &self.data[a * self.nv..(a + 1) * self.nv]
    }

    pub fn vel_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.data[a * self.nv..(a + 1) * self.nv]
    }

    pub fn pres(&self, a: usize) -> &[f64] {
        let off = self.n_blocks() * self.nv;
        &self.data[off + a * self.np..off + (a + 1) * self.np]
    }

    pub fn pres_mut(&mut self, a: usize) -> &mut [f64] {
        let off = self.n_blocks() * self.nv;
        &mut self.data[off + a * self.np..off + (a + 1) * self.np]
    }

    /// Offset of the pressure part in `data`.
    pub fn pressure_offset(&self) -> usize {
        self.n_blocks() * self.nv
    }

    /// Velocity of the last temporal node (the trace at the slab end for
    /// right-sided Radau nodes).
    pub fn end_trace(&self) -> &[f64] {
        self.vel(self.k)
    }
}

/// Slab operator on one level: spatial operators, temporal matrices and the
/// Dirichlet data entering the nonlinear boundary terms.
#[derive(Clone)]
pub struct SlabOperator {
    pub ops: Arc<SpatialOps>,
    pub tm: TemporalMatrices,
    pub t_start: f64,
    /// Include the convection terms (false gives the Stokes limit).
    pub convection: bool,
    pub dirichlet: SharedFn,
}

impl SlabOperator {
    pub fn new(ops: Arc<SpatialOps>, tm: TemporalMatrices, t_start: f64, convection: bool, dirichlet: SharedFn) -> Self {
        SlabOperator { ops, tm, t_start, convection, dirichlet }
    }

    pub fn k(&self) -> usize {
        self.tm.k
    }

    pub fn nv(&self) -> usize {
        self.ops.nv()
    }

    pub fn np(&self) -> usize {
        self.ops.np()
    }

    pub fn len(&self) -> usize {
        (self.k() + 1) * (self.nv() + self.np())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zeros(&self) -> SlabVector {
        SlabVector::zeros(self.k(), self.nv(), self.np())
    }

    pub fn node_times(&self) -> Vec<f64> {
        self.tm.node_times(self.t_start)
    }

    /// State cache of a velocity at temporal node `a` (with the Dirichlet data
    /// at that time).
    pub fn node_state(&self, v: &[f64], a: usize) -> SpatialState {
        let t = self.node_times()[a];
        self.ops.state(v, Some((&*self.dirichlet, t)))
    }

    fn base_terms(&self) -> Terms {
        Terms { mass: true, ..Terms::linear(self.ops.nitsche.nu) }
    }

    /// Combines per-node results into `Y_v^i = Σ_b K_ib q^b + m_i w^i` and
    /// `Y_p^i = m_i d^i`.
    fn mix(&self, parts: &[Applied], out: &mut [f64]) {
        let (n, nv, np) = (self.k() + 1, self.nv(), self.np());
        let poff = n * nv;
        for i in 0..n {
            let m = self.tm.mass[i];
            let yv = &mut out[i * nv..(i + 1) * nv];
            for (y, w) in yv.iter_mut().zip(&parts[i].w) {
                *y = m * w;
            }
            for (b, part) in parts.iter().enumerate() {
                let kib = self.tm.k_entry(i, b);
                if kib != 0.0 {
                    crate::linalg::axpy(kib, &part.q, yv);
                }
            }
            for (y, d) in out[poff + i * np..poff + (i + 1) * np].iter_mut().zip(&parts[i].d) {
                *y = m * d;
            }
        }
    }

    /// State-dependent left-hand side (everything except forcing, data and
    /// the jump from the previous slab).
    pub fn lhs(&self, u: &SlabVector) -> SlabVector {
        let mut terms = self.base_terms();
        if self.convection {
            terms = terms.with_convection(ConvectionForm::Residual);
        }
        let parts: Vec<Applied> = (0..=self.k())
            .map(|a| {
                let state = self.convection.then(|| self.node_state(u.vel(a), a));
                self.ops.apply(&terms, state.as_ref(), Some(u.vel(a)), Some(u.pres(a)))
            })
            .collect();
        let mut out = self.zeros();
        self.mix(&parts, &mut out.data);
        out
    }

    /// Linearization at `u`.
    pub fn linearize(&self, u: &SlabVector) -> SlabJacobian<'_> {
        let states = self.node_states(u);
        SlabJacobian { op: self, states, version: next_version() }
    }

    /// Linearization with the given per-node velocity states (used on coarse
    /// levels where the state comes from interpolation).
    pub fn linearize_velocity(&self, velocities: &[Vec<f64>]) -> SlabJacobian<'_> {
        let states = if self.convection {
            velocities.iter().enumerate().map(|(a, v)| self.node_state(v, a)).collect()
        } else {
            Vec::new()
        };
        SlabJacobian { op: self, states, version: next_version() }
    }

    /// Jacobian action with per-node state caches (ignored without
    /// convection).
    pub fn apply_jacobian(&self, states: &[SpatialState], du: &[f64], out: &mut [f64]) {
        let (n, nv, np) = (self.k() + 1, self.nv(), self.np());
        let mut terms = self.base_terms();
        if self.convection {
            terms = terms.with_convection(ConvectionForm::Jacobian);
        }
        let parts: Vec<Applied> = (0..n)
            .map(|a| {
                let v = &du[a * nv..(a + 1) * nv];
                let p = &du[n * nv + a * np..n * nv + (a + 1) * np];
                self.ops.apply(&terms, states.get(a), Some(v), Some(p))
            })
            .collect();
        self.mix(&parts, out);
    }

    /// Per-node state caches of the velocity blocks of `u`.
    pub fn node_states(&self, u: &SlabVector) -> Vec<SpatialState> {
        if self.convection {
            (0..=self.k()).map(|a| self.node_state(u.vel(a), a)).collect()
        } else {
            Vec::new()
        }
    }

    /// Squared `𝓜`-norm with `𝓜 = blockdiag(M^τ ⊗ M_h, M^τ ⊗ M_h^p)`.
    pub fn mass_norm_sq(&self, z: &[f64]) -> f64 {
        let (n, nv, np) = (self.k() + 1, self.nv(), self.np());
        let terms = Terms { mass: true, ..Default::default() };
        let mut total = 0.0;
        for a in 0..n {
            let v = &z[a * nv..(a + 1) * nv];
            let mv = self.ops.apply(&terms, None, Some(v), None).q;
            let p = &z[n * nv + a * np..n * nv + (a + 1) * np];
            let mp = self.ops.apply_pressure_mass(p).expect("sizes match");
            total += self.tm.mass[a] * (dot(v, &mv) + dot(p, &mp));
        }
        total
    }

    pub fn mass_norm(&self, z: &[f64]) -> f64 {
        self.mass_norm_sq(z).max(0.0).sqrt()
    }

    /// `𝓜 z`.
    pub fn apply_mass_matrix(&self, z: &[f64]) -> Vec<f64> {
        let (n, nv, np) = (self.k() + 1, self.nv(), self.np());
        let terms = Terms { mass: true, ..Default::default() };
        let mut out = vec![0.0; z.len()];
        for a in 0..n {
            let m = self.tm.mass[a];
            let mv = self.ops.apply(&terms, None, Some(&z[a * nv..(a + 1) * nv]), None).q;
            for (o, x) in out[a * nv..(a + 1) * nv].iter_mut().zip(mv) {
                *o = m * x;
            }
            let off = n * nv + a * np;
            let mp = self.ops.apply_pressure_mass(&z[off..off + np]).expect("sizes match");
            for (o, x) in out[off..off + np].iter_mut().zip(mp) {
                *o = m * x;
            }
        }
        out
    }
}

/// Jacobian of the slab operator at a fixed linearization point.
pub struct SlabJacobian<'a> {
    pub op: &'a SlabOperator,
    /// Per temporal node state caches (empty without convection).
    pub states: Vec<SpatialState>,
    pub version: u64,
}

impl SlabJacobian<'_> {
    pub fn len(&self) -> usize {
        self.op.len()
    }

    pub fn is_empty(&self) -> bool {
        self.op.is_empty()
    }

    /// `out = J du`.
    pub fn apply(&self, du: &[f64], out: &mut [f64]) {
        self.op.apply_jacobian(&self.states, du, out);
    }

    pub fn apply_vec(&self, du: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; du.len()];
        self.apply(du, &mut out);
        out
    }
}

/// One slab of the time march: operator, forcing, and the previous trace.
#[derive(Clone)]
pub struct SlabProblem {
    pub op: SlabOperator,
    pub forcing: SharedFn,
    /// Velocity trace at the start of the slab.
    pub prev_trace: Vec<f64>,
    /// `F + L + (C ⊗ M_h) V_{n-1}`.
    pub rhs: SlabVector,
}

impl SlabProblem {
    pub fn new(op: SlabOperator, forcing: SharedFn, prev_trace: Vec<f64>) -> Self {
        let ops = &op.ops;
        let (f, lv, lp) = ops.assemble_rhs(&*forcing, &*op.dirichlet, &op.tm, op.t_start);
        let jump = jump_apply(&op.tm, |v, w| w.copy_from_slice(&ops.apply_mass(v).expect("sizes match")), &prev_trace);
        let mut rhs = op.zeros();
        let nvb = (op.k() + 1) * op.nv();
        for i in 0..nvb {
            rhs.data[i] = f[i] + lv[i] + jump[i];
        }
        rhs.data[nvb..].copy_from_slice(&lp);
        SlabProblem { op, forcing, prev_trace, rhs }
    }

    pub fn residual(&self, u: &SlabVector) -> SlabVector {
        let mut r = self.op.lhs(u);
        for (x, b) in r.data.iter_mut().zip(&self.rhs.data) {
            *x -= b;
        }
        r
    }

    pub fn jacobian_action(&self, u: &SlabVector, du: &SlabVector) -> SlabVector {
        let mut out = self.op.zeros();
        self.op.linearize(u).apply(&du.data, &mut out.data);
        out
    }

    pub fn mass_norm(&self, z: &SlabVector) -> f64 {
        self.op.mass_norm(&z.data)
    }
}
