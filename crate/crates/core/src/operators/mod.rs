//! Matrix-free spatial operators on one mesh level.
//!
//! All actions run as cell loops with sum-factorized kernels; boundary terms
//! are added from the boundary faces of each cell. Nothing is assembled
//! globally. The same per-cell kernel serves the individual operators, the
//! fused slab actions and the element matrices of the Vanka smoother.

pub(crate) mod kernel;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;

use crate::elements::{
    build_pressure_space, build_velocity_space, gauss_legendre, shape_tables, PressureSpace, ShapeTables,
    VelocitySpace,
};
use crate::error::{check_len, Result};
use crate::geometry::{BoundaryTag, MeshLevel};
use crate::temporal::TemporalMatrices;
use kernel::*;

/// Vector-valued function of space and time (forcing, Dirichlet data).
pub type VectorFn = dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync;

/// Shared handle to a [`VectorFn`].
pub type SharedFn = Arc<VectorFn>;

pub fn zero_field() -> SharedFn {
    Arc::new(|_, _| [0.0, 0.0])
}

/// Nitsche penalty parameters and viscosity. The face size in the penalty
/// scaling is given by [`SpatialOps::penalty_length`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NitscheConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    pub nu: f64,
}

impl NitscheConfig {
    pub fn new(nu: f64) -> Self {
        NitscheConfig { gamma1: 10.0, gamma2: 10.0, nu }
    }
}

/// Negative part `(|y| - y) / 2`.
pub fn neg_part(y: f64) -> f64 {
    0.5 * (y.abs() - y)
}

/// Derivative of [`neg_part`] with the value 0 taken at `y = 0`.
pub fn neg_part_deriv(y: f64) -> f64 {
    if y < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Which form of the convection terms a kernel evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvectionForm {
    /// Nonlinear terms at the cached state.
    Residual,
    /// Linearization at the cached state applied to the input vector.
    Jacobian,
}

/// Selection of terms for a kernel pass.
///
/// Outputs are `q = M v` (when `mass`), the velocity test block `w` and the
/// pressure test block `d`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Terms {
    pub mass: bool,
    /// Coefficient of the vector Laplacian `A_h`.
    pub viscous: f64,
    pub nitsche: bool,
    /// `B^T p` into `w` and `B v` into `d`.
    pub div: bool,
    /// `(G^p)^T p` into `w` and `G^p v` into `d`.
    pub pressure_boundary: bool,
    pub convection: Option<ConvectionForm>,
    pub conv_volume: bool,
    pub conv_boundary: bool,
    /// Inflow term `-<(v.n)^- v, z>` on Dirichlet faces.
    pub inflow: bool,
    /// Data pairing `+<(v.n)^- g, z>` on Dirichlet faces.
    pub inflow_data: bool,
}

impl Terms {
    /// All state-independent velocity/pressure couplings of the slab
    /// operator, scaled by viscosity `nu`.
    pub fn linear(nu: f64) -> Self {
        Terms { viscous: nu, nitsche: true, div: true, pressure_boundary: true, ..Default::default() }
    }

    pub fn with_convection(mut self, form: ConvectionForm) -> Self {
        self.convection = Some(form);
        self.conv_volume = true;
        self.conv_boundary = true;
        self.inflow = true;
        self.inflow_data = true;
        self
    }
}

/// Evaluation cache of a velocity field (and Dirichlet data) at the volume
/// and face quadrature points.
#[derive(Clone, Debug)]
pub struct SpatialState {
    pub coeffs: Vec<f64>,
    /// Per cell `[v_x (nq^2), v_y (nq^2)]`.
    pub cell_values: Vec<f64>,
    /// Per boundary face `[v_x (nq), v_y (nq)]`.
    pub face_values: Vec<f64>,
    /// Dirichlet data per boundary face, same layout.
    pub face_data: Vec<f64>,
    pub version: u64,
}

static STATE_VERSION: AtomicU64 = AtomicU64::new(1);

pub(crate) fn next_version() -> u64 {
    STATE_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Per-thread work arrays of the cell kernel.
pub(crate) struct Scratch {
    vals: [Vec<f64>; 2],
    dx: [Vec<f64>; 2],
    dy: [Vec<f64>; 2],
    fm: [Vec<f64>; 2],
    fx: [Vec<f64>; 2],
    fy: [Vec<f64>; 2],
    pv: Vec<f64>,
    fd: Vec<f64>,
    tmp_a: Vec<f64>,
    tmp_b: Vec<f64>,
    tv: [Vec<f64>; 2],
    tdn: [Vec<f64>; 2],
    fv: [Vec<f64>; 2],
    fn_: [Vec<f64>; 2],
    fdf: Vec<f64>,
    pb: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(t: &ShapeTables, dim_p: usize) -> Self {
        let nqq = t.n_q * t.n_q;
        let v = |n: usize| [vec![0.0; n], vec![0.0; n]];
        let nt = t.n_q * t.n1;
        Scratch {
            vals: v(nqq),
            dx: v(nqq),
            dy: v(nqq),
            fm: v(nqq),
            fx: v(nqq),
            fy: v(nqq),
            pv: vec![0.0; nqq],
            fd: vec![0.0; nqq],
            tmp_a: vec![0.0; nt],
            tmp_b: vec![0.0; nt],
            tv: v(t.n_q),
            tdn: v(t.n_q),
            fv: v(t.n_q),
            fn_: v(t.n_q),
            fdf: vec![0.0; t.n_q],
            pb: vec![0.0; t.n_q * dim_p],
        }
    }
}

/// Results of a global kernel pass.
#[derive(Clone, Debug, Default)]
pub struct Applied {
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    pub d: Vec<f64>,
}

/// Spaces, tables and parameters of one mesh level and degree pair.
#[derive(Clone, Debug)]
pub struct SpatialOps {
    pub mesh: MeshLevel,
    pub r: usize,
    pub velocity: VelocitySpace,
    pub pressure: PressureSpace,
    pub tables: ShapeTables,
    pub nitsche: NitscheConfig,
    /// Run cell loops on the rayon pool. Results do not depend on this flag
    /// because local contributions are always accumulated in cell order.
    pub parallel: bool,
}

impl SpatialOps {
    /// Gauss points per direction used by [`SpatialOps::new`]: one more than
    /// the velocity degree.
    pub fn default_quadrature(r: usize) -> usize {
        r + 2
    }

    pub fn new(mesh: &MeshLevel, r: usize, nitsche: NitscheConfig) -> Self {
        Self::with_quadrature(mesh, r, nitsche, Self::default_quadrature(r))
    }

    /// Operators with `n_q` Gauss points per direction on cells and faces.
    pub fn with_quadrature(mesh: &MeshLevel, r: usize, nitsche: NitscheConfig, n_q: usize) -> Self {
        let velocity = build_velocity_space(mesh, r);
        let pressure = build_pressure_space(mesh, r);
        let tables = shape_tables(&velocity, r, &gauss_legendre(n_q));
        SpatialOps { mesh: mesh.clone(), r, velocity, pressure, tables, nitsche, parallel: true }
    }

    pub fn nv(&self) -> usize {
        self.velocity.n_dofs()
    }

    pub fn np(&self) -> usize {
        self.pressure.n_dofs()
    }

    pub fn local_v(&self) -> usize {
        self.velocity.local_dofs()
    }

    pub fn local_p(&self) -> usize {
        self.pressure.dim
    }

    /// Length `h_D` in the penalty terms `gamma / h_D`: the face length
    /// divided by `q (q + 1)` for velocity degree `q = r + 1`, which keeps
    /// the Nitsche form coercive uniformly in the degree.
    pub fn penalty_length(&self, face_length: f64) -> f64 {
        let q = (self.r + 1) as f64;
        face_length / (q * (q + 1.0))
    }

    pub fn is_pure_dirichlet(&self) -> bool {
        self.mesh.is_pure_dirichlet()
    }

    pub(crate) fn scratch(&self) -> Scratch {
        Scratch::new(&self.tables, self.pressure.dim)
    }

    /// Caches `v` (and optionally Dirichlet data at time `t`) at quadrature
    /// points.
    pub fn state(&self, v: &[f64], data: Option<(&VectorFn, f64)>) -> SpatialState {
        let t = &self.tables;
        let (nq, nl) = (t.n_q, self.velocity.nodes_per_cell());
        let nqq = nq * nq;
        let mut cell_values = vec![0.0; self.mesh.n_cells() * 2 * nqq];
        let mut local = vec![0.0; 2 * nl];
        let mut tmp = vec![0.0; t.n1 * nq];
        for c in 0..self.mesh.n_cells() {
            self.velocity.gather(c, v, &mut local);
            for comp in 0..2 {
                let off = (2 * c + comp) * nqq;
                eval_values(t, &local[comp * nl..(comp + 1) * nl], &mut cell_values[off..off + nqq], &mut tmp);
            }
        }
        let nf = self.mesh.faces.len();
        let mut face_values = vec![0.0; nf * 2 * nq];
        let mut face_data = vec![0.0; nf * 2 * nq];
        let mut dn = vec![0.0; nq];
        for (fi, face) in self.mesh.faces.iter().enumerate() {
            let (axis, end) = face.side.axis_and_end();
            self.velocity.gather(face.cell, v, &mut local);
            for comp in 0..2 {
                let off = (2 * fi + comp) * nq;
                face_trace(t, axis, end, &local[comp * nl..(comp + 1) * nl], &mut face_values[off..off + nq], &mut dn);
            }
            if let Some((g, time)) = data {
                let cell = &self.mesh.cells[face.cell];
                for q in 0..nq {
                    let gv = g(cell.map(face_point(t, axis, end, q)), time);
                    face_data[2 * fi * nq + q] = gv[0];
                    face_data[(2 * fi + 1) * nq + q] = gv[1];
                }
            }
        }
        SpatialState { coeffs: v.to_vec(), cell_values, face_values, face_data, version: next_version() }
    }

    /// Length of the local output of [`Self::cell_kernel`].
    pub(crate) fn local_out_len(&self) -> usize {
        2 * self.local_v() + self.local_p()
    }

    /// Local kernel on one cell. `out` is `[q | w | d]` and is accumulated.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn cell_kernel(
        &self,
        cell: usize,
        terms: &Terms,
        state: Option<&SpatialState>,
        v: Option<&[f64]>,
        p: Option<&[f64]>,
        out: &mut [f64],
        s: &mut Scratch,
    ) {
        let t = &self.tables;
        let (n1, nq) = (t.n1, t.n_q);
        let (nl, nqq) = (n1 * n1, nq * nq);
        let lv = 2 * nl;
        let exps = &self.pressure.exponents;
        let cm = &self.mesh.cells[cell];
        let det = cm.det();
        let ij = cm.inv_jac();
        let (q_out, rest) = out.split_at_mut(lv);
        let (w_out, d_out) = rest.split_at_mut(lv);

        let conv = terms.convection;
        let conv_state = state.filter(|_| conv.is_some());
        let svals = conv_state.map(|st| &st.cell_values[2 * cell * nqq..2 * (cell + 1) * nqq]);

        let use_v = v.is_some();
        if let Some(v) = v {
            for c in 0..2 {
                eval_scalar(
                    t,
                    &v[c * nl..(c + 1) * nl],
                    &mut s.vals[c],
                    &mut s.dx[c],
                    &mut s.dy[c],
                    &mut s.tmp_a,
                    &mut s.tmp_b,
                );
            }
        }
        let use_p = terms.div && p.is_some();
        if use_p {
            eval_pressure(t, exps, p.unwrap(), &mut s.pv);
        }
        let vol_conv = terms.conv_volume && svals.is_some();
        let want_grad = (use_v && (terms.viscous != 0.0 || vol_conv)) || use_p || (vol_conv && conv == Some(ConvectionForm::Residual));
        let want_div = use_v && terms.div;
        for qy in 0..nq {
            for qx in 0..nq {
                let q = qy * nq + qx;
                let jxw = t.weights[qx] * t.weights[qy] * det;
                if terms.mass && use_v {
                    s.fm[0][q] = jxw * s.vals[0][q];
                    s.fm[1][q] = jxw * s.vals[1][q];
                }
                if !want_grad && !want_div {
                    continue;
                }
                let mut g = [[0.0; 2]; 2];
                let mut gc = [[0.0; 2]; 2];
                if use_v {
                    for c in 0..2 {
                        g[c] = [s.dx[c][q] * ij[0], s.dy[c][q] * ij[1]];
                        gc[c] = [terms.viscous * g[c][0], terms.viscous * g[c][1]];
                    }
                }
                if use_p {
                    gc[0][0] -= s.pv[q];
                    gc[1][1] -= s.pv[q];
                }
                if want_div {
                    s.fd[q] = -(g[0][0] + g[1][1]) * jxw;
                }
                if vol_conv {
                    let sv = svals.unwrap();
                    let st = [sv[q], sv[nqq + q]];
                    match conv.unwrap() {
                        ConvectionForm::Residual => {
                            for i in 0..2 {
                                for j in 0..2 {
                                    gc[i][j] -= st[i] * st[j];
                                }
                            }
                        }
                        ConvectionForm::Jacobian => {
                            if use_v {
                                let vh = [s.vals[0][q], s.vals[1][q]];
                                for i in 0..2 {
                                    for j in 0..2 {
                                        gc[i][j] -= vh[i] * st[j] + st[i] * vh[j];
                                    }
                                }
                            }
                        }
                    }
                }
                for c in 0..2 {
                    s.fx[c][q] = gc[c][0] * ij[0] * jxw;
                    s.fy[c][q] = gc[c][1] * ij[1] * jxw;
                }
            }
        }
        if terms.mass && use_v {
            for c in 0..2 {
                integrate_scalar(t, Some(&s.fm[c]), None, None, &mut q_out[c * nl..(c + 1) * nl], &mut s.tmp_a, &mut s.tmp_b);
            }
        }
        if want_grad {
            for c in 0..2 {
                integrate_scalar(t, None, Some(&s.fx[c]), Some(&s.fy[c]), &mut w_out[c * nl..(c + 1) * nl], &mut s.tmp_a, &mut s.tmp_b);
            }
        }
        if want_div {
            integrate_pressure(t, exps, &s.fd, d_out);
        }

        self.face_kernel(cell, terms, conv_state, v, p, w_out, d_out, s);
    }

    #[allow(clippy::too_many_arguments)]
    fn face_kernel(
        &self,
        cell: usize,
        terms: &Terms,
        state: Option<&SpatialState>,
        v: Option<&[f64]>,
        p: Option<&[f64]>,
        w_out: &mut [f64],
        d_out: &mut [f64],
        s: &mut Scratch,
    ) {
        let t = &self.tables;
        let (n1, nq) = (t.n1, t.n_q);
        let nl = n1 * n1;
        let dim = self.pressure.dim;
        let exps = &self.pressure.exponents;
        let nit = &self.nitsche;
        let ij = self.mesh.cells[cell].inv_jac();
        let conv = terms.convection.filter(|_| state.is_some());
        for &fi in &self.mesh.cell_faces[cell] {
            let face = &self.mesh.faces[fi];
            let dirichlet = face.tag == BoundaryTag::Dirichlet;
            let any_conv = conv.is_some() && (terms.conv_boundary || (dirichlet && (terms.inflow || terms.inflow_data)));
            let any_lin = dirichlet && (terms.nitsche || terms.pressure_boundary);
            if !any_conv && !any_lin {
                continue;
            }
            let (axis, end) = face.side.axis_and_end();
            let n = face.normal();
            let sign = n[axis];
            let h = self.penalty_length(face.length);
            if let Some(v) = v {
                for c in 0..2 {
                    face_trace(t, axis, end, &v[c * nl..(c + 1) * nl], &mut s.tv[c], &mut s.tdn[c]);
                    for q in 0..nq {
                        s.tdn[c][q] *= sign * ij[axis];
                    }
                }
            } else {
                for c in 0..2 {
                    s.tv[c].fill(0.0);
                    s.tdn[c].fill(0.0);
                }
            }
            let use_pb = dirichlet && terms.pressure_boundary;
            if use_pb {
                for q in 0..nq {
                    face_pressure_basis(t, exps, axis, end, q, &mut s.pb[q * dim..(q + 1) * dim]);
                }
            }
            let (sv, gd) = match state {
                Some(st) => (
                    &st.face_values[2 * fi * nq..2 * (fi + 1) * nq],
                    &st.face_data[2 * fi * nq..2 * (fi + 1) * nq],
                ),
                None => (&[][..], &[][..]),
            };
            let mut any_normal = false;
            for q in 0..nq {
                let wq = t.weights[q] * face.length;
                let tv = [s.tv[0][q], s.tv[1][q]];
                let vn = tv[0] * n[0] + tv[1] * n[1];
                let mut fv = [0.0; 2];
                let mut fnd = [0.0; 2];
                let mut fd = 0.0;
                if dirichlet && terms.nitsche && v.is_some() {
                    for c in 0..2 {
                        fv[c] += nit.nu * nit.gamma1 / h * tv[c] + nit.gamma2 / h * vn * n[c] - nit.nu * s.tdn[c][q];
                        fnd[c] -= nit.nu * tv[c];
                    }
                    any_normal = true;
                }
                if use_pb {
                    if let Some(p) = p {
                        let ph: f64 = p.iter().zip(&s.pb[q * dim..(q + 1) * dim]).map(|(a, b)| a * b).sum();
                        fv[0] += ph * n[0];
                        fv[1] += ph * n[1];
                    }
                    fd = vn;
                }
                if let Some(form) = conv {
                    let st = [sv[q], sv[nq + q]];
                    let g = [gd[q], gd[nq + q]];
                    let y = st[0] * n[0] + st[1] * n[1];
                    match form {
                        ConvectionForm::Residual => {
                            for c in 0..2 {
                                if terms.conv_boundary {
                                    fv[c] += y * st[c];
                                }
                                if dirichlet && terms.inflow {
                                    fv[c] -= neg_part(y) * st[c];
                                }
                                if dirichlet && terms.inflow_data {
                                    fv[c] += neg_part(y) * g[c];
                                }
                            }
                        }
                        ConvectionForm::Jacobian => {
                            for c in 0..2 {
                                if terms.conv_boundary {
                                    fv[c] += vn * st[c] + y * tv[c];
                                }
                                if dirichlet && terms.inflow {
                                    fv[c] -= neg_part(y) * tv[c] + neg_part_deriv(y) * vn * st[c];
                                }
                                if dirichlet && terms.inflow_data {
                                    fv[c] += neg_part_deriv(y) * vn * g[c];
                                }
                            }
                        }
                    }
                }
                for c in 0..2 {
                    s.fv[c][q] = wq * fv[c];
                    s.fn_[c][q] = wq * fnd[c] * sign * ij[axis];
                }
                s.fdf[q] = wq * fd;
            }
            for c in 0..2 {
                let fnd = if any_normal { Some(&s.fn_[c][..]) } else { None };
                face_integrate(t, axis, end, &s.fv[c], fnd, &mut w_out[c * nl..(c + 1) * nl]);
            }
            if use_pb && v.is_some() {
                for q in 0..nq {
                    let f = s.fdf[q];
                    for m in 0..dim {
                        d_out[m] += f * s.pb[q * dim + m];
                    }
                }
            }
        }
    }

    /// Runs `f` on every cell and hands the local result to `scatter` in
    /// cell order.
    pub(crate) fn cell_loop(
        &self,
        len: usize,
        f: impl Fn(usize, &mut Scratch, &mut [f64]) + Sync,
        mut scatter: impl FnMut(usize, &[f64]),
    ) {
        let n = self.mesh.n_cells();
        if self.parallel && rayon::current_num_threads() > 1 && n > 1 {
            const CHUNK: usize = 64;
            for start in (0..n).step_by(CHUNK) {
                let end = (start + CHUNK).min(n);
                let results: Vec<Vec<f64>> = (start..end)
                    .into_par_iter()
                    .map_init(
                        || self.scratch(),
                        |s, c| {
                            let mut out = vec![0.0; len];
                            f(c, s, &mut out);
                            out
                        },
                    )
                    .collect();
                for (c, r) in (start..end).zip(&results) {
                    scatter(c, r);
                }
            }
        } else {
            let mut s = self.scratch();
            let mut out = vec![0.0; len];
            for c in 0..n {
                out.fill(0.0);
                f(c, &mut s, &mut out);
                scatter(c, &out);
            }
        }
    }

    /// Global kernel pass.
    pub fn apply(&self, terms: &Terms, state: Option<&SpatialState>, v: Option<&[f64]>, p: Option<&[f64]>) -> Applied {
        let (lv, dim) = (self.local_v(), self.local_p());
        let mut res = Applied { q: vec![0.0; self.nv()], w: vec![0.0; self.nv()], d: vec![0.0; self.np()] };
        let gather = |c: usize, lvv: &mut [f64], lpp: &mut [f64]| {
            if let Some(v) = v {
                self.velocity.gather(c, v, lvv);
            }
            if let Some(p) = p {
                lpp.copy_from_slice(&p[c * dim..(c + 1) * dim]);
            }
        };
        self.cell_loop(
            self.local_out_len(),
            |c, s, out| {
                let mut lvv = vec![0.0; lv];
                let mut lpp = vec![0.0; dim];
                gather(c, &mut lvv, &mut lpp);
                self.cell_kernel(
                    c,
                    terms,
                    state,
                    v.map(|_| &lvv[..]),
                    p.map(|_| &lpp[..]),
                    out,
                    s,
                );
            },
            |c, out| {
                self.velocity.scatter_add(c, &out[..lv], &mut res.q);
                self.velocity.scatter_add(c, &out[lv..2 * lv], &mut res.w);
                for (a, b) in res.d[c * dim..(c + 1) * dim].iter_mut().zip(&out[2 * lv..]) {
                    *a += b;
                }
            },
        );
        res
    }

    fn velocity_only(&self, terms: Terms, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nv(), v.len())?;
        Ok(self.apply(&terms, None, Some(v), None).w)
    }

    pub fn apply_mass(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nv(), v.len())?;
        Ok(self.apply(&Terms { mass: true, ..Default::default() }, None, Some(v), None).q)
    }

    pub fn apply_stiffness(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.velocity_only(Terms { viscous: 1.0, ..Default::default() }, v)
    }

    /// `B_h v` with `(B_h)_{lj} = -∫ (div χ_j) ψ_l`.
    pub fn apply_div(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nv(), v.len())?;
        Ok(self.apply(&Terms { div: true, ..Default::default() }, None, Some(v), None).d)
    }

    pub fn apply_div_transpose(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_len(self.np(), p.len())?;
        Ok(self.apply(&Terms { div: true, ..Default::default() }, None, None, Some(p)).w)
    }

    pub fn apply_pressure_mass(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_len(self.np(), p.len())?;
        let dim = self.pressure.dim;
        let gram = self.pressure.reference_gram();
        let mut out = vec![0.0; p.len()];
        for (c, cell) in self.mesh.cells.iter().enumerate() {
            for a in 0..dim {
                out[c * dim + a] = cell.det() * (0..dim).map(|b| gram[a * dim + b] * p[c * dim + b]).sum::<f64>();
            }
        }
        Ok(out)
    }

    /// Symmetric Nitsche block `-ν (G^v + G^v^T) + ν γ1/h M_Γ + γ2/h M_Γ^n`.
    pub fn apply_nitsche_velocity(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.velocity_only(Terms { nitsche: true, ..Default::default() }, v)
    }

    /// `(G^p)^T p`.
    pub fn apply_pressure_boundary(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_len(self.np(), p.len())?;
        Ok(self.apply(&Terms { pressure_boundary: true, ..Default::default() }, None, None, Some(p)).w)
    }

    /// `G^p v`.
    pub fn apply_pressure_boundary_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nv(), v.len())?;
        Ok(self.apply(&Terms { pressure_boundary: true, ..Default::default() }, None, Some(v), None).d)
    }

    /// `H(V)`: divergence-form convection with the boundary term on all
    /// boundary faces.
    pub fn convection(&self, state: &SpatialState) -> Vec<f64> {
        let terms = Terms {
            convection: Some(ConvectionForm::Residual),
            conv_volume: true,
            conv_boundary: true,
            ..Default::default()
        };
        self.apply(&terms, Some(state), None, None).w
    }

    /// Inflow term on Dirichlet faces and its data counterpart.
    ///
    /// Returns `(N(V), rhs)` with `N(V) = -<(v.n)^- v, z>` and
    /// `rhs = -<(v.n)^- g, z>`, the latter being part of the Nitsche
    /// right-hand side, so that the residual contains `N(V) - rhs`.
    pub fn convection_boundary_nitsche(&self, state: &SpatialState) -> (Vec<f64>, Vec<f64>) {
        let base = Terms { convection: Some(ConvectionForm::Residual), ..Default::default() };
        let op = self.apply(&Terms { inflow: true, ..base }, Some(state), None, None).w;
        let mut rhs = self.apply(&Terms { inflow_data: true, ..base }, Some(state), None, None).w;
        rhs.iter_mut().for_each(|x| *x = -*x);
        (op, rhs)
    }

    /// `H'(V) v̂` (volume and full-boundary parts).
    pub fn convection_jacobian_action(&self, state: &SpatialState, vhat: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nv(), vhat.len())?;
        let terms = Terms {
            convection: Some(ConvectionForm::Jacobian),
            conv_volume: true,
            conv_boundary: true,
            ..Default::default()
        };
        Ok(self.apply(&terms, Some(state), Some(vhat), None).w)
    }

    /// Linearization of the inflow term together with its data pairing.
    pub fn convection_boundary_jacobian_action(&self, state: &SpatialState, vhat: &[f64]) -> Result<Vec<f64>> {
        check_len(self.nv(), vhat.len())?;
        let terms = Terms {
            convection: Some(ConvectionForm::Jacobian),
            inflow: true,
            inflow_data: true,
            ..Default::default()
        };
        Ok(self.apply(&terms, Some(state), Some(vhat), None).w)
    }

    /// `<f(., t), χ_i>`.
    pub fn load_vector(&self, f: &VectorFn, time: f64) -> Vec<f64> {
        let t = &self.tables;
        let (nq, nl) = (t.n_q, self.velocity.nodes_per_cell());
        let nqq = nq * nq;
        let mut out = vec![0.0; self.nv()];
        let mut local = vec![0.0; 2 * nl];
        let mut fv = [vec![0.0; nqq], vec![0.0; nqq]];
        let (mut ta, mut tb) = (vec![0.0; t.n1 * nq], vec![0.0; t.n1 * nq]);
        for cell in &self.mesh.cells {
            for qy in 0..nq {
                for qx in 0..nq {
                    let jxw = t.weights[qx] * t.weights[qy] * cell.det();
                    let val = f(cell.map([t.points[qx], t.points[qy]]), time);
                    fv[0][qy * nq + qx] = jxw * val[0];
                    fv[1][qy * nq + qx] = jxw * val[1];
                }
            }
            local.fill(0.0);
            for c in 0..2 {
                integrate_scalar(t, Some(&fv[c]), None, None, &mut local[c * nl..(c + 1) * nl], &mut ta, &mut tb);
            }
            self.velocity.scatter_add(cell.id, &local, &mut out);
        }
        out
    }

    /// Linear-in-`g` Nitsche pairings at time `t`: velocity
    /// `-ν<g, ∂_n z> + ν γ1/h <g, z> + γ2/h <g.n, z.n>` and pressure `<g.n, q>`.
    pub fn boundary_load(&self, g: &VectorFn, time: f64) -> (Vec<f64>, Vec<f64>) {
        let t = &self.tables;
        let (nq, nl) = (t.n_q, self.velocity.nodes_per_cell());
        let dim = self.pressure.dim;
        let nit = &self.nitsche;
        let mut ov = vec![0.0; self.nv()];
        let mut op = vec![0.0; self.np()];
        let mut local = vec![0.0; 2 * nl];
        let mut pb = vec![0.0; dim];
        for face in self.mesh.faces.iter().filter(|f| f.tag == BoundaryTag::Dirichlet) {
            let cell = &self.mesh.cells[face.cell];
            let (axis, end) = face.side.axis_and_end();
            let n = face.normal();
            let ij = cell.inv_jac();
            let h = self.penalty_length(face.length);
            let mut fv = [vec![0.0; nq], vec![0.0; nq]];
            let mut fnd = [vec![0.0; nq], vec![0.0; nq]];
            for q in 0..nq {
                let wq = t.weights[q] * face.length;
                let gv = g(cell.map(face_point(t, axis, end, q)), time);
                let gn = gv[0] * n[0] + gv[1] * n[1];
                for c in 0..2 {
                    fv[c][q] = wq * (nit.nu * nit.gamma1 / h * gv[c] + nit.gamma2 / h * gn * n[c]);
                    fnd[c][q] = -wq * nit.nu * gv[c] * n[axis] * ij[axis];
                }
                face_pressure_basis(t, &self.pressure.exponents, axis, end, q, &mut pb);
                for m in 0..dim {
                    op[face.cell * dim + m] += wq * gn * pb[m];
                }
            }
            local.fill(0.0);
            for c in 0..2 {
                face_integrate(t, axis, end, &fv[c], Some(&fnd[c]), &mut local[c * nl..(c + 1) * nl]);
            }
            self.velocity.scatter_add(face.cell, &local, &mut ov);
        }
        (ov, op)
    }

    /// Slab right-hand sides: `F^a = m_a <f(t_a), χ>` and the Nitsche data
    /// vectors `L^a` (velocity and pressure rows), stacked by temporal node.
    pub fn assemble_rhs(
        &self,
        f: &VectorFn,
        g: &VectorFn,
        tm: &TemporalMatrices,
        t_start: f64,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (nv, np) = (self.nv(), self.np());
        let n = tm.n();
        let mut fo = vec![0.0; n * nv];
        let mut lv = vec![0.0; n * nv];
        let mut lp = vec![0.0; n * np];
        for (a, &ta) in tm.node_times(t_start).iter().enumerate() {
            let m = tm.mass[a];
            for (o, x) in fo[a * nv..(a + 1) * nv].iter_mut().zip(self.load_vector(f, ta)) {
                *o = m * x;
            }
            let (bv, bp) = self.boundary_load(g, ta);
            for (o, x) in lv[a * nv..(a + 1) * nv].iter_mut().zip(bv) {
                *o = m * x;
            }
            for (o, x) in lp[a * np..(a + 1) * np].iter_mut().zip(bp) {
                *o = m * x;
            }
        }
        (fo, lv, lp)
    }
}

#[cfg(test)]
mod tests;
