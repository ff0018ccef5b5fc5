//! Dense reference assembly of the slab residual and Jacobian.
//!
//! Every matrix is built point by point from the full 2D basis, without the
//! sum-factorized kernels, so it serves as an independent check of the
//! matrix-free actions on small problems.

use crate::elements::gauss_legendre;
use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;
use crate::operators::{neg_part, neg_part_deriv, SpatialOps, VectorFn};

use super::{SlabProblem, SlabVector};

/// Largest system the oracle will assemble.
pub const ORACLE_LIMIT: usize = 5000;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] += v;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn transpose(&self) -> Dense {
        let mut t = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.at(i, j);
            }
        }
        t
    }

    pub fn scaled_sum(&self, a: f64, other: &Dense, b: f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}

/// Basis values and physical gradients of all local velocity scalar
/// functions at a reference point.
struct PointBasis {
    val: Vec<f64>,
    grad: Vec<[f64; 2]>,
}

fn point_basis(ops: &SpatialOps, cell: usize, xi: [f64; 2]) -> PointBasis {
    let sp = &ops.velocity;
    let n1 = sp.n1;
    let size = ops.mesh.cells[cell].size;
    let mut val = Vec::with_capacity(n1 * n1);
    let mut grad = Vec::with_capacity(n1 * n1);
    for iy in 0..n1 {
        for ix in 0..n1 {
            let (bx, by) = (sp.basis.eval(ix, xi[0]), sp.basis.eval(iy, xi[1]));
            val.push(bx * by);
            grad.push([sp.basis.deriv(ix, xi[0]) * by / size[0], bx * sp.basis.deriv(iy, xi[1]) / size[1]]);
        }
    }
    PointBasis { val, grad }
}

fn pressure_basis(ops: &SpatialOps, xi: [f64; 2]) -> Vec<f64> {
    ops.pressure.exponents.iter().map(|&(i, j)| xi[0].powi(i as i32) * xi[1].powi(j as i32)).collect()
}

/// Reference point on a face at parameter `s`.
fn face_points(side: crate::geometry::Side, s: f64) -> [f64; 2] {
    let (axis, end) = side.axis_and_end();
    let e = end as f64;
    if axis == 0 {
        [e, s]
    } else {
        [s, e]
    }
}

/// Globally assembled spatial matrices of one level.
#[derive(Clone, Debug)]
pub struct DenseSpatial {
    pub nv: usize,
    pub np: usize,
    pub mass: Dense,
    pub stiffness: Dense,
    /// `-∫ div χ_j ψ_l`, `np x nv`.
    pub div: Dense,
    pub pressure_mass: Dense,
    /// `∫_Γ_D (∂_n χ_j) . χ_i`.
    pub normal_deriv: Dense,
    /// `∫_Γ_D (χ_j . n) ψ_l`, `np x nv`.
    pub pressure_boundary: Dense,
    /// `Σ_F 1/h_F ∫_F χ_j . χ_i`.
    pub penalty: Dense,
    /// `Σ_F 1/h_F ∫_F (χ_j . n)(χ_i . n)`.
    pub penalty_normal: Dense,
}

impl DenseSpatial {
    /// `-ν (G^v + G^v^T) + ν γ1 M_Γ + γ2 M_Γ^n`.
    pub fn nitsche(&self, ops: &SpatialOps) -> Dense {
        let c = ops.nitsche;
        let g = self.normal_deriv.scaled_sum(1.0, &self.normal_deriv.transpose(), 1.0);
        let p = self.penalty.scaled_sum(c.nu * c.gamma1, &self.penalty_normal, c.gamma2);
        p.scaled_sum(1.0, &g, -c.nu)
    }

    /// `ν A + N`.
    pub fn viscous(&self, ops: &SpatialOps) -> Dense {
        self.stiffness.scaled_sum(ops.nitsche.nu, &self.nitsche(ops), 1.0)
    }

    /// `B + G^p`.
    pub fn divergence(&self) -> Dense {
        self.div.scaled_sum(1.0, &self.pressure_boundary, 1.0)
    }
}

fn rule(ops: &SpatialOps) -> (Vec<f64>, Vec<f64>) {
    let q = gauss_legendre(ops.tables.n_q);
    (q.nodes, q.weights)
}

pub fn assemble_spatial(ops: &SpatialOps) -> DenseSpatial {
    let (nv, np) = (ops.nv(), ops.np());
    let sp = &ops.velocity;
    let nl = sp.nodes_per_cell();
    let dim = ops.pressure.dim;
    let (pts, wts) = rule(ops);
    let mut mass = Dense::zeros(nv, nv);
    let mut stiffness = Dense::zeros(nv, nv);
    let mut div = Dense::zeros(np, nv);
    let mut pressure_mass = Dense::zeros(np, np);
    let mut normal_deriv = Dense::zeros(nv, nv);
    let mut pressure_boundary = Dense::zeros(np, nv);
    let mut penalty = Dense::zeros(nv, nv);
    let mut penalty_normal = Dense::zeros(nv, nv);
    for cell in &ops.mesh.cells {
        let c = cell.id;
        let nodes = sp.cell_nodes(c);
        let det = cell.det();
        for (qy, &y) in pts.iter().enumerate() {
            for (qx, &x) in pts.iter().enumerate() {
                let w = wts[qx] * wts[qy] * det;
                let b = point_basis(ops, c, [x, y]);
                let psi = pressure_basis(ops, [x, y]);
                for i in 0..nl {
                    for j in 0..nl {
                        let m = w * b.val[i] * b.val[j];
                        let a = w * (b.grad[i][0] * b.grad[j][0] + b.grad[i][1] * b.grad[j][1]);
                        for comp in 0..2 {
                            mass.add(2 * nodes[i] + comp, 2 * nodes[j] + comp, m);
                            stiffness.add(2 * nodes[i] + comp, 2 * nodes[j] + comp, a);
                        }
                    }
                }
                for l in 0..dim {
                    for j in 0..nl {
                        for comp in 0..2 {
                            div.add(c * dim + l, 2 * nodes[j] + comp, -w * b.grad[j][comp] * psi[l]);
                        }
                    }
                    for m in 0..dim {
                        pressure_mass.add(c * dim + l, c * dim + m, w * psi[l] * psi[m]);
                    }
                }
            }
        }
    }
    for face in ops.mesh.faces.iter().filter(|f| f.tag == BoundaryTag::Dirichlet) {
        let c = face.cell;
        let nodes = sp.cell_nodes(c);
        let n = face.normal();
        let h = ops.penalty_length(face.length);
        for (&s, &ws) in pts.iter().zip(&wts) {
            let w = ws * face.length;
            let xi = face_points(face.side, s);
            let b = point_basis(ops, c, xi);
            let psi = pressure_basis(ops, xi);
            for i in 0..nl {
                for j in 0..nl {
                    let dn_j = b.grad[j][0] * n[0] + b.grad[j][1] * n[1];
                    let vv = w * b.val[i] * b.val[j];
                    for ci in 0..2 {
                        let gi = 2 * nodes[i] + ci;
                        normal_deriv.add(gi, 2 * nodes[j] + ci, w * dn_j * b.val[i]);
                        penalty.add(gi, 2 * nodes[j] + ci, vv / h);
                        for cj in 0..2 {
                            penalty_normal.add(gi, 2 * nodes[j] + cj, vv * n[ci] * n[cj] / h);
                        }
                    }
                }
            }
            for l in 0..ops.pressure.dim {
                for j in 0..nl {
                    for comp in 0..2 {
                        pressure_boundary.add(c * dim + l, 2 * nodes[j] + comp, w * b.val[j] * n[comp] * psi[l]);
                    }
                }
            }
        }
    }
    DenseSpatial { nv, np, mass, stiffness, div, pressure_mass, normal_deriv, pressure_boundary, penalty, penalty_normal }
}

fn eval_local(nodes: &[usize], b: &PointBasis, v: &[f64]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut val = [0.0; 2];
    let mut grad = [[0.0; 2]; 2];
    for (l, &m) in nodes.iter().enumerate() {
        for c in 0..2 {
            val[c] += b.val[l] * v[2 * m + c];
            grad[c][0] += b.grad[l][0] * v[2 * m + c];
            grad[c][1] += b.grad[l][1] * v[2 * m + c];
        }
    }
    (val, grad)
}

/// Nonlinear convection vector `H(V) - <(v.n)^- (v - g), z>_{Γ_D}` with data
/// `g(., t)`.
pub fn convection_vector(ops: &SpatialOps, v: &[f64], g: &VectorFn, t: f64) -> Vec<f64> {
    let sp = &ops.velocity;
    let (pts, wts) = rule(ops);
    let mut out = vec![0.0; ops.nv()];
    for cell in &ops.mesh.cells {
        let nodes = sp.cell_nodes(cell.id);
        for (qy, &y) in pts.iter().enumerate() {
            for (qx, &x) in pts.iter().enumerate() {
                let w = wts[qx] * wts[qy] * cell.det();
                let b = point_basis(ops, cell.id, [x, y]);
                let (u, _) = eval_local(nodes, &b, v);
                for (l, &m) in nodes.iter().enumerate() {
                    for i in 0..2 {
                        let flux: f64 = (0..2).map(|j| u[i] * u[j] * b.grad[l][j]).sum();
                        out[2 * m + i] -= w * flux;
                    }
                }
            }
        }
    }
    for face in &ops.mesh.faces {
        let cell = &ops.mesh.cells[face.cell];
        let nodes = sp.cell_nodes(face.cell);
        let n = face.normal();
        for (&s, &ws) in pts.iter().zip(&wts) {
            let w = ws * face.length;
            let xi = face_points(face.side, s);
            let b = point_basis(ops, face.cell, xi);
            let (u, _) = eval_local(nodes, &b, v);
            let y = u[0] * n[0] + u[1] * n[1];
            let mut f = [y * u[0], y * u[1]];
            if face.tag == BoundaryTag::Dirichlet {
                let gv = g(cell.map(xi), t);
                for c in 0..2 {
                    f[c] -= neg_part(y) * (u[c] - gv[c]);
                }
            }
            for (l, &m) in nodes.iter().enumerate() {
                for c in 0..2 {
                    out[2 * m + c] += w * f[c] * b.val[l];
                }
            }
        }
    }
    out
}

/// Jacobian matrix of [`convection_vector`] with respect to `V`.
pub fn convection_jacobian(ops: &SpatialOps, v: &[f64], g: &VectorFn, t: f64) -> Dense {
    let sp = &ops.velocity;
    let nv = ops.nv();
    let (pts, wts) = rule(ops);
    let mut jac = Dense::zeros(nv, nv);
    for cell in &ops.mesh.cells {
        let nodes = sp.cell_nodes(cell.id);
        for (qy, &y) in pts.iter().enumerate() {
            for (qx, &x) in pts.iter().enumerate() {
                let w = wts[qx] * wts[qy] * cell.det();
                let b = point_basis(ops, cell.id, [x, y]);
                let (u, _) = eval_local(nodes, &b, v);
                // d/dv̂ of -(v̂_i u_j + u_i v̂_j) ∂_j z_i for v̂ = φ_k e_c
                for (l, &m) in nodes.iter().enumerate() {
                    for (k, &mk) in nodes.iter().enumerate() {
                        for i in 0..2 {
                            for c in 0..2 {
                                let mut s = 0.0;
                                for j in 0..2 {
                                    let vh_i = if i == c { b.val[k] } else { 0.0 };
                                    let vh_j = if j == c { b.val[k] } else { 0.0 };
                                    s += (vh_i * u[j] + u[i] * vh_j) * b.grad[l][j];
                                }
                                jac.add(2 * m + i, 2 * mk + c, -w * s);
                            }
                        }
                    }
                }
            }
        }
    }
    for face in &ops.mesh.faces {
        let cell = &ops.mesh.cells[face.cell];
        let nodes = sp.cell_nodes(face.cell);
        let n = face.normal();
        let dirichlet = face.tag == BoundaryTag::Dirichlet;
        for (&s, &ws) in pts.iter().zip(&wts) {
            let w = ws * face.length;
            let xi = face_points(face.side, s);
            let b = point_basis(ops, face.cell, xi);
            let (u, _) = eval_local(nodes, &b, v);
            let y = u[0] * n[0] + u[1] * n[1];
            let gv = g(cell.map(xi), t);
            for (l, &m) in nodes.iter().enumerate() {
                for (k, &mk) in nodes.iter().enumerate() {
                    let phi = b.val[k];
                    for i in 0..2 {
                        for c in 0..2 {
                            let vh_i = if i == c { phi } else { 0.0 };
                            let vhn = phi * n[c];
                            let mut f = vhn * u[i] + y * vh_i;
                            if dirichlet {
                                f -= neg_part(y) * vh_i + neg_part_deriv(y) * vhn * (u[i] - gv[i]);
                            }
                            jac.add(2 * m + i, 2 * mk + c, w * f * b.val[l]);
                        }
                    }
                }
            }
        }
    }
    jac
}

/// Nitsche data vectors at time `t`: velocity and pressure rows.
pub fn boundary_data(ops: &SpatialOps, g: &VectorFn, t: f64) -> (Vec<f64>, Vec<f64>) {
    let sp = &ops.velocity;
    let c = ops.nitsche;
    let dim = ops.pressure.dim;
    let (pts, wts) = rule(ops);
    let mut lv = vec![0.0; ops.nv()];
    let mut lp = vec![0.0; ops.np()];
    for face in ops.mesh.faces.iter().filter(|f| f.tag == BoundaryTag::Dirichlet) {
        let cell = &ops.mesh.cells[face.cell];
        let nodes = sp.cell_nodes(face.cell);
        let n = face.normal();
        let h = ops.penalty_length(face.length);
        for (&s, &ws) in pts.iter().zip(&wts) {
            let w = ws * face.length;
            let xi = face_points(face.side, s);
            let b = point_basis(ops, face.cell, xi);
            let gv = g(cell.map(xi), t);
            let gn = gv[0] * n[0] + gv[1] * n[1];
            for (l, &m) in nodes.iter().enumerate() {
                let dn = b.grad[l][0] * n[0] + b.grad[l][1] * n[1];
                for comp in 0..2 {
                    lv[2 * m + comp] += w
                        * (-c.nu * gv[comp] * dn + c.nu * c.gamma1 / h * gv[comp] * b.val[l]
                            + c.gamma2 / h * gn * n[comp] * b.val[l]);
                }
            }
            let psi = pressure_basis(ops, xi);
            for a in 0..dim {
                lp[face.cell * dim + a] += w * gn * psi[a];
            }
        }
    }
    (lv, lp)
}

/// `<f(., t), χ>`.
pub fn load(ops: &SpatialOps, f: &VectorFn, t: f64) -> Vec<f64> {
    let sp = &ops.velocity;
    let (pts, wts) = rule(ops);
    let mut out = vec![0.0; ops.nv()];
    for cell in &ops.mesh.cells {
        let nodes = sp.cell_nodes(cell.id);
        for (qy, &y) in pts.iter().enumerate() {
            for (qx, &x) in pts.iter().enumerate() {
                let w = wts[qx] * wts[qy] * cell.det();
                let b = point_basis(ops, cell.id, [x, y]);
                let fv = f(cell.map([x, y]), t);
                for (l, &m) in nodes.iter().enumerate() {
                    out[2 * m] += w * fv[0] * b.val[l];
                    out[2 * m + 1] += w * fv[1] * b.val[l];
                }
            }
        }
    }
    out
}

/// Dense residual and Jacobian of a slab problem at `u`.
#[derive(Clone, Debug)]
pub struct DenseSlab {
    pub residual: Vec<f64>,
    pub jacobian: Dense,
    pub spatial: DenseSpatial,
}

pub fn dense_oracle(problem: &SlabProblem, u: &SlabVector) -> Result<DenseSlab> {
    let op = &problem.op;
    let ops = &*op.ops;
    let (n, nv, np) = (op.k() + 1, op.nv(), op.np());
    let size = n * (nv + np);
    if size > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge { limit: ORACLE_LIMIT, requested: size });
    }
    crate::error::check_len(size, u.len())?;
    let sp = assemble_spatial(ops);
    let lin = sp.viscous(ops);
    let dv = sp.divergence();
    let dvt = dv.transpose();
    let times = op.node_times();
    let tm = &op.tm;
    let left = tm.basis.eval_all(-1.0);
    let g = &*op.dirichlet;
    let mprev = sp.mass.matvec(&problem.prev_trace);
    let mv: Vec<Vec<f64>> = (0..n).map(|b| sp.mass.matvec(u.vel(b))).collect();

    let mut res = vec![0.0; size];
    let mut jac = Dense::zeros(size, size);
    let poff = n * nv;
    for i in 0..n {
        let m = tm.mass[i];
        let vi = u.vel(i);
        let mut row = lin.matvec(vi);
        for (x, y) in row.iter_mut().zip(dvt.matvec(u.pres(i))) {
            *x += y;
        }
        let conv_jac = if op.convection {
            for (x, y) in row.iter_mut().zip(convection_vector(ops, vi, g, times[i])) {
                *x += y;
            }
            Some(convection_jacobian(ops, vi, g, times[i]))
        } else {
            None
        };
        let f = load(ops, &*problem.forcing, times[i]);
        let (lv, lp) = boundary_data(ops, g, times[i]);
        for r in 0..nv {
            let mut s = m * (row[r] - f[r] - lv[r]) - left[i] * mprev[r];
            for b in 0..n {
                s += tm.k_entry(i, b) * mv[b][r];
            }
            res[i * nv + r] = s;
        }
        let dvi = dv.matvec(vi);
        for l in 0..np {
            res[poff + i * np + l] = m * (dvi[l] - lp[l]);
        }
        for r in 0..nv {
            for b in 0..n {
                let kib = tm.k_entry(i, b);
                for c in 0..nv {
                    let mut x = kib * sp.mass.at(r, c);
                    if b == i {
                        x += m * lin.at(r, c);
                        if let Some(cj) = &conv_jac {
                            x += m * cj.at(r, c);
                        }
                    }
                    if x != 0.0 {
                        jac.add(i * nv + r, b * nv + c, x);
                    }
                }
            }
            for l in 0..np {
                jac.add(i * nv + r, poff + i * np + l, m * dvt.at(r, l));
            }
        }
        for l in 0..np {
            for c in 0..nv {
                jac.add(poff + i * np + l, i * nv + c, m * dv.at(l, c));
            }
        }
    }
    Ok(DenseSlab { residual: res, jacobian: jac, spatial: sp })
}
