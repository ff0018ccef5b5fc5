//! Cell-wise space-time Vanka smoother.
//!
//! A patch holds all velocity and pressure DoFs of one cell at all temporal
//! nodes. Its matrix is the restriction of the slab Jacobian to those DoFs,
//! assembled from element matrices obtained by probing the cell kernel. In
//! surrogate mode the convection linearization is frozen at the temporal
//! midpoint of the slab and shared by all nodes.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;
use crate::operators::{ConvectionForm, SpatialOps, SpatialState, Terms};
use crate::slab::SlabOperator;

/// Convection treatment inside the patches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum VankaMode {
    /// Linearization at every temporal node (the exact patch Jacobian).
    Exact,
    /// Linearization at the slab midpoint, shared by all nodes.
    #[default]
    Surrogate,
}

/// State-independent element matrices of one cell (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct CellMatrices {
    /// Velocity mass, `lv x lv`.
    pub mass: Vec<f64>,
    /// Viscous and Nitsche velocity block, `lv x lv`.
    pub vv: Vec<f64>,
    /// Pressure gradient block `(B + G^p)^T`, `lv x dim`.
    pub vp: Vec<f64>,
    /// Divergence block `B + G^p`, `dim x lv`.
    pub pv: Vec<f64>,
}

fn probe_cells<T: Send>(ops: &SpatialOps, f: impl Fn(usize, &mut crate::operators::Scratch) -> T + Sync) -> Vec<T> {
    let n = ops.mesh.n_cells();
    if ops.parallel && rayon::current_num_threads() > 1 {
        (0..n).into_par_iter().map_init(|| ops.scratch(), |s, c| f(c, s)).collect()
    } else {
        let mut s = ops.scratch();
        (0..n).map(|c| f(c, &mut s)).collect()
    }
}

/// Element matrices of the linear slab terms on every cell.
pub fn linear_cell_matrices(ops: &SpatialOps) -> Vec<CellMatrices> {
    let (lv, dim) = (ops.local_v(), ops.local_p());
    let terms = Terms { mass: true, ..Terms::linear(ops.nitsche.nu) };
    probe_cells(ops, |c, s| {
        let mut m = CellMatrices { mass: vec![0.0; lv * lv], vv: vec![0.0; lv * lv], vp: vec![0.0; lv * dim], pv: vec![0.0; dim * lv] };
        let mut unit = vec![0.0; lv];
        let zero_p = vec![0.0; dim];
        let mut out = vec![0.0; ops.local_out_len()];
        for j in 0..lv {
            unit[j] = 1.0;
            out.fill(0.0);
            ops.cell_kernel(c, &terms, None, Some(&unit), Some(&zero_p), &mut out, s);
            unit[j] = 0.0;
            for i in 0..lv {
                m.mass[i * lv + j] = out[i];
                m.vv[i * lv + j] = out[lv + i];
            }
            for i in 0..dim {
                m.pv[i * lv + j] = out[2 * lv + i];
            }
        }
        let mut punit = vec![0.0; dim];
        for j in 0..dim {
            punit[j] = 1.0;
            out.fill(0.0);
            ops.cell_kernel(c, &terms, None, None, Some(&punit), &mut out, s);
            punit[j] = 0.0;
            for i in 0..lv {
                m.vp[i * dim + j] = out[lv + i];
            }
        }
        m
    })
}

/// Element matrices (`lv x lv`) of the convection linearization at `state`.
pub fn convection_cell_matrices(ops: &SpatialOps, state: &SpatialState) -> Vec<Vec<f64>> {
    let lv = ops.local_v();
    let terms = Terms::default().with_convection(ConvectionForm::Jacobian);
    probe_cells(ops, |c, s| {
        let mut m = vec![0.0; lv * lv];
        let mut unit = vec![0.0; lv];
        let mut out = vec![0.0; ops.local_out_len()];
        for j in 0..lv {
            unit[j] = 1.0;
            out.fill(0.0);
            ops.cell_kernel(c, &terms, Some(state), Some(&unit), None, &mut out, s);
            unit[j] = 0.0;
            for i in 0..lv {
                m[i * lv + j] = out[lv + i];
            }
        }
        m
    })
}

/// Convection element matrices per temporal node for `mode`: empty without
/// convection, one shared set in surrogate mode.
pub fn patch_convection(op: &SlabOperator, velocities: &[Vec<f64>], mode: VankaMode) -> Vec<Vec<Vec<f64>>> {
    if !op.convection {
        return Vec::new();
    }
    match mode {
        VankaMode::Exact => (0..=op.k())
            .map(|a| convection_cell_matrices(&op.ops, &op.node_state(&velocities[a], a)))
            .collect(),
        VankaMode::Surrogate => {
            let (v, t) = midpoint_velocity(op, velocities);
            let state = op.ops.state(&v, Some((&*op.dirichlet, t)));
            vec![convection_cell_matrices(&op.ops, &state)]
        }
    }
}

/// Velocity at the temporal midpoint of the slab and the midpoint time.
pub fn midpoint_velocity(op: &SlabOperator, velocities: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let phi = op.tm.basis.eval_all(0.0);
    let mut v = vec![0.0; op.nv()];
    for (w, va) in phi.iter().zip(velocities) {
        crate::linalg::axpy(*w, va, &mut v);
    }
    (v, op.t_start + 0.5 * op.tm.tau)
}

/// Cells sharing at least a vertex with `cell`, including itself.
fn vertex_neighbours(ops: &SpatialOps, cell: usize) -> Vec<usize> {
    let n = ops.mesh.n as isize;
    let (i, j) = ops.mesh.cell_index(cell);
    let mut out = Vec::with_capacity(9);
    for dj in -1..=1 {
        for di in -1..=1 {
            let (a, b) = (i as isize + di, j as isize + dj);
            if (0..n).contains(&a) && (0..n).contains(&b) {
                out.push((b * n + a) as usize);
            }
        }
    }
    out
}

/// The single cell of a one-cell mesh with Dirichlet data on every face
/// leaves the pressure constant undetermined.
fn needs_pinning(ops: &SpatialOps, cell: usize) -> bool {
    let faces = &ops.mesh.cell_faces[cell];
    faces.len() == 4 && faces.iter().all(|&f| ops.mesh.faces[f].tag == BoundaryTag::Dirichlet)
}

/// Dense patch matrix of `cell` with local layout `[V^0..V^k, P^0..P^k]`.
///
/// `conv` holds per-node convection element matrices (one shared set, or
/// none). Pinned pressure constants get a unit row and column.
pub fn patch_matrix(op: &SlabOperator, linear: &[CellMatrices], conv: &[Vec<Vec<f64>>], cell: usize) -> Mat<f64> {
    let ops = &op.ops;
    let (lv, dim) = (ops.local_v(), ops.local_p());
    let n = op.k() + 1;
    let size = n * (lv + dim);
    let gid: Vec<usize> = (0..lv).map(|l| ops.velocity.global_dof(cell, l)).collect();
    // accumulated velocity blocks over all cells touching the patch
    let mut mass = vec![0.0; lv * lv];
    let mut vv = vec![0.0; lv * lv];
    let mut cv = vec![vec![0.0; lv * lv]; conv.len()];
    for nb in vertex_neighbours(ops, cell) {
        let pairs: Vec<(usize, usize)> = (0..lv)
            .filter_map(|l| {
                let g = ops.velocity.global_dof(nb, l);
                gid.iter().position(|&x| x == g).map(|p| (l, p))
            })
            .collect();
        let em = &linear[nb];
        for &(l1, p1) in &pairs {
            for &(l2, p2) in &pairs {
                mass[p1 * lv + p2] += em.mass[l1 * lv + l2];
                vv[p1 * lv + p2] += em.vv[l1 * lv + l2];
                for (acc, c) in cv.iter_mut().zip(conv) {
                    acc[p1 * lv + p2] += c[nb][l1 * lv + l2];
                }
            }
        }
    }
    let em = &linear[cell];
    let tm = &op.tm;
    let mut s = Mat::<f64>::zeros(size, size);
    let poff = n * lv;
    for a in 0..n {
        let ma = tm.mass[a];
        let ca = (!cv.is_empty()).then(|| &cv[a.min(cv.len() - 1)]);
        for b in 0..n {
            let kab = tm.k_entry(a, b);
            for i in 0..lv {
                for j in 0..lv {
                    let mut v = kab * mass[i * lv + j];
                    if a == b {
                        v += ma * (vv[i * lv + j] + ca.map_or(0.0, |c| c[i * lv + j]));
                    }
                    s[(a * lv + i, b * lv + j)] = v;
                }
            }
        }
        for i in 0..lv {
            for m in 0..dim {
                s[(a * lv + i, poff + a * dim + m)] = ma * em.vp[i * dim + m];
                s[(poff + a * dim + m, a * lv + i)] = ma * em.pv[m * lv + i];
            }
        }
    }
    if needs_pinning(ops, cell) {
        for a in 0..n {
            let p = poff + a * dim;
            for j in 0..size {
                s[(p, j)] = 0.0;
                s[(j, p)] = 0.0;
            }
            s[(p, p)] = 1.0;
        }
    }
    s
}

/// Factorized patch of one cell.
#[derive(Clone, Debug)]
pub struct Patch {
    pub cell: usize,
    /// Global velocity DoFs of the cell (local order).
    pub velocity_dofs: Vec<usize>,
    /// Inverse of the patch matrix, formed from its partial-pivoting LU.
    pub inverse: Mat<f64>,
    /// A diagonal shift was needed to factorize.
    pub shifted: bool,
    pub pinned: bool,
}

fn factorize(s: &Mat<f64>) -> (Mat<f64>, bool) {
    let n = s.nrows();
    let singular = |lu: &faer::linalg::solvers::PartialPivLu<f64>| {
        let u = lu.U();
        let d: Vec<f64> = (0..n).map(|i| u[(i, i)].abs()).collect();
        let max = d.iter().copied().fold(0.0, f64::max);
        !max.is_finite() || d.iter().any(|&x| !(x > 1e-14 * max))
    };
    let lu = s.partial_piv_lu();
    if !singular(&lu) {
        return (lu.inverse(), false);
    }
    let norm_inf = (0..n).map(|i| (0..n).map(|j| s[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    let shift = 1e-12 * norm_inf.max(f64::MIN_POSITIVE);
    let shifted = Mat::from_fn(n, n, |i, j| s[(i, j)] + if i == j { shift } else { 0.0 });
    (shifted.partial_piv_lu().inverse(), true)
}

/// All patches of one level, bound to a level instance.
#[derive(Clone, Debug)]
pub struct PatchSet {
    pub patches: Vec<Patch>,
    pub mode: VankaMode,
    /// Identifier of the level operator the patches were built for.
    pub built_for: u64,
    pub shifted: usize,
    /// `max_K ‖J̃_K - J_K‖_2` when requested at build time.
    pub perturbation: Option<f64>,
    /// Reciprocal number of patches containing each velocity DoF.
    pub weights: Vec<f64>,
}

/// Builds and factorizes all patches of `op` at the per-node velocities
/// `velocities`.
pub fn build_patches(
    op: &SlabOperator,
    linear: &[CellMatrices],
    velocities: &[Vec<f64>],
    mode: VankaMode,
    built_for: u64,
    record_perturbation: bool,
) -> PatchSet {
    let ops = &op.ops;
    let lv = ops.local_v();
    let conv = patch_convection(op, velocities, mode);
    let exact = (record_perturbation && mode == VankaMode::Surrogate && op.convection)
        .then(|| patch_convection(op, velocities, VankaMode::Exact));
    let build = |cell: usize| {
        let s = patch_matrix(op, linear, &conv, cell);
        let diff = exact.as_ref().map(|ex| {
            let e = patch_matrix(op, linear, ex, cell);
            spectral_norm(&(&s - &e))
        });
        let (inverse, shifted) = factorize(&s);
        let patch = Patch {
            cell,
            velocity_dofs: (0..lv).map(|l| ops.velocity.global_dof(cell, l)).collect(),
            inverse,
            shifted,
            pinned: needs_pinning(ops, cell),
        };
        (patch, diff)
    };
    let n = ops.mesh.n_cells();
    let built: Vec<(Patch, Option<f64>)> = if ops.parallel && rayon::current_num_threads() > 1 {
        (0..n).into_par_iter().map(build).collect()
    } else {
        (0..n).map(build).collect()
    };
    let shifted = built.iter().filter(|(p, _)| p.shifted).count();
    let perturbation = if record_perturbation {
        Some(built.iter().map(|(_, d)| d.unwrap_or(0.0)).fold(0.0, f64::max))
    } else {
        None
    };
    let patches: Vec<Patch> = built.into_iter().map(|(p, _)| p).collect();
    let mut weights = vec![0.0f64; ops.nv()];
    for p in &patches {
        for &g in &p.velocity_dofs {
            weights[g] += 1.0;
        }
    }
    weights.iter_mut().for_each(|w| *w = 1.0 / w.max(1.0));
    PatchSet { patches, mode, built_for, shifted, perturbation, weights }
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat<f64>) -> f64 {
    m.singular_values().map(|s| s.first().copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
}

impl PatchSet {
    /// One additive sweep `d += ω Σ_K W R_K^T J̃_K^{-1} R_K (b - J d)` with the
    /// exact level Jacobian `jac` in the defect.
    pub fn sweep(
        &self,
        op: &SlabOperator,
        level_id: u64,
        jac: &dyn Fn(&[f64], &mut [f64]),
        b: &[f64],
        d: &mut [f64],
        omega: f64,
    ) -> Result<()> {
        if level_id != self.built_for {
            return Err(Error::StalePatches { built: self.built_for, current: level_id });
        }
        let mut defect = b.to_vec();
        if d.iter().any(|&x| x != 0.0) {
            let mut jd = vec![0.0; d.len()];
            jac(d, &mut jd);
            for (r, j) in defect.iter_mut().zip(&jd) {
                *r -= j;
            }
        }
        self.apply_local(op, &defect, d, omega);
        Ok(())
    }

    /// `d += ω Σ_K W R_K^T J̃_K^{-1} R_K r`, where `W` divides every
    /// velocity DoF by the number of patches sharing it.
    pub fn apply_local(&self, op: &SlabOperator, r: &[f64], d: &mut [f64], omega: f64) {
        let (nv, np, n) = (op.nv(), op.np(), op.k() + 1);
        let dim = op.ops.local_p();
        let lv = op.ops.local_v();
        let poff = n * nv;
        let lpoff = n * lv;
        let solve = |p: &Patch| {
            let size = n * (lv + dim);
            let mut local = vec![0.0; size];
            for a in 0..n {
                for (l, &g) in p.velocity_dofs.iter().enumerate() {
                    local[a * lv + l] = r[a * nv + g];
                }
                let src = poff + a * np + p.cell * dim;
                local[lpoff + a * dim..lpoff + (a + 1) * dim].copy_from_slice(&r[src..src + dim]);
                if p.pinned {
                    local[lpoff + a * dim] = 0.0;
                }
            }
            let mut y = vec![0.0; size];
            for (j, &x) in local.iter().enumerate() {
                if x != 0.0 {
                    let col = p.inverse.col(j);
                    for (yi, i) in y.iter_mut().zip(0..size) {
                        *yi += col[i] * x;
                    }
                }
            }
            y
        };
        let parallel = op.ops.parallel && rayon::current_num_threads() > 1;
        let sols: Vec<Vec<f64>> = if parallel {
            self.patches.par_iter().map(solve).collect()
        } else {
            self.patches.iter().map(solve).collect()
        };
        for (p, x) in self.patches.iter().zip(&sols) {
            for a in 0..n {
                for (l, &g) in p.velocity_dofs.iter().enumerate() {
                    d[a * nv + g] += omega * self.weights[g] * x[a * lv + l];
                }
                let dst = poff + a * np + p.cell * dim;
                for m in 0..dim {
                    d[dst + m] += omega * x[lpoff + a * dim + m];
                }
            }
        }
    }
}
