//! Space-time error norms and experimental orders of convergence.

use super::cases::ExactSolution;
use crate::elements::{gauss_legendre, gauss_legendre_reference, temporal_basis};
use crate::geometry::TimePartition;
use crate::operators::SpatialOps;
use crate::slab::SlabVector;
use crate::solver::Trajectory;
use crate::temporal::assemble_temporal;

/// Errors of one run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorReport {
    /// Velocity in `L^2(L^2)`.
    pub velocity_l2: f64,
    /// Velocity in `L^2(H^1)` (full norm).
    pub velocity_h1: f64,
    /// Velocity maximum over the quadrature points (sampled `L^inf(L^inf)`).
    pub velocity_linf: f64,
    /// Mean-adjusted pressure in `L^2(L^2)`.
    pub pressure_l2: f64,
    /// Divergence of the velocity error in `L^2(L^2)`.
    pub divergence_l2: f64,
}

impl ErrorReport {
    pub const NAMES: [&'static str; 5] = ["e_v_l2l2", "e_v_l2h1", "e_v_linf", "e_p_l2l2", "e_div_l2l2"];

    pub fn values(&self) -> [f64; 5] {
        [self.velocity_l2, self.velocity_h1, self.velocity_linf, self.pressure_l2, self.divergence_l2]
    }
}

/// Point values of the discrete solution on one cell.
struct CellSample {
    v: [f64; 2],
    grad: [[f64; 2]; 2],
    p: f64,
}

/// Integrates the error of `trajectory` against `exact`.
///
/// Each cell uses `(r + 4)^2` Gauss points and each slab `k + 3` Gauss
/// points in time. The pressure of both fields is shifted to zero mean at
/// every temporal quadrature point before differencing.
pub fn compute_errors(ops: &SpatialOps, trajectory: &Trajectory, exact: &dyn ExactSolution) -> ErrorReport {
    let k = trajectory.k;
    let basis = temporal_basis(k);
    let time_rule = gauss_legendre_reference(k + 3);
    let space_rule = gauss_legendre(ops.r + 4);
    let (points, weights) = space_rule.tensor();
    let vel = &ops.velocity;
    let n1 = vel.n1;
    let values: Vec<Vec<f64>> = space_rule.nodes.iter().map(|&x| vel.basis.eval_all(x)).collect();
    let derivs: Vec<Vec<f64>> = space_rule.nodes.iter().map(|&x| vel.basis.deriv_all(x)).collect();
    let nq = space_rule.len();
    let area = ops.mesh.domain.area();

    let mut sums = [0.0; 4];
    let mut linf: f64 = 0.0;
    let mut samples: Vec<CellSample> = Vec::with_capacity(points.len());
    let mut exact_p = Vec::with_capacity(points.len());
    for (n, u) in trajectory.slabs.iter().enumerate() {
        let (t0, t1) = trajectory.partition.interval(n);
        let tau = t1 - t0;
        for (&s, &ws) in time_rule.nodes.iter().zip(&time_rule.weights) {
            let t = t0 + 0.5 * tau * (s + 1.0);
            let wt = 0.5 * tau * ws;
            let phi = basis.eval_all(s);
            let mut v_t = vec![0.0; ops.nv()];
            let mut p_t = vec![0.0; ops.np()];
            for (a, &pa) in phi.iter().enumerate() {
                crate::linalg::axpy(pa, u.vel(a), &mut v_t);
                crate::linalg::axpy(pa, u.pres(a), &mut p_t);
            }
            // first pass: pressure means
            let (mut mean_h, mut mean_ex) = (0.0, 0.0);
            for cell in &ops.mesh.cells {
                let det = cell.det();
                for (xi, w) in points.iter().zip(&weights) {
                    mean_h += w * det * ops.pressure.eval_in_cell(&p_t, cell.id, *xi);
                    mean_ex += w * det * exact.pressure(cell.map(*xi), t);
                }
            }
            mean_h /= area;
            mean_ex /= area;

            for cell in &ops.mesh.cells {
                let det = cell.det();
                let jac = cell.inv_jac();
                let nodes = vel.cell_nodes(cell.id);
                samples.clear();
                exact_p.clear();
                for qy in 0..nq {
                    for qx in 0..nq {
                        let mut sample = CellSample { v: [0.0; 2], grad: [[0.0; 2]; 2], p: 0.0 };
                        for (l, &m) in nodes.iter().enumerate() {
                            let (ix, iy) = (l % n1, l / n1);
                            let phi = values[qx][ix] * values[qy][iy];
                            let dphi = [derivs[qx][ix] * values[qy][iy] * jac[0], values[qx][ix] * derivs[qy][iy] * jac[1]];
                            for c in 0..2 {
                                let coef = v_t[2 * m + c];
                                sample.v[c] += phi * coef;
                                sample.grad[c][0] += dphi[0] * coef;
                                sample.grad[c][1] += dphi[1] * coef;
                            }
                        }
                        let xi = points[qy * nq + qx];
                        sample.p = ops.pressure.eval_in_cell(&p_t, cell.id, xi) - mean_h;
                        samples.push(sample);
                        exact_p.push(exact.pressure(cell.map(xi), t) - mean_ex);
                    }
                }
                for (q, sample) in samples.iter().enumerate() {
                    let x = cell.map(points[q]);
                    let w = weights[q] * det * wt;
                    let v = exact.velocity(x, t);
                    let g = exact.gradient(x, t);
                    let ev = [sample.v[0] - v[0], sample.v[1] - v[1]];
                    let mut eg2 = 0.0;
                    for c in 0..2 {
                        for d in 0..2 {
                            eg2 += (sample.grad[c][d] - g[c][d]).powi(2);
                        }
                    }
                    let ediv = sample.grad[0][0] + sample.grad[1][1] - g[0][0] - g[1][1];
                    let ev2 = ev[0] * ev[0] + ev[1] * ev[1];
                    sums[0] += w * ev2;
                    sums[1] += w * eg2;
                    sums[2] += w * (sample.p - exact_p[q]).powi(2);
                    sums[3] += w * ediv * ediv;
                    linf = linf.max(ev2.sqrt());
                }
            }
        }
    }
    ErrorReport {
        velocity_l2: sums[0].sqrt(),
        velocity_h1: (sums[0] + sums[1]).sqrt(),
        velocity_linf: linf,
        pressure_l2: sums[2].sqrt(),
        divergence_l2: sums[3].sqrt(),
    }
}

/// Nodal interpolant of the velocity and cellwise `L^2` projection of the
/// pressure at every temporal node of every slab.
pub fn interpolate_trajectory(ops: &SpatialOps, exact: &dyn ExactSolution, k: usize, partition: &TimePartition) -> Trajectory {
    let quad = gauss_legendre(ops.r + 2);
    let slabs = (0..partition.n_slabs())
        .map(|n| {
            let times = assemble_temporal(k, partition.tau(n), n).node_times(partition.interval(n).0);
            let mut u = SlabVector::zeros(k, ops.nv(), ops.np());
            for (a, &t) in times.iter().enumerate() {
                u.vel_mut(a).copy_from_slice(&ops.velocity.interpolate(|x| exact.velocity(x, t)));
                u.pres_mut(a).copy_from_slice(&ops.pressure.project(&ops.mesh, &quad, |x| exact.pressure(x, t)));
            }
            u
        })
        .collect();
    Trajectory { partition: partition.clone(), k, slabs }
}

/// Rates `log2(e_{c-1} / e_c)` between consecutive halvings; `None` where
/// an error vanishes.
pub fn eoc(errors: &[f64]) -> Vec<Option<f64>> {
    errors
        .windows(2)
        .map(|w| if w[0] > 0.0 && w[1] > 0.0 { Some((w[0] / w[1]).log2()) } else { None })
        .collect()
}
