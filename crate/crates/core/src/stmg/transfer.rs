//! Transfers between consecutive multigrid levels.
//!
//! Prolongation is the tensor product of a temporal embedding with the
//! spatial embeddings of velocity and pressure; restriction is its
//! transpose. Linearization states travel the other way by interpolation.

use super::schedule::TransferKind;
use crate::elements::TemporalBasis;
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::operators::SpatialOps;

/// Matrix of the nodal interpolant on `to` of velocity fields of `from`.
pub fn velocity_interpolation(from: &SpatialOps, to: &SpatialOps) -> Csr {
    let sp = &from.velocity;
    let n1 = sp.n1;
    let mut rows = Vec::with_capacity(to.nv());
    for &x in &to.velocity.node_coords {
        let cell = from.mesh.locate(x);
        let xi = from.mesh.cells[cell].inverse(x);
        let bx = sp.basis.eval_all(xi[0]);
        let by = sp.basis.eval_all(xi[1]);
        let weights: Vec<(usize, f64)> = sp
            .cell_nodes(cell)
            .iter()
            .enumerate()
            .map(|(l, &m)| (m, bx[l % n1] * by[l / n1]))
            .collect();
        for c in 0..2 {
            rows.push(weights.iter().map(|&(m, w)| (2 * m + c, w)).collect());
        }
    }
    Csr::from_rows(from.nv(), rows)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact embedding of the coarse discontinuous pressure space into the fine
/// one: `kind` decides whether fine cells are children of coarse cells or
/// the same cells.
pub fn pressure_embedding(coarse: &SpatialOps, fine: &SpatialOps, kind: TransferKind) -> Result<Csr> {
    let (cp, fp) = (&coarse.pressure, &fine.pressure);
    if fp.degree < cp.degree {
        return Err(Error::LevelMismatch(format!("pressure degree {} below {}", fp.degree, cp.degree)));
    }
    let index = |a: usize, b: usize| fp.exponents.iter().position(|&e| e == (a, b)).expect("fine space contains all monomials of lower degree");
    let mut rows = vec![Vec::new(); fine.np()];
    for f in 0..fine.mesh.n_cells() {
        let (c, q, scale): (usize, (usize, usize), f64) = match kind {
            TransferKind::Polynomial => (f, (0, 0), 1.0),
            TransferKind::Geometric => (fine.mesh.parent(f)?, fine.mesh.quadrant(f), 0.5),
        };
        for (m, &(i, j)) in cp.exponents.iter().enumerate() {
            // ((qx + ξ) s)^i ((qy + η) s)^j expanded in fine monomials
            for a in 0..=i {
                for b in 0..=j {
                    let shift = if kind == TransferKind::Geometric {
                        (q.0 as f64).powi((i - a) as i32) * (q.1 as f64).powi((j - b) as i32)
                    } else if a == i && b == j {
                        1.0
                    } else {
                        0.0
                    };
                    let w = binomial(i, a) * binomial(j, b) * shift * scale.powi((i + j) as i32);
                    if w != 0.0 {
                        rows[f * fp.dim + index(a, b)].push((c * cp.dim + m, w));
                    }
                }
            }
        }
    }
    Ok(Csr::from_rows(coarse.np(), rows))
}

/// `E[b][a] = φ^from_a(t^to_b)` (row-major `n_to x n_from`).
pub fn temporal_interpolation(k_from: usize, k_to: usize) -> Vec<f64> {
    let from = TemporalBasis::new(k_from);
    let to = TemporalBasis::new(k_to);
    to.nodes().iter().flat_map(|&t| from.eval_all(t)).collect()
}

/// Transfer pair between a fine and the next coarser level.
#[derive(Clone, Debug)]
pub struct Transfer {
    pub kind: TransferKind,
    pub k_fine: usize,
    pub k_coarse: usize,
    pub nv_fine: usize,
    pub np_fine: usize,
    pub nv_coarse: usize,
    pub np_coarse: usize,
    pub velocity: Csr,
    pub pressure: Csr,
    /// Temporal embedding `n_fine x n_coarse`.
    pub temporal: Vec<f64>,
    /// Fine velocity interpolated at coarse nodes.
    pub state_velocity: Csr,
    /// Fine temporal polynomial sampled at coarse nodes, `n_coarse x n_fine`.
    pub state_temporal: Vec<f64>,
}

impl Transfer {
    pub fn new(fine: &SpatialOps, k_fine: usize, coarse: &SpatialOps, k_coarse: usize, kind: TransferKind) -> Result<Self> {
        let ok = match kind {
            TransferKind::Polynomial => fine.mesh.n == coarse.mesh.n && fine.r >= coarse.r && k_fine >= k_coarse,
            TransferKind::Geometric => fine.mesh.n == 2 * coarse.mesh.n && fine.mesh.level == coarse.mesh.level + 1,
        };
        if !ok || fine.mesh.domain != coarse.mesh.domain {
            return Err(Error::LevelMismatch(format!(
                "{kind:?} transfer from {} cells (r={}, k={k_fine}) to {} cells (r={}, k={k_coarse})",
                fine.mesh.n, fine.r, coarse.mesh.n, coarse.r
            )));
        }
        Ok(Transfer {
            kind,
            k_fine,
            k_coarse,
            nv_fine: fine.nv(),
            np_fine: fine.np(),
            nv_coarse: coarse.nv(),
            np_coarse: coarse.np(),
            velocity: velocity_interpolation(coarse, fine),
            pressure: pressure_embedding(coarse, fine, kind)?,
            temporal: temporal_interpolation(k_coarse, k_fine),
            state_velocity: velocity_interpolation(fine, coarse),
            state_temporal: temporal_interpolation(k_fine, k_coarse),
        })
    }

    pub fn fine_len(&self) -> usize {
        (self.k_fine + 1) * (self.nv_fine + self.np_fine)
    }

    pub fn coarse_len(&self) -> usize {
        (self.k_coarse + 1) * (self.nv_coarse + self.np_coarse)
    }

    /// Coarse slab vector to fine slab vector.
    pub fn prolong(&self, xc: &[f64]) -> Vec<f64> {
        let (nf, nc) = (self.k_fine + 1, self.k_coarse + 1);
        let mut spatial_v = vec![0.0; nc * self.nv_fine];
        let mut spatial_p = vec![0.0; nc * self.np_fine];
        for a in 0..nc {
            self.velocity.apply(&xc[a * self.nv_coarse..(a + 1) * self.nv_coarse], &mut spatial_v[a * self.nv_fine..(a + 1) * self.nv_fine]);
            let off = nc * self.nv_coarse + a * self.np_coarse;
            self.pressure.apply(&xc[off..off + self.np_coarse], &mut spatial_p[a * self.np_fine..(a + 1) * self.np_fine]);
        }
        let mut out = vec![0.0; self.fine_len()];
        let poff = nf * self.nv_fine;
        for b in 0..nf {
            for a in 0..nc {
                let e = self.temporal[b * nc + a];
                if e == 0.0 {
                    continue;
                }
                crate::linalg::axpy(e, &spatial_v[a * self.nv_fine..(a + 1) * self.nv_fine], &mut out[b * self.nv_fine..(b + 1) * self.nv_fine]);
                crate::linalg::axpy(
                    e,
                    &spatial_p[a * self.np_fine..(a + 1) * self.np_fine],
                    &mut out[poff + b * self.np_fine..poff + (b + 1) * self.np_fine],
                );
            }
        }
        out
    }

    /// Transpose of [`Self::prolong`].
    pub fn restrict(&self, xf: &[f64]) -> Vec<f64> {
        let (nf, nc) = (self.k_fine + 1, self.k_coarse + 1);
        let poff = nf * self.nv_fine;
        let mut out = vec![0.0; self.coarse_len()];
        let cpoff = nc * self.nv_coarse;
        let mut tv = vec![0.0; self.nv_fine];
        let mut tp = vec![0.0; self.np_fine];
        let mut yv = vec![0.0; self.nv_coarse];
        let mut yp = vec![0.0; self.np_coarse];
        for a in 0..nc {
            tv.fill(0.0);
            tp.fill(0.0);
            for b in 0..nf {
                let e = self.temporal[b * nc + a];
                if e == 0.0 {
                    continue;
                }
                crate::linalg::axpy(e, &xf[b * self.nv_fine..(b + 1) * self.nv_fine], &mut tv);
                crate::linalg::axpy(e, &xf[poff + b * self.np_fine..poff + (b + 1) * self.np_fine], &mut tp);
            }
            self.velocity.apply_transpose(&tv, &mut yv);
            self.pressure.apply_transpose(&tp, &mut yp);
            out[a * self.nv_coarse..(a + 1) * self.nv_coarse].copy_from_slice(&yv);
            out[cpoff + a * self.np_coarse..cpoff + (a + 1) * self.np_coarse].copy_from_slice(&yp);
        }
        out
    }

    /// Interpolates per-node fine velocities to the coarse nodes in space and
    /// time.
    pub fn interpolate_state(&self, fine: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (nf, nc) = (self.k_fine + 1, self.k_coarse + 1);
        let spatial: Vec<Vec<f64>> = fine
            .iter()
            .map(|v| {
                let mut y = vec![0.0; self.nv_coarse];
                self.state_velocity.apply(v, &mut y);
                y
            })
            .collect();
        (0..nc)
            .map(|a| {
                let mut y = vec![0.0; self.nv_coarse];
                for (b, s) in spatial.iter().enumerate().take(nf) {
                    crate::linalg::axpy(self.state_temporal[a * nf + b], s, &mut y);
                }
                y
            })
            .collect()
    }
}
