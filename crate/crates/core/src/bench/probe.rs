//! Empirical order of the Gauss-Radau approximation of the convective form.

use crate::elements::{gauss_legendre_reference, gauss_radau};
use crate::geometry::{all_dirichlet, build_hierarchy};
use crate::linalg::dot;
use crate::operators::{NitscheConfig, SpatialOps};

/// Quadrature errors of one temporal degree on the requested slab lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeResult {
    pub k: usize,
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log(error)` against `log(tau)`.
    pub slope: f64,
}

/// Velocity fields `u(t) = sum_j t^j u_j` and `w(t) = sum_j t^j w_j` with
/// fixed smooth spatial coefficients.
pub struct ProbeFields {
    ops: SpatialOps,
    u: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
}

impl ProbeFields {
    /// Fields of temporal degree `degree` on a 2x2 mesh with `Q_2`
    /// velocity.
    pub fn new(degree: usize) -> Self {
        let h = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, 2, &all_dirichlet).expect("unit square");
        let ops = SpatialOps::new(h.finest(), 1, NitscheConfig::new(1e-2));
        let field = |j: usize, shift: f64| {
            let s = 1.0 / (1.0 + j as f64);
            ops.velocity.interpolate(|x| {
                [s * (2.0 * x[1] + shift + j as f64).sin() * x[0], s * (x[0] - shift * x[1] * j as f64).cos()]
            })
        };
        let u = (0..=degree).map(|j| field(j, 0.3)).collect();
        let w = (0..=degree).map(|j| field(j, 1.1)).collect();
        ProbeFields { ops, u, w }
    }

    fn at(coeffs: &[Vec<f64>], t: f64) -> Vec<f64> {
        let mut out = vec![0.0; coeffs[0].len()];
        let mut tj = 1.0;
        for c in coeffs {
            crate::linalg::axpy(tj, c, &mut out);
            tj *= t;
        }
        out
    }

    /// `c(u(t))(w(t))`.
    pub fn form(&self, t: f64) -> f64 {
        let state = self.ops.state(&Self::at(&self.u, t), None);
        dot(&self.ops.convection(&state), &Self::at(&self.w, t))
    }

    /// `|sum_n (C_n - C_n^GR)|` over a uniform partition of `(0, 1]` with
    /// slab length `tau`; `C_n` uses a `2k + 2` point Gauss rule.
    pub fn error(&self, k: usize, tau: f64) -> f64 {
        let n = (1.0 / tau).round() as usize;
        let radau = gauss_radau(k);
        let reference = gauss_legendre_reference(2 * k + 2);
        let slab_integral = |t0: f64, nodes: &[f64], weights: &[f64]| -> f64 {
            nodes.iter().zip(weights).map(|(&s, &w)| 0.5 * tau * w * self.form(t0 + 0.5 * tau * (s + 1.0))).sum()
        };
        let mut total = 0.0;
        for slab in 0..n {
            let t0 = slab as f64 * tau;
            total += slab_integral(t0, &reference.nodes, &reference.weights) - slab_integral(t0, &radau.nodes, &radau.weights);
        }
        total.abs()
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Gauss-Radau quadrature errors of the convective form for each `k`,
/// with fields of temporal degree `k + 1` so that the rule is not exact.
pub fn quadrature_error_probe(k_list: &[usize], tau_list: &[f64]) -> Vec<ProbeResult> {
    k_list
        .iter()
        .map(|&k| {
            let fields = ProbeFields::new(k + 1);
            let errors: Vec<f64> = tau_list.iter().map(|&tau| fields.error(k, tau)).collect();
            ProbeResult { k, taus: tau_list.to_vec(), slope: loglog_slope(tau_list, &errors), errors }
        })
        .collect()
}
