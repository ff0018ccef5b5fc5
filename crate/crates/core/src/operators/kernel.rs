//! Sum-factorized evaluation and integration on the reference square.
//!
//! Local scalar coefficients are indexed `iy * n1 + ix`, quadrature data
//! `qy * nq + qx`.

use crate::elements::ShapeTables;

/// Values and reference derivatives of a scalar field at the volume
/// quadrature points.
pub(crate) fn eval_scalar(
    t: &ShapeTables,
    u: &[f64],
    val: &mut [f64],
    dx: &mut [f64],
    dy: &mut [f64],
    tmp_s: &mut [f64],
    tmp_d: &mut [f64],
) {
    let (n1, nq) = (t.n1, t.n_q);
    for iy in 0..n1 {
        let row = &u[iy * n1..(iy + 1) * n1];
        for qx in 0..nq {
            let s = &t.values[qx * n1..(qx + 1) * n1];
            let d = &t.derivs[qx * n1..(qx + 1) * n1];
            let (mut a, mut b) = (0.0, 0.0);
            for ix in 0..n1 {
                a += s[ix] * row[ix];
                b += d[ix] * row[ix];
            }
            tmp_s[iy * nq + qx] = a;
            tmp_d[iy * nq + qx] = b;
        }
    }
    for qy in 0..nq {
        let s = &t.values[qy * n1..(qy + 1) * n1];
        let d = &t.derivs[qy * n1..(qy + 1) * n1];
        for qx in 0..nq {
            let (mut v, mut gx, mut gy) = (0.0, 0.0, 0.0);
            for iy in 0..n1 {
                let ts = tmp_s[iy * nq + qx];
                v += s[iy] * ts;
                gx += s[iy] * tmp_d[iy * nq + qx];
                gy += d[iy] * ts;
            }
            val[qy * nq + qx] = v;
            dx[qy * nq + qx] = gx;
            dy[qy * nq + qx] = gy;
        }
    }
}

/// Values only.
pub(crate) fn eval_values(t: &ShapeTables, u: &[f64], val: &mut [f64], tmp: &mut [f64]) {
    let (n1, nq) = (t.n1, t.n_q);
    for iy in 0..n1 {
        let row = &u[iy * n1..(iy + 1) * n1];
        for qx in 0..nq {
            let s = &t.values[qx * n1..(qx + 1) * n1];
            tmp[iy * nq + qx] = s.iter().zip(row).map(|(a, b)| a * b).sum();
        }
    }
    for qy in 0..nq {
        let s = &t.values[qy * n1..(qy + 1) * n1];
        for qx in 0..nq {
            val[qy * nq + qx] = (0..n1).map(|iy| s[iy] * tmp[iy * nq + qx]).sum();
        }
    }
}

/// `out += Σ_q fv φ + fx ∂_ξ φ + fy ∂_η φ` for every local basis function.
/// Any of the coefficient arrays may be absent.
pub(crate) fn integrate_scalar(
    t: &ShapeTables,
    fv: Option<&[f64]>,
    fx: Option<&[f64]>,
    fy: Option<&[f64]>,
    out: &mut [f64],
    tmp_a: &mut [f64],
    tmp_b: &mut [f64],
) {
    let (n1, nq) = (t.n1, t.n_q);
    for qy in 0..nq {
        for ix in 0..n1 {
            let (mut a, mut b) = (0.0, 0.0);
            for qx in 0..nq {
                let q = qy * nq + qx;
                let s = t.values[qx * n1 + ix];
                if let Some(fv) = fv {
                    a += s * fv[q];
                }
                if let Some(fx) = fx {
                    a += t.derivs[qx * n1 + ix] * fx[q];
                }
                if let Some(fy) = fy {
                    b += s * fy[q];
                }
            }
            tmp_a[qy * n1 + ix] = a;
            tmp_b[qy * n1 + ix] = b;
        }
    }
    let has_b = fy.is_some();
    for iy in 0..n1 {
        for ix in 0..n1 {
            let mut acc = 0.0;
            for qy in 0..nq {
                acc += t.values[qy * n1 + iy] * tmp_a[qy * n1 + ix];
                if has_b {
                    acc += t.derivs[qy * n1 + iy] * tmp_b[qy * n1 + ix];
                }
            }
            out[iy * n1 + ix] += acc;
        }
    }
}

/// Pressure values at the volume quadrature points.
pub(crate) fn eval_pressure(t: &ShapeTables, exps: &[(usize, usize)], c: &[f64], val: &mut [f64]) {
    let (nq, rp) = (t.n_q, t.r + 1);
    val[..nq * nq].fill(0.0);
    for (&(i, j), &cm) in exps.iter().zip(c) {
        if cm == 0.0 {
            continue;
        }
        for qy in 0..nq {
            let py = cm * t.powers[qy * rp + j];
            for qx in 0..nq {
                val[qy * nq + qx] += py * t.powers[qx * rp + i];
            }
        }
    }
}

/// `out_m += Σ_q f ψ_m` over the pressure monomials.
pub(crate) fn integrate_pressure(t: &ShapeTables, exps: &[(usize, usize)], f: &[f64], out: &mut [f64]) {
    let (nq, rp) = (t.n_q, t.r + 1);
    for (m, &(i, j)) in exps.iter().enumerate() {
        let mut acc = 0.0;
        for qy in 0..nq {
            let py = t.powers[qy * rp + j];
            let mut row = 0.0;
            for qx in 0..nq {
                row += t.powers[qx * rp + i] * f[qy * nq + qx];
            }
            acc += py * row;
        }
        out[m] += acc;
    }
}

/// Trace of a scalar field on a face: values and the reference derivative
/// along the face-normal axis, at the face quadrature points.
pub(crate) fn face_trace(t: &ShapeTables, axis: usize, end: usize, u: &[f64], val: &mut [f64], dn: &mut [f64]) {
    let (n1, nq) = (t.n1, t.n_q);
    let (e, de) = (&t.end_values[end], &t.end_derivs[end]);
    for q in 0..nq {
        let s = &t.values[q * n1..(q + 1) * n1];
        let (mut v, mut d) = (0.0, 0.0);
        for a in 0..n1 {
            // a runs along the face, b across it
            let (mut cv, mut cd) = (0.0, 0.0);
            for b in 0..n1 {
                let coef = if axis == 0 { u[a * n1 + b] } else { u[b * n1 + a] };
                cv += e[b] * coef;
                cd += de[b] * coef;
            }
            v += s[a] * cv;
            d += s[a] * cd;
        }
        val[q] = v;
        dn[q] = d;
    }
}

/// Transpose of [`face_trace`]: `out += Σ_q fv φ + fd ∂_normal φ`.
pub(crate) fn face_integrate(
    t: &ShapeTables,
    axis: usize,
    end: usize,
    fv: &[f64],
    fd: Option<&[f64]>,
    out: &mut [f64],
) {
    let (n1, nq) = (t.n1, t.n_q);
    let (e, de) = (&t.end_values[end], &t.end_derivs[end]);
    for a in 0..n1 {
        let (mut sv, mut sd) = (0.0, 0.0);
        for q in 0..nq {
            let s = t.values[q * n1 + a];
            sv += s * fv[q];
            if let Some(fd) = fd {
                sd += s * fd[q];
            }
        }
        for b in 0..n1 {
            let idx = if axis == 0 { a * n1 + b } else { b * n1 + a };
            out[idx] += e[b] * sv + de[b] * sd;
        }
    }
}

/// Reference coordinates of face quadrature point `q`.
pub(crate) fn face_point(t: &ShapeTables, axis: usize, end: usize, q: usize) -> [f64; 2] {
    let s = t.points[q];
    if axis == 0 {
        [end as f64, s]
    } else {
        [s, end as f64]
    }
}

/// Pressure monomials at a face quadrature point.
pub(crate) fn face_pressure_basis(t: &ShapeTables, exps: &[(usize, usize)], axis: usize, end: usize, q: usize, out: &mut [f64]) {
    let p = face_point(t, axis, end, q);
    for (o, &(i, j)) in out.iter_mut().zip(exps) {
        *o = p[0].powi(i as i32) * p[1].powi(j as i32);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::{build_velocity_space, gauss_legendre, shape_tables};
    use crate::geometry::{all_dirichlet, build_hierarchy};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    #[test]
    fn factorized_matches_direct() {
        let m = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, 1, &all_dirichlet).unwrap();
        let v = build_velocity_space(m.level(0), 2);
        let t = shape_tables(&v, 2, &gauss_legendre(5));
        let (n1, nq) = (t.n1, t.n_q);
        let mut rng = StdRng::seed_from_u64(1);
        let u: Vec<f64> = (0..n1 * n1).map(|_| rng.random::<f64>()).collect();
        let mut val = vec![0.0; nq * nq];
        let mut dx = val.clone();
        let mut dy = val.clone();
        let mut ts = vec![0.0; n1 * nq];
        let mut td = ts.clone();
        eval_scalar(&t, &u, &mut val, &mut dx, &mut dy, &mut ts, &mut td);
        for qy in 0..nq {
            for qx in 0..nq {
                let (x, y) = (t.points[qx], t.points[qy]);
                let (mut ev, mut ex, mut ey) = (0.0, 0.0, 0.0);
                for iy in 0..n1 {
                    for ix in 0..n1 {
                        let c = u[iy * n1 + ix];
                        ev += c * v.basis.eval(ix, x) * v.basis.eval(iy, y);
                        ex += c * v.basis.deriv(ix, x) * v.basis.eval(iy, y);
                        ey += c * v.basis.eval(ix, x) * v.basis.deriv(iy, y);
                    }
                }
                let q = qy * nq + qx;
                assert!((val[q] - ev).abs() < 1e-13);
                assert!((dx[q] - ex).abs() < 1e-12);
                assert!((dy[q] - ey).abs() < 1e-12);
            }
        }
        // integration is the transpose of evaluation
        let f: Vec<f64> = (0..3 * nq * nq).map(|_| rng.random::<f64>()).collect();
        let (fv, rest) = f.split_at(nq * nq);
        let (fx, fy) = rest.split_at(nq * nq);
        let mut out = vec![0.0; n1 * n1];
        let mut ta = vec![0.0; nq * n1];
        let mut tb = ta.clone();
        integrate_scalar(&t, Some(fv), Some(fx), Some(fy), &mut out, &mut ta, &mut tb);
        let lhs: f64 = out.iter().zip(&u).map(|(a, b)| a * b).sum();
        let rhs: f64 = (0..nq * nq).map(|q| fv[q] * val[q] + fx[q] * dx[q] + fy[q] * dy[q]).sum();
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        // faces
        for axis in 0..2 {
            for end in 0..2 {
                let mut fvv = vec![0.0; nq];
                let mut fdn = vec![0.0; nq];
                face_trace(&t, axis, end, &u, &mut fvv, &mut fdn);
                for q in 0..nq {
                    let p = face_point(&t, axis, end, q);
                    let mut ev = 0.0;
                    let mut ed = 0.0;
                    for iy in 0..n1 {
                        for ix in 0..n1 {
                            let c = u[iy * n1 + ix];
                            ev += c * v.basis.eval(ix, p[0]) * v.basis.eval(iy, p[1]);
                            ed += c * if axis == 0 {
                                v.basis.deriv(ix, p[0]) * v.basis.eval(iy, p[1])
                            } else {
                                v.basis.eval(ix, p[0]) * v.basis.deriv(iy, p[1])
                            };
                        }
                    }
                    assert!((fvv[q] - ev).abs() < 1e-13 && (fdn[q] - ed).abs() < 1e-12);
                }
                let gv: Vec<f64> = (0..nq).map(|_| rng.random::<f64>()).collect();
                let gd: Vec<f64> = (0..nq).map(|_| rng.random::<f64>()).collect();
                let mut out = vec![0.0; n1 * n1];
                face_integrate(&t, axis, end, &gv, Some(&gd), &mut out);
                let lhs: f64 = out.iter().zip(&u).map(|(a, b)| a * b).sum();
                let rhs: f64 = (0..nq).map(|q| gv[q] * fvv[q] + gd[q] * fdn[q]).sum();
                assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
            }
        }
    }
}
