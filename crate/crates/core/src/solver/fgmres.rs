//! Flexible GMRES with right preconditioning and zero initial guess.

use crate::linalg::{axpy, dot, norm2};

/// Result of one FGMRES solve.
#[derive(Clone, Debug)]
pub struct FgmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Arnoldi breakdown occurred (the Krylov space became invariant).
    pub breakdown: bool,
    /// Euclidean least-squares residual norms, starting with `‖b‖`.
    pub history: Vec<f64>,
    /// Final residual measured in the convergence norm.
    pub residual_norm: f64,
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Solves `A x = b` to `‖b - A x‖ <= tol ‖b‖`.
///
/// `precond` may change between iterations. With `norm = None` the
/// Euclidean least-squares estimate decides convergence; otherwise the true
/// residual `V_{j+1}(β e_1 - H̄ y)` is formed each iteration and measured in
/// `norm`.
pub fn fgmres(
    op: &mut dyn FnMut(&[f64], &mut [f64]),
    precond: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
    norm: Option<&dyn Fn(&[f64]) -> f64>,
) -> FgmresOutcome {
    let n = b.len();
    let beta = norm2(b);
    let measure = |v: &[f64]| norm.map_or_else(|| norm2(v), |f| f(v));
    let b_norm = measure(b);
    let mut out = FgmresOutcome {
        x: vec![0.0; n],
        iterations: 0,
        converged: false,
        breakdown: false,
        history: vec![beta],
        residual_norm: b_norm,
    };
    if beta == 0.0 || b_norm <= 0.0 {
        out.converged = true;
        out.residual_norm = 0.0;
        return out;
    }
    let target = tol * b_norm;
    let mut basis: Vec<Vec<f64>> = vec![b.iter().map(|x| x / beta).collect()];
    let mut zs: Vec<Vec<f64>> = Vec::new();
    // columns of the Hessenberg matrix, unrotated and rotated
    let mut h_raw: Vec<Vec<f64>> = Vec::new();
    let mut h_rot: Vec<Vec<f64>> = Vec::new();
    let mut rot: Vec<(f64, f64)> = Vec::new();
    let mut g = vec![beta];
    let mut y = Vec::new();

    for j in 0..max_iter {
        let mut z = vec![0.0; n];
        precond(&basis[j], &mut z);
        let mut w = vec![0.0; n];
        op(&z, &mut w);
        zs.push(z);
        let mut col = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            col[i] = hij;
            axpy(-hij, v, &mut w);
        }
        let hn = norm2(&w);
        col[j + 1] = hn;
        h_raw.push(col.clone());
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, bb) = (col[i], col[i + 1]);
            col[i] = c * a + s * bb;
            col[i + 1] = -s * a + c * bb;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        col[j] = c * col[j] + s * col[j + 1];
        col[j + 1] = 0.0;
        rot.push((c, s));
        g.push(-s * g[j]);
        g[j] *= c;
        h_rot.push(col);
        out.iterations = j + 1;
        out.history.push(g[j + 1].abs());

        // back substitution for the current least-squares coefficients
        y = vec![0.0; j + 1];
        for i in (0..=j).rev() {
            let mut acc = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                acc -= h_rot[l][i] * yl;
            }
            y[i] = acc / h_rot[i][i];
        }
        let breakdown = hn <= 1e-14 * beta;
        let res = match norm {
            None => g[j + 1].abs(),
            Some(f) => {
                let mut coeff = vec![0.0; j + 2];
                coeff[0] = beta;
                for (l, col) in h_raw.iter().enumerate() {
                    for (i, h) in col.iter().enumerate() {
                        coeff[i] -= h * y[l];
                    }
                }
                let mut r = vec![0.0; n];
                for (i, c) in coeff.iter().enumerate().take(basis.len()) {
                    axpy(*c, &basis[i], &mut r);
                }
                if !breakdown {
                    axpy(coeff[j + 1] / hn, &w, &mut r);
                }
                f(&r)
            }
        };
        out.residual_norm = res;
        if res <= target {
            out.converged = true;
            break;
        }
        if breakdown {
            out.breakdown = true;
            break;
        }
        w.iter_mut().for_each(|x| *x /= hn);
        basis.push(w);
    }
    for (z, yi) in zs.iter().zip(&y) {
        axpy(*yi, z, &mut out.x);
    }
    out
}
