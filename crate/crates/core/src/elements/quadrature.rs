//! One-dimensional Gauss-type quadrature rules computed by Newton iteration
//! on Legendre polynomials.

/// Nodes and positive weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Tensor-product rule on the square spanned by two copies of the
    /// interval, points ordered with the first coordinate fastest.
    pub fn tensor(&self) -> (Vec<[f64; 2]>, Vec<f64>) {
        let mut pts = Vec::with_capacity(self.len() * self.len());
        let mut wts = Vec::with_capacity(self.len() * self.len());
        for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
            for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
                pts.push([x, y]);
                wts.push(wx * wy);
            }
        }
        (pts, wts)
    }

    fn to_unit_interval(mut self) -> Self {
        for x in &mut self.nodes {
            *x = 0.5 * (*x + 1.0);
        }
        for w in &mut self.weights {
            *w *= 0.5;
        }
        self
    }
}

/// Legendre polynomial `P_n` with its first and second derivative at `x`.
pub fn legendre(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    let (mut s0, mut s1) = (0.0, 0.0);
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        let s2 = s0 + (2.0 * kf + 1.0) * d1;
        (p0, p1, d0, d1, s0, s1) = (p1, p2, d1, d2, s1, s2);
    }
    (p1, d1, s1)
}

/// Newton iteration for a root of `f` deflated by the roots already found.
fn deflated_newton(mut x: f64, found: &[f64], f: impl Fn(f64) -> (f64, f64)) -> f64 {
    for _ in 0..100 {
        let (v, d) = f(x);
        let defl: f64 = found.iter().map(|r| 1.0 / (x - r)).sum();
        let dx = v / (d - v * defl);
        x -= dx;
        if dx.abs() < 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

fn sorted(mut pairs: Vec<(f64, f64)>, exactness: usize) -> QuadratureRule {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
        exactness,
    }
}

fn gauss_legendre_symmetric(n: usize) -> QuadratureRule {
    assert!(n >= 1, "Gauss-Legendre needs at least one point");
    let mut found = Vec::with_capacity(n);
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let x = deflated_newton(guess, &found, |x| {
            let (p, d, _) = legendre(n, x);
            (p, d)
        });
        found.push(x);
    }
    let pairs = found
        .into_iter()
        .map(|x| {
            let d = legendre(n, x).1;
            (x, 2.0 / ((1.0 - x * x) * d * d))
        })
        .collect();
    sorted(pairs, 2 * n - 1)
}

/// Gauss-Legendre rule with `n` points on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    gauss_legendre_symmetric(n).to_unit_interval()
}

/// Gauss-Legendre rule with `n` points on `[-1, 1]`.
pub fn gauss_legendre_reference(n: usize) -> QuadratureRule {
    gauss_legendre_symmetric(n)
}

/// Right-sided Gauss-Radau rule with `k + 1` points on `[-1, 1]`; the last
/// node is `+1`.
pub fn gauss_radau(k: usize) -> QuadratureRule {
    let m = (k + 1) as f64;
    let mut found = vec![1.0];
    for j in 1..=k {
        let guess = (2.0 * std::f64::consts::PI * j as f64 / (2.0 * m - 1.0)).cos();
        let x = deflated_newton(guess, &found, |x| {
            let (pk, dk, _) = legendre(k, x);
            let (pk1, dk1, _) = legendre(k + 1, x);
            (pk - pk1, dk - dk1)
        });
        found.push(x);
    }
    let pairs = found
        .into_iter()
        .map(|x| {
            if x == 1.0 {
                (x, 2.0 / (m * m))
            } else {
                let p = legendre(k, x).0;
                (x, (1.0 + x) / (m * m * p * p))
            }
        })
        .collect();
    sorted(pairs, 2 * k)
}

/// Gauss-Lobatto points on `[0, 1]` (`n >= 2`), used as nodal points.
pub fn gauss_lobatto(n: usize) -> QuadratureRule {
    assert!(n >= 2, "Gauss-Lobatto needs both endpoints");
    let nm = n - 1;
    let mut found = vec![-1.0, 1.0];
    for j in 1..nm {
        let guess = -(std::f64::consts::PI * j as f64 / nm as f64).cos();
        let x = deflated_newton(guess, &found, |x| {
            let (_, d, s) = legendre(nm, x);
            (d, s)
        });
        found.push(x);
    }
    let nf = n as f64;
    let pairs = found
        .into_iter()
        .map(|x| {
            let p = legendre(nm, x).0;
            (x, 2.0 / (nf * (nf - 1.0) * p * p))
        })
        .collect();
    sorted(pairs, 2 * n - 3).to_unit_interval()
}
