//! Benchmark problems on the unit square.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::geometry::BoundaryTag;
use crate::operators::SharedFn;

/// Exact solution used by the error norms.
pub trait ExactSolution: Sync {
    fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2];
    /// `grad[c][d]` = `d v_c / d x_d`.
    fn gradient(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2];
    fn pressure(&self, x: [f64; 2], t: f64) -> f64;
}

/// Identically vanishing solution.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroSolution;

impl ExactSolution for ZeroSolution {
    fn velocity(&self, _: [f64; 2], _: f64) -> [f64; 2] {
        [0.0; 2]
    }
    fn gradient(&self, _: [f64; 2], _: f64) -> [[f64; 2]; 2] {
        [[0.0; 2]; 2]
    }
    fn pressure(&self, _: [f64; 2], _: f64) -> f64 {
        0.0
    }
}

// Building blocks a(z) = sin^2(pi z) and b(z) = sin(pi z) cos(pi z).
fn a(z: f64) -> f64 {
    (PI * z).sin().powi(2)
}
fn da(z: f64) -> f64 {
    PI * (2.0 * PI * z).sin()
}
fn dda(z: f64) -> f64 {
    2.0 * PI * PI * (2.0 * PI * z).cos()
}
fn b(z: f64) -> f64 {
    0.5 * (2.0 * PI * z).sin()
}
fn db(z: f64) -> f64 {
    PI * (2.0 * PI * z).cos()
}
fn ddb(z: f64) -> f64 {
    -2.0 * PI * PI * (2.0 * PI * z).sin()
}

/// Smooth solenoidal flow on `[0,1]^2 x [0,1]` with homogeneous boundary and
/// initial values:
///
/// `v = sin t (a(x) b(y), -b(x) a(y))`, `p = sin t b(x) b(y)`,
/// with `a = sin^2(pi .)` and `b = sin(pi .) cos(pi .)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedCase {
    pub nu: f64,
    pub t_end: f64,
}

impl ManufacturedCase {
    pub fn new(nu: f64) -> Self {
        ManufacturedCase { nu, t_end: 1.0 }
    }

    /// Right-hand side `dv/dt + (v.grad)v - nu lap v + grad p`.
    pub fn forcing(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let (s, c) = (t.sin(), t.cos());
        let v = self.velocity(x, t);
        let g = self.gradient(x, t);
        let lap = [
            s * (dda(x[0]) * b(x[1]) + a(x[0]) * ddb(x[1])),
            -s * (ddb(x[0]) * a(x[1]) + b(x[0]) * dda(x[1])),
        ];
        let grad_p = [s * db(x[0]) * b(x[1]), s * b(x[0]) * db(x[1])];
        let dt = [c * a(x[0]) * b(x[1]), -c * b(x[0]) * a(x[1])];
        std::array::from_fn(|i| {
            dt[i] + v[0] * g[i][0] + v[1] * g[i][1] - self.nu * lap[i] + grad_p[i]
        })
    }

    pub fn forcing_field(&self) -> SharedFn {
        let case = *self;
        Arc::new(move |x, t| case.forcing(x, t))
    }

    pub fn divergence(&self, x: [f64; 2], t: f64) -> f64 {
        let g = self.gradient(x, t);
        g[0][0] + g[1][1]
    }
}

impl ExactSolution for ManufacturedCase {
    fn velocity(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let s = t.sin();
        [s * a(x[0]) * b(x[1]), -s * b(x[0]) * a(x[1])]
    }

    fn gradient(&self, x: [f64; 2], t: f64) -> [[f64; 2]; 2] {
        let s = t.sin();
        [
            [s * da(x[0]) * b(x[1]), s * a(x[0]) * db(x[1])],
            [-s * db(x[0]) * a(x[1]), -s * b(x[0]) * da(x[1])],
        ]
    }

    fn pressure(&self, x: [f64; 2], t: f64) -> f64 {
        t.sin() * b(x[0]) * b(x[1])
    }
}

/// Lid-driven cavity on the unit square: the top edge moves with
/// `(sin(pi t / 4), 0)`, all other walls are at rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityCase2D {
    pub nu: f64,
    pub t_end: f64,
}

impl CavityCase2D {
    pub fn new(nu: f64) -> Self {
        CavityCase2D { nu, t_end: 8.0 }
    }

    pub fn lid_speed(t: f64) -> f64 {
        (PI * t / 4.0).sin()
    }

    /// Dirichlet data on the whole boundary.
    pub fn boundary_data(&self) -> SharedFn {
        Arc::new(|x: [f64; 2], t: f64| if x[1] > 1.0 - 1e-12 { [Self::lid_speed(t), 0.0] } else { [0.0; 2] })
    }

    /// Every face is Dirichlet (lid and walls differ only in their data).
    pub fn tagging(_: [f64; 2]) -> BoundaryTag {
        BoundaryTag::Dirichlet
    }
}
