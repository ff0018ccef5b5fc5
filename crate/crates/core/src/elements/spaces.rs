use super::basis::LagrangeBasis;
use super::quadrature::{gauss_lobatto, QuadratureRule};
use crate::geometry::MeshLevel;

/// Continuous vector-valued tensor-product space of degree `degree` per
/// coordinate with Gauss-Lobatto nodal points.
///
/// Global velocity DoF of node `m`, component `c` is `2 * m + c`. Inside a
/// cell the local DoF of component `c` at tensor node `(ix, iy)` is
/// `c * n1^2 + iy * n1 + ix`.
#[derive(Clone, Debug, PartialEq)]
pub struct VelocitySpace {
    pub degree: usize,
    /// Nodes per direction (`degree + 1`).
    pub n1: usize,
    pub basis: LagrangeBasis,
    pub n_nodes: usize,
    /// `n1^2` global node ids per cell.
    pub cell_nodes: Vec<usize>,
    pub node_coords: Vec<[f64; 2]>,
    pub boundary_nodes: Vec<usize>,
}

impl VelocitySpace {
    pub fn n_dofs(&self) -> usize {
        2 * self.n_nodes
    }

    pub fn nodes_per_cell(&self) -> usize {
        self.n1 * self.n1
    }

    pub fn local_dofs(&self) -> usize {
        2 * self.n1 * self.n1
    }

    pub fn cell_nodes(&self, cell: usize) -> &[usize] {
        let n = self.nodes_per_cell();
        &self.cell_nodes[cell * n..(cell + 1) * n]
    }

    /// Global DoF of local DoF `l` on `cell`.
    pub fn global_dof(&self, cell: usize, l: usize) -> usize {
        let n = self.nodes_per_cell();
        2 * self.cell_nodes(cell)[l % n] + l / n
    }

    pub fn gather(&self, cell: usize, global: &[f64], local: &mut [f64]) {
        let n = self.nodes_per_cell();
        for (i, &m) in self.cell_nodes(cell).iter().enumerate() {
            local[i] = global[2 * m];
            local[n + i] = global[2 * m + 1];
        }
    }

    pub fn scatter_add(&self, cell: usize, local: &[f64], global: &mut [f64]) {
        let n = self.nodes_per_cell();
        for (i, &m) in self.cell_nodes(cell).iter().enumerate() {
            global[2 * m] += local[i];
            global[2 * m + 1] += local[n + i];
        }
    }

    pub fn interpolate(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs()];
        for (m, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            out[2 * m] = v[0];
            out[2 * m + 1] = v[1];
        }
        out
    }

    /// Value of the field at reference point `xi` of `cell`.
    pub fn eval_in_cell(&self, coeffs: &[f64], cell: usize, xi: [f64; 2]) -> [f64; 2] {
        let bx = self.basis.eval_all(xi[0]);
        let by = self.basis.eval_all(xi[1]);
        let mut v = [0.0; 2];
        for (l, &m) in self.cell_nodes(cell).iter().enumerate() {
            let phi = bx[l % self.n1] * by[l / self.n1];
            v[0] += phi * coeffs[2 * m];
            v[1] += phi * coeffs[2 * m + 1];
        }
        v
    }

    pub fn eval(&self, mesh: &MeshLevel, coeffs: &[f64], x: [f64; 2]) -> [f64; 2] {
        let c = mesh.locate(x);
        self.eval_in_cell(coeffs, c, mesh.cells[c].inverse(x))
    }
}

pub fn build_velocity_space(mesh: &MeshLevel, r: usize) -> VelocitySpace {
    let degree = r + 1;
    let n1 = degree + 1;
    let ref_nodes = gauss_lobatto(n1).nodes;
    let grid = mesh.n * degree + 1;
    let mut ids = vec![usize::MAX; grid * grid];
    let mut cell_nodes = Vec::with_capacity(mesh.n_cells() * n1 * n1);
    let mut node_coords = Vec::new();
    let mut boundary_nodes = Vec::new();
    for cell in &mesh.cells {
        let (i, j) = mesh.cell_index(cell.id);
        for iy in 0..n1 {
            for ix in 0..n1 {
                let (gx, gy) = (i * degree + ix, j * degree + iy);
                let slot = &mut ids[gy * grid + gx];
                if *slot == usize::MAX {
                    *slot = node_coords.len();
                    node_coords.push(cell.map([ref_nodes[ix], ref_nodes[iy]]));
                    if gx == 0 || gy == 0 || gx + 1 == grid || gy + 1 == grid {
                        boundary_nodes.push(*slot);
                    }
                }
                cell_nodes.push(*slot);
            }
        }
    }
    VelocitySpace {
        degree,
        n1,
        basis: LagrangeBasis::new(ref_nodes),
        n_nodes: node_coords.len(),
        cell_nodes,
        node_coords,
        boundary_nodes,
    }
}

/// Discontinuous space of reference monomials `xi^i eta^j`, `i + j <= r`,
/// composed with the inverse cell map. Global DoF `cell * dim + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureSpace {
    pub degree: usize,
    pub dim: usize,
    /// Exponent pairs ordered by total degree, then by increasing `j`.
    pub exponents: Vec<(usize, usize)>,
    pub n_cells: usize,
}

pub fn monomial_exponents(r: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::with_capacity((r + 1) * (r + 2) / 2);
    for d in 0..=r {
        for j in 0..=d {
            e.push((d - j, j));
        }
    }
    e
}

impl PressureSpace {
    pub fn n_dofs(&self) -> usize {
        self.n_cells * self.dim
    }

    pub fn eval_in_cell(&self, coeffs: &[f64], cell: usize, xi: [f64; 2]) -> f64 {
        let c = &coeffs[cell * self.dim..(cell + 1) * self.dim];
        self.exponents
            .iter()
            .zip(c)
            .map(|(&(i, j), &a)| a * xi[0].powi(i as i32) * xi[1].powi(j as i32))
            .sum()
    }

    pub fn eval(&self, mesh: &MeshLevel, coeffs: &[f64], x: [f64; 2]) -> f64 {
        let c = mesh.locate(x);
        self.eval_in_cell(coeffs, c, mesh.cells[c].inverse(x))
    }

    /// Reference-cell Gram matrix of the monomials, row-major.
    pub fn reference_gram(&self) -> Vec<f64> {
        let d = self.dim;
        let mut g = vec![0.0; d * d];
        for (a, &(i, j)) in self.exponents.iter().enumerate() {
            for (b, &(k, l)) in self.exponents.iter().enumerate() {
                g[a * d + b] = 1.0 / (((i + k + 1) * (j + l + 1)) as f64);
            }
        }
        g
    }

    /// Cellwise `L^2` projection of `f` using the rule `quad` per direction.
    pub fn project(&self, mesh: &MeshLevel, quad: &QuadratureRule, f: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
        let d = self.dim;
        let gram = faer::Mat::from_fn(d, d, |a, b| self.reference_gram()[a * d + b]);
        let lu = gram.partial_piv_lu();
        let (pts, wts) = quad.tensor();
        let mut out = vec![0.0; self.n_dofs()];
        for cell in &mesh.cells {
            let mut rhs = faer::Mat::<f64>::zeros(d, 1);
            for (p, w) in pts.iter().zip(&wts) {
                let v = f(cell.map(*p));
                for (a, &(i, j)) in self.exponents.iter().enumerate() {
                    rhs[(a, 0)] += w * v * p[0].powi(i as i32) * p[1].powi(j as i32);
                }
            }
            use faer::linalg::solvers::Solve;
            lu.solve_in_place(rhs.as_mut());
            for a in 0..d {
                out[cell.id * d + a] = rhs[(a, 0)];
            }
        }
        out
    }

    /// Coefficient vector representing the constant function 1.
    pub fn constant(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_dofs()];
        for cell in 0..self.n_cells {
            c[cell * self.dim] = 1.0;
        }
        c
    }
}

pub fn build_pressure_space(mesh: &MeshLevel, r: usize) -> PressureSpace {
    let exponents = monomial_exponents(r);
    PressureSpace { degree: r, dim: exponents.len(), exponents, n_cells: mesh.n_cells() }
}

/// Reference basis tables at the points of a 1D rule on `[0, 1]`.
///
/// Two-dimensional values and gradients follow by tensor products, which is
/// what the sum-factorized kernels exploit.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeTables {
    pub n_q: usize,
    pub n1: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[q * n1 + i]` = `phi_i(x_q)`.
    pub values: Vec<f64>,
    /// `derivs[q * n1 + i]` = `phi_i'(x_q)`.
    pub derivs: Vec<f64>,
    /// Basis values and derivatives at the endpoints 0 and 1.
    pub end_values: [Vec<f64>; 2],
    pub end_derivs: [Vec<f64>; 2],
    /// Pressure monomial powers `powers[q * (r + 1) + i]` = `x_q^i`.
    pub powers: Vec<f64>,
    pub r: usize,
}

pub fn shape_tables(space: &VelocitySpace, pressure_degree: usize, quad: &QuadratureRule) -> ShapeTables {
    let n1 = space.n1;
    let mut values = Vec::with_capacity(quad.len() * n1);
    let mut derivs = Vec::with_capacity(quad.len() * n1);
    for &x in &quad.nodes {
        values.extend(space.basis.eval_all(x));
        derivs.extend(space.basis.deriv_all(x));
    }
    let rp = pressure_degree + 1;
    let mut powers = Vec::with_capacity(quad.len() * rp);
    for &x in &quad.nodes {
        powers.extend((0..rp).map(|i| x.powi(i as i32)));
    }
    ShapeTables {
        n_q: quad.len(),
        n1,
        points: quad.nodes.clone(),
        weights: quad.weights.clone(),
        values,
        derivs,
        end_values: [space.basis.eval_all(0.0), space.basis.eval_all(1.0)],
        end_derivs: [space.basis.deriv_all(0.0), space.basis.deriv_all(1.0)],
        powers,
        r: pressure_degree,
    }
}
