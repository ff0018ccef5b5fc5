//! Uniform quadrilateral mesh hierarchies on axis-aligned rectangles and
//! uniform time partitions.
//!
//! Cells on every level are numbered lexicographically (`id = j * n + i`),
//! so parent/child relations follow from integer arithmetic.

use crate::error::{Error, Result};

/// Boundary condition type carried by a boundary face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

/// Side of the reference square a face lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }

    /// Axis normal to the face (0 = x, 1 = y) and the reference coordinate
    /// (0 or 1) of the face along that axis.
    pub fn axis_and_end(self) -> (usize, usize) {
        match self {
            Side::Left => (0, 0),
            Side::Right => (0, 1),
            Side::Bottom => (1, 0),
            Side::Top => (1, 1),
        }
    }
}

/// Axis-aligned rectangle `[lower, upper]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Rect {
    pub fn unit_square() -> Self {
        Rect { lower: [0.0, 0.0], upper: [1.0, 1.0] }
    }

    pub fn area(&self) -> f64 {
        (self.upper[0] - self.lower[0]) * (self.upper[1] - self.lower[1])
    }
}

/// Affine map from the reference square `[0,1]^2` onto a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellMap {
    pub id: usize,
    pub origin: [f64; 2],
    pub size: [f64; 2],
}

impl CellMap {
    pub fn map(&self, xi: [f64; 2]) -> [f64; 2] {
        [self.origin[0] + self.size[0] * xi[0], self.origin[1] + self.size[1] * xi[1]]
    }

    pub fn inverse(&self, x: [f64; 2]) -> [f64; 2] {
        [(x[0] - self.origin[0]) / self.size[0], (x[1] - self.origin[1]) / self.size[1]]
    }

    pub fn det(&self) -> f64 {
        self.size[0] * self.size[1]
    }

    /// Diagonal of the inverse-transposed Jacobian.
    pub fn inv_jac(&self) -> [f64; 2] {
        [1.0 / self.size[0], 1.0 / self.size[1]]
    }

    pub fn diameter(&self) -> f64 {
        self.size[0].hypot(self.size[1])
    }
}

/// One boundary face of a mesh level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub side: Side,
    pub tag: BoundaryTag,
    pub length: f64,
}

impl BoundaryFace {
    pub fn normal(&self) -> [f64; 2] {
        self.side.normal()
    }
}

/// A single uniform level of the hierarchy.
#[derive(Clone, Debug)]
pub struct MeshLevel {
    pub level: usize,
    pub domain: Rect,
    /// Cells per coordinate direction.
    pub n: usize,
    pub cells: Vec<CellMap>,
    pub vertices: Vec<[f64; 2]>,
    pub faces: Vec<BoundaryFace>,
    /// Boundary faces of each cell (indices into `faces`).
    pub cell_faces: Vec<Vec<usize>>,
    /// Mesh size (longest cell edge).
    pub h: f64,
}

impl MeshLevel {
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_index(&self, id: usize) -> (usize, usize) {
        (id % self.n, id / self.n)
    }

    /// Cell containing point `x` (ties resolved towards the lower cell).
    pub fn locate(&self, x: [f64; 2]) -> usize {
        let c0 = &self.cells[0];
        let mut ij = [0usize; 2];
        for d in 0..2 {
            let s = ((x[d] - self.domain.lower[d]) / c0.size[d]).floor();
            ij[d] = (s.max(0.0) as usize).min(self.n - 1);
        }
        ij[1] * self.n + ij[0]
    }

    pub fn is_pure_dirichlet(&self) -> bool {
        self.faces.iter().all(|f| f.tag == BoundaryTag::Dirichlet)
    }

    pub fn parent(&self, id: usize) -> Result<usize> {
        if self.level == 0 {
            return Err(Error::NoParent);
        }
        if id >= self.cells.len() {
            return Err(Error::InvalidCell(id));
        }
        let (i, j) = self.cell_index(id);
        Ok((j / 2) * (self.n / 2) + i / 2)
    }

    /// Quadrant `(qx, qy)` of the child within its parent.
    pub fn quadrant(&self, id: usize) -> (usize, usize) {
        let (i, j) = self.cell_index(id);
        (i % 2, j % 2)
    }
}

/// Nested sequence of uniformly refined meshes.
#[derive(Clone, Debug)]
pub struct MeshHierarchy {
    pub domain: Rect,
    pub levels: Vec<MeshLevel>,
}

impl MeshHierarchy {
    pub fn finest(&self) -> &MeshLevel {
        self.levels.last().expect("hierarchy has at least one level")
    }

    pub fn level(&self, s: usize) -> &MeshLevel {
        &self.levels[s]
    }

    /// Parent of `cell` on level `s` (which must be at least 1).
    pub fn coarse_parent(&self, s: usize, cell: usize) -> Result<usize> {
        self.levels.get(s).ok_or(Error::InvalidLevel(s))?.parent(cell)
    }

    /// Children of `cell` on level `s`, ordered by quadrant.
    pub fn children(&self, s: usize, cell: usize) -> Result<[usize; 4]> {
        let coarse = self.levels.get(s).ok_or(Error::InvalidLevel(s))?;
        if s + 1 >= self.levels.len() {
            return Err(Error::InvalidLevel(s + 1));
        }
        if cell >= coarse.n_cells() {
            return Err(Error::InvalidCell(cell));
        }
        let (i, j) = coarse.cell_index(cell);
        let nf = 2 * coarse.n;
        let c = |di: usize, dj: usize| (2 * j + dj) * nf + 2 * i + di;
        Ok([c(0, 0), c(1, 0), c(0, 1), c(1, 1)])
    }
}

/// Builds a hierarchy with `levels` levels; level `s` has `base * 2^s` cells
/// per direction. Corners are passed as slices so that wrong dimensions are
/// reported rather than silently truncated.
pub fn build_hierarchy(
    lower: &[f64],
    upper: &[f64],
    base_cells_per_dim: usize,
    levels: usize,
    tagging: &dyn Fn([f64; 2]) -> BoundaryTag,
) -> Result<MeshHierarchy> {
    if lower.len() != 2 || upper.len() != 2 {
        return Err(Error::InvalidDomain("only two-dimensional rectangles are supported".into()));
    }
    if !(upper[0] > lower[0] && upper[1] > lower[1]) {
        return Err(Error::InvalidDomain("rectangle has non-positive extent".into()));
    }
    if levels == 0 || base_cells_per_dim == 0 {
        return Err(Error::InvalidDomain("need at least one level and one base cell".into()));
    }
    let domain = Rect { lower: [lower[0], lower[1]], upper: [upper[0], upper[1]] };
    let levels = (0..levels)
        .map(|s| build_level(domain, s, base_cells_per_dim << s, tagging))
        .collect();
    Ok(MeshHierarchy { domain, levels })
}

fn build_level(
    domain: Rect,
    level: usize,
    n: usize,
    tagging: &dyn Fn([f64; 2]) -> BoundaryTag,
) -> MeshLevel {
    let ext = [domain.upper[0] - domain.lower[0], domain.upper[1] - domain.lower[1]];
    let size = [ext[0] / n as f64, ext[1] / n as f64];
    let coord = |d: usize, i: usize| {
        if i == n {
            domain.upper[d]
        } else {
            domain.lower[d] + ext[d] * i as f64 / n as f64
        }
    };
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let origin = [coord(0, i), coord(1, j)];
            let size = [coord(0, i + 1) - origin[0], coord(1, j + 1) - origin[1]];
            cells.push(CellMap { id: j * n + i, origin, size });
        }
    }
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([coord(0, i), coord(1, j)]);
        }
    }
    let mut faces = Vec::new();
    let mut cell_faces = vec![Vec::new(); n * n];
    for (id, cell) in cells.iter().enumerate() {
        let (i, j) = (id % n, id / n);
        for side in Side::ALL {
            let on_boundary = match side {
                Side::Left => i == 0,
                Side::Right => i + 1 == n,
                Side::Bottom => j == 0,
                Side::Top => j + 1 == n,
            };
            if !on_boundary {
                continue;
            }
            let (axis, end) = side.axis_and_end();
            let mut mid = [0.5, 0.5];
            mid[axis] = end as f64;
            let length = cell.size[1 - axis];
            cell_faces[id].push(faces.len());
            faces.push(BoundaryFace { cell: id, side, tag: tagging(cell.map(mid)), length });
        }
    }
    MeshLevel {
        level,
        domain,
        n,
        cells,
        vertices,
        faces,
        cell_faces,
        h: size[0].max(size[1]),
    }
}

/// Partition of `(0, T]` into slabs.
#[derive(Clone, Debug, PartialEq)]
pub struct TimePartition {
    pub t_end: f64,
    pub endpoints: Vec<f64>,
}

impl TimePartition {
    pub fn n_slabs(&self) -> usize {
        self.endpoints.len() - 1
    }

    /// Length of slab `n` (zero-based).
    pub fn tau(&self, n: usize) -> f64 {
        self.endpoints[n + 1] - self.endpoints[n]
    }

    /// Interval `(t_start, t_end]` of slab `n` (zero-based).
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.endpoints[n], self.endpoints[n + 1])
    }
}

pub fn build_time_partition(t_end: f64, n: usize) -> Result<TimePartition> {
    if n == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidPartition);
    }
    let endpoints = (0..=n).map(|i| i as f64 * t_end / n as f64).collect();
    Ok(TimePartition { t_end, endpoints })
}

/// Tags every boundary face as Dirichlet.
pub fn all_dirichlet(_: [f64; 2]) -> BoundaryTag {
    BoundaryTag::Dirichlet
}
