//! Small vector kernels and a compressed sparse row matrix.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for v in x {
        *v *= alpha;
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from per-row `(col, value)` lists, dropping exact zeros.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut m = Csr { nrows: rows.len(), ncols, row_ptr: vec![0], ..Default::default() };
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    m.cols.push(c);
                    m.vals.push(v);
                }
            }
            m.row_ptr.push(m.cols.len());
        }
        m
    }

    /// `y = A x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
            *yi = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, v)| v * x[c]).sum();
        }
    }

    /// `y = A^T x`
    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y[..self.ncols].fill(0.0);
        for (i, &xi) in x.iter().enumerate().take(self.nrows) {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[p]] += self.vals[p] * xi;
            }
        }
    }
}
