use super::{LinalgError, SparseMatrix};

/// Row-wise access to a square operator, as needed by the smoothers.
pub trait RowOperator: Sync {
    fn dim(&self) -> usize;
    /// Row `i` dotted with `x`.
    fn row_dot(&self, i: usize, x: &[f64]) -> f64;
    fn diag(&self, i: usize) -> f64;
    /// `x += alpha * row_i`.
    fn row_axpy(&self, i: usize, alpha: f64, x: &mut [f64]);
    /// Squared Euclidean norm of every row.
    fn row_norms_sq(&self) -> Vec<f64>;

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.row_dot(i, x)).collect()
    }
}

impl RowOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        SparseMatrix::row_dot(self, i, x)
    }

    fn diag(&self, i: usize) -> f64 {
        self.get(i, i)
    }

    fn row_axpy(&self, i: usize, alpha: f64, x: &mut [f64]) {
        let (cols, vals) = self.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            x[j] += alpha * v;
        }
    }

    fn row_norms_sq(&self) -> Vec<f64> {
        (0..self.nrows())
            .map(|i| self.row(i).1.iter().map(|v| v * v).sum())
            .collect()
    }
}

/// `A - shift * M` evaluated on the fly from the two stored matrices.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedOperator<'a> {
    pub a: &'a SparseMatrix,
    pub m: &'a SparseMatrix,
    pub shift: f64,
}

impl<'a> ShiftedOperator<'a> {
    pub fn new(a: &'a SparseMatrix, m: &'a SparseMatrix, shift: f64) -> Result<Self, LinalgError> {
        if a.nrows() != a.ncols() || m.nrows() != m.ncols() || a.nrows() != m.nrows() {
            return Err(LinalgError::DimensionMismatch {
                expected: (a.nrows(), a.ncols()),
                got: (m.nrows(), m.ncols()),
            });
        }
        Ok(ShiftedOperator { a, m, shift })
    }

    /// Assembles `A - shift * M` explicitly.
    pub fn materialize(&self) -> SparseMatrix {
        self.a
            .add_scaled(self.m, -self.shift)
            .expect("dimensions checked at construction")
    }
}

impl RowOperator for ShiftedOperator<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        self.a.row_dot(i, x) - self.shift * self.m.row_dot(i, x)
    }

    fn diag(&self, i: usize) -> f64 {
        self.a.get(i, i) - self.shift * self.m.get(i, i)
    }

    fn row_axpy(&self, i: usize, alpha: f64, x: &mut [f64]) {
        self.a.row_axpy(i, alpha, x);
        self.m.row_axpy(i, -alpha * self.shift, x);
    }

    fn row_norms_sq(&self) -> Vec<f64> {
        // merge the two sorted rows so shared columns combine before squaring
        (0..self.dim())
            .map(|i| {
                let (ac, av) = self.a.row(i);
                let (mc, mv) = self.m.row(i);
                let (mut p, mut q) = (0, 0);
                let mut s = 0.0;
                while p < ac.len() || q < mc.len() {
                    let v = if q == mc.len() || (p < ac.len() && ac[p] < mc[q]) {
                        p += 1;
                        av[p - 1]
                    } else if p == ac.len() || mc[q] < ac[p] {
                        q += 1;
                        -self.shift * mv[q - 1]
                    } else {
                        p += 1;
                        q += 1;
                        av[p - 1] - self.shift * mv[q - 1]
                    };
                    s += v * v;
                }
                s
            })
            .collect()
    }
}
