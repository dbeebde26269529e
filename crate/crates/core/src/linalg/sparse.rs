use super::LinalgError;
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Row count above which matrix-vector products are split across threads.
const PAR_ROWS: usize = 4096;

/// Compressed sparse row matrix with sorted column indices and no stored
/// zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries and drops entries that end up exactly zero.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, LinalgError> {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(LinalgError::IndexOutOfRange { row: i, col: j, nrows, ncols });
            }
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut entries = vec![(0usize, 0.0f64); triplets.len()];
        for &(i, j, v) in triplets {
            entries[next[i]] = (j, v);
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for i in 0..nrows {
            let row = &mut entries[counts[i]..counts[i + 1]];
            // stable sort keeps summation order deterministic
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut sum = 0.0;
                while k < row.len() && row[k].0 == j {
                    sum += row[k].1;
                    k += 1;
                }
                if sum != 0.0 {
                    col_idx.push(j);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Builds a matrix from raw CSR arrays after checking them.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        let ok = row_ptr.len() == nrows + 1
            && row_ptr[0] == 0
            && row_ptr.windows(2).all(|w| w[0] <= w[1])
            && row_ptr[nrows] == col_idx.len()
            && col_idx.len() == values.len()
            && (0..nrows).all(|i| {
                let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                cols.windows(2).all(|w| w[0] < w[1]) && cols.iter().all(|&j| j < ncols)
            });
        if !ok {
            return Err(LinalgError::InvalidCsr);
        }
        let mut m = SparseMatrix { nrows, ncols, row_ptr, col_idx, values };
        m.prune_zeros();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(d: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)] != 0.0 {
                    t.push((i, j, d[(i, j)]));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t).expect("indices in range")
    }

    fn prune_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), LinalgError> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.nrows, self.ncols),
                got: (y.len(), x.len()),
            });
        }
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
        Ok(())
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // rows visited in increasing order, so columns of the result are sorted
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        SparseMatrix { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix, LinalgError> {
        if self.ncols != other.nrows {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.ncols, self.ncols),
                got: (other.nrows, other.ncols),
            });
        }
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..self.nrows)
            .into_par_iter()
            .map_init(
                || (vec![0.0; other.ncols], vec![false; other.ncols]),
                |(acc, used), i| {
                    let mut cols = Vec::new();
                    let (ac, av) = self.row(i);
                    for (&k, &a) in ac.iter().zip(av) {
                        let (bc, bv) = other.row(k);
                        for (&j, &b) in bc.iter().zip(bv) {
                            if !used[j] {
                                used[j] = true;
                                cols.push(j);
                            }
                            acc[j] += a * b;
                        }
                    }
                    cols.sort_unstable();
                    let mut kept = Vec::with_capacity(cols.len());
                    let mut vals = Vec::with_capacity(cols.len());
                    for &j in &cols {
                        if acc[j] != 0.0 {
                            kept.push(j);
                            vals.push(acc[j]);
                        }
                        acc[j] = 0.0;
                        used[j] = false;
                    }
                    (kept, vals)
                },
            )
            .collect();
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (c, v) in rows {
            col_idx.extend(c);
            values.extend(v);
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { nrows: self.nrows, ncols: other.ncols, row_ptr, col_idx, values })
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, alpha: f64) -> Result<SparseMatrix, LinalgError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(LinalgError::DimensionMismatch {
                expected: (self.nrows, self.ncols),
                got: (other.nrows, other.ncols),
            });
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let (j, v) = if q == bc.len() || (p < ac.len() && ac[p] < bc[q]) {
                    p += 1;
                    (ac[p - 1], av[p - 1])
                } else if p == ac.len() || bc[q] < ac[p] {
                    q += 1;
                    (bc[q - 1], alpha * bv[q - 1])
                } else {
                    p += 1;
                    q += 1;
                    (ac[p - 1], av[p - 1] + alpha * bv[q - 1])
                };
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values })
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= alpha);
        m.prune_zeros();
        m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            let (cols, vals) = t.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst / scale
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows).map(|i| x[i] * self.row_dot(i, y)).sum()
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> SparseMatrix {
        SparseMatrix::from_triplets(
            3,
            4,
            &[(0, 0, 1.0), (0, 3, 2.0), (1, 1, 3.0), (2, 0, 4.0), (2, 2, 5.0), (0, 0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn triplets_sum_and_sort() {
        let a = sample();
        assert_eq!(a.nnz(), 5);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.row(0).0, &[0, 3]);
        let z = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, -1.0)]).unwrap();
        assert_eq!(z.nnz(), 0);
        assert!(SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn csr_validation() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 1, 2], vec![1, 0], vec![1.0, 0.0]).is_ok());
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        let m = SparseMatrix::from_csr(2, 2, vec![0, 1, 2], vec![1, 0], vec![1.0, 0.0]).unwrap();
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn spmv_matches_dense() {
        let a = sample();
        let x = [1.0, -1.0, 2.0, 0.5];
        let y = a.spmv(&x).unwrap();
        let yd = a.to_dense() * nalgebra::DVector::from_row_slice(&x);
        assert_eq!(y, yd.as_slice());
        assert!(a.spmv(&[1.0]).is_err());
    }

    #[test]
    fn product_and_sum_match_dense() {
        let a = sample();
        let at = a.transpose();
        let p = a.matmul(&at).unwrap();
        let pd = a.to_dense() * a.to_dense().transpose();
        assert!((p.to_dense() - pd).abs().max() < 1e-15);
        assert!(p.symmetry_defect() < 1e-15);
        let s = p.add_scaled(&SparseMatrix::identity(3), -2.0).unwrap();
        let sd = a.to_dense() * a.to_dense().transpose() - 2.0 * DMatrix::<f64>::identity(3, 3);
        assert!((s.to_dense() - sd).abs().max() < 1e-15);
        assert!(a.matmul(&a).is_err());
    }

    fn arb_matrix() -> impl Strategy<Value = SparseMatrix> {
        (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
            prop::collection::vec((0..r, 0..c, -10.0f64..10.0), 0..30)
                .prop_map(move |t| SparseMatrix::from_triplets(r, c, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn transpose_is_adjoint(a in arb_matrix(), seed in 0u64..1000) {
            let x: Vec<f64> = (0..a.ncols()).map(|k| ((k as u64 * 31 + seed) % 7) as f64 - 3.0).collect();
            let y: Vec<f64> = (0..a.nrows()).map(|k| ((k as u64 * 17 + seed) % 5) as f64 - 2.0).collect();
            let lhs = dot(&y, &a.spmv(&x).unwrap());
            let rhs = dot(&a.transpose().spmv(&y).unwrap(), &x);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            prop_assert_eq!(a.transpose().transpose(), a);
        }

        #[test]
        fn no_stored_zeros(a in arb_matrix()) {
            prop_assert!(a.values().iter().all(|&v| v != 0.0));
            let z = a.add_scaled(&a, -1.0).unwrap();
            prop_assert_eq!(z.nnz(), 0);
        }
    }
}
