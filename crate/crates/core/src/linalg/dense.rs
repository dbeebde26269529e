use super::LinalgError;
use nalgebra::{DMatrix, SymmetricEigen};

/// Lower-triangular `L` with `M = L Lᵀ`. Fails if a pivot is not positive.
pub fn cholesky(m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::NotSquare(n, m.ncols()));
    }
    // build U = Lᵀ so the inner products run over contiguous columns
    let mut u = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let d = m[(j, j)] - u.view((0, j), (j, 1)).norm_squared();
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite(j));
        }
        let djj = d.sqrt();
        u[(j, j)] = djj;
        for i in j + 1..n {
            let s = m[(i, j)] - u.view((0, i), (j, 1)).dot(&u.view((0, j), (j, 1)));
            u[(j, i)] = s / djj;
        }
    }
    Ok(u.transpose())
}

/// Eigenpairs of the pencil `(A, M)`: values ascending, vectors as
/// `M`-orthonormal columns.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Solves `A x = λ M x` for symmetric `A` and symmetric positive definite
/// `M` by reduction to `L⁻¹ A L⁻ᵀ`.
pub fn dense_generalized_eig(a: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<DenseEigen, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare(n, a.ncols()));
    }
    if m.nrows() != n || m.ncols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, n),
            got: (m.nrows(), m.ncols()),
        });
    }
    if a.iter().chain(m.iter()).any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let l = cholesky(m)?;
    // C = L⁻¹ A L⁻ᵀ
    let mut c = a.clone();
    l.solve_lower_triangular_mut(&mut c);
    let mut c = c.transpose();
    l.solve_lower_triangular_mut(&mut c);
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let src = eig.eigenvectors.column(i);
        // fix the sign so the largest-magnitude entry is positive
        let pivot = src.iter().fold(0.0f64, |p, &v| if v.abs() > p.abs() { v } else { p });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        y.set_column(col, &(src * sign));
    }
    l.tr_solve_lower_triangular_mut(&mut y);
    Ok(DenseEigen { values, vectors: y })
}
