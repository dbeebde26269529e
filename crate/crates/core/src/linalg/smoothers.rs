use super::{LinalgError, RowOperator};

fn check(op: &dyn RowOperator, b: &[f64], x0: &[f64]) -> Result<(), LinalgError> {
    let n = op.dim();
    if b.len() != n || x0.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, n),
            got: (b.len(), x0.len()),
        });
    }
    Ok(())
}

/// Symmetric Gauss-Seidel: each sweep is a forward pass followed by a
/// backward pass.
pub fn gauss_seidel(
    op: &dyn RowOperator,
    b: &[f64],
    x0: &[f64],
    sweeps: usize,
) -> Result<Vec<f64>, LinalgError> {
    check(op, b, x0)?;
    let n = op.dim();
    let diag: Vec<f64> = (0..n).map(|i| op.diag(i)).collect();
    if let Some(i) = diag.iter().position(|&d| d == 0.0 || !d.is_finite()) {
        return Err(LinalgError::ZeroDiagonal(i));
    }
    let mut x = x0.to_vec();
    let relax = |i: usize, x: &mut Vec<f64>| {
        let r = b[i] - op.row_dot(i, x);
        x[i] += r / diag[i];
    };
    for _ in 0..sweeps {
        for i in 0..n {
            relax(i, &mut x);
        }
        for i in (0..n).rev() {
            relax(i, &mut x);
        }
    }
    Ok(x)
}

/// Cyclic Kaczmarz row projection in ascending row order.
pub fn kaczmarz(
    op: &dyn RowOperator,
    b: &[f64],
    x0: &[f64],
    sweeps: usize,
) -> Result<Vec<f64>, LinalgError> {
    check(op, b, x0)?;
    let mut x = x0.to_vec();
    if sweeps == 0 {
        return Ok(x);
    }
    let norms = op.row_norms_sq();
    for _ in 0..sweeps {
        kaczmarz_sweep(op, b, &norms, &mut x);
    }
    Ok(x)
}

/// One Kaczmarz pass with precomputed squared row norms. Zero rows are
/// skipped.
pub fn kaczmarz_sweep(op: &dyn RowOperator, b: &[f64], row_norms_sq: &[f64], x: &mut [f64]) {
    for i in 0..op.dim() {
        if row_norms_sq[i] > 0.0 {
            let r = b[i] - op.row_dot(i, x);
            op.row_axpy(i, r / row_norms_sq[i], x);
        }
    }
}
