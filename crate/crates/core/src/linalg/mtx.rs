//! Matrix Market coordinate format, real general or real symmetric.

use super::{LinalgError, SparseMatrix};
use std::fmt::Write as _;
use std::io::{BufRead, Write};

/// Writes `a` as `symmetric` (lower triangle) when it is exactly symmetric,
/// otherwise as `general`. Indices are 1-based.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<(), LinalgError> {
    let symmetric = a.nrows() == a.ncols() && a.symmetry_defect() == 0.0;
    let mut entries = Vec::new();
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if !symmetric || j <= i {
                entries.push((i, j, v));
            }
        }
    }
    let kind = if symmetric { "symmetric" } else { "general" };
    let mut s = String::new();
    let _ = writeln!(s, "%%MatrixMarket matrix coordinate real {kind}");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, v);
    }
    out.write_all(s.as_bytes()).map_err(|e| LinalgError::Io(e.to_string()))
}

pub fn read_matrix_market<R: BufRead>(input: R) -> Result<SparseMatrix, LinalgError> {
    let mut lines = input.lines().enumerate();
    let bad = |line: usize, msg: &str| LinalgError::Parse { line, msg: msg.to_string() };
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let header = header.map_err(|e| LinalgError::Io(e.to_string()))?.to_lowercase();
    let words: Vec<&str> = header.split_whitespace().collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" {
        return Err(bad(1, "expected '%%MatrixMarket matrix coordinate ...' header"));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(bad(1, "only real matrices are supported"));
    }
    let symmetric = match words[4] {
        "general" => false,
        "symmetric" => true,
        _ => return Err(bad(1, "only general and symmetric storage are supported")),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (k, line) in lines {
        let line = line.map_err(|e| LinalgError::Io(e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(bad(k + 1, "expected '<rows> <cols> <entries>'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|_| bad(k + 1, "invalid size"));
                size = Some((p(f[0])?, p(f[1])?, p(f[2])?));
            }
            Some((nr, nc, _)) => {
                if f.len() != 3 {
                    return Err(bad(k + 1, "expected '<i> <j> <value>'"));
                }
                let i = f[0].parse::<usize>().map_err(|_| bad(k + 1, "invalid row index"))?;
                let j = f[1].parse::<usize>().map_err(|_| bad(k + 1, "invalid column index"))?;
                let v = f[2].parse::<f64>().map_err(|_| bad(k + 1, "invalid value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(bad(k + 1, "index out of range"));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| bad(0, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|t| t.0 >= t.1).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(bad(0, "entry count does not match the size line"));
    }
    SparseMatrix::from_triplets(nr, nc, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_round_trip() {
        let a = SparseMatrix::from_triplets(
            3,
            3,
            &[(0, 0, 2.0), (0, 1, -0.1), (1, 0, -0.1), (1, 1, 1.0 / 3.0), (2, 2, 5.0)],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("%%MatrixMarket matrix coordinate real symmetric\n3 3 4\n"));
        assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn general_round_trip() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.5), (1, 0, -2.0)]).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().contains("general"));
        assert_eq!(read_matrix_market(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn rejects_bad_input() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(read_matrix_market(text.as_bytes()), Err(LinalgError::Parse { line: 3, .. })));
        let text = "%%MatrixMarket matrix array real general\n";
        assert!(read_matrix_market(text.as_bytes()).is_err());
    }
}
