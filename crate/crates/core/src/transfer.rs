//! Grid transfer between nested P1 spaces.
//!
//! For the 4-split refinement, the nodal interpolant of a coarse P1 function
//! keeps inherited values and averages the two parent values at each new
//! vertex. Restriction is the transpose. Because coarse vertices are a prefix
//! of the fine ones, truncating a fine vector to that prefix is the nodal
//! interpolation onto the coarse level.

use crate::linalg::{LinalgError, SparseMatrix};
use crate::mesh::TriMesh;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransferError {
    #[error("meshes are not parent and child: {0}")]
    NotNested(String),
    #[error("vector of length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("no prolongation between levels {0} and {1}")]
    Gap(usize, usize),
    #[error("{0}")]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone)]
pub struct Prolongation {
    pub matrix: SparseMatrix,
    pub coarse_level: usize,
    pub fine_level: usize,
}

impl Prolongation {
    pub fn n_coarse(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_fine(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn build_prolongation(coarse: &TriMesh, fine: &TriMesh) -> Result<Prolongation, TransferError> {
    let nc = coarse.n_vertices();
    let nf = fine.n_vertices();
    if fine.level != coarse.level + 1 {
        return Err(TransferError::NotNested(format!(
            "levels {} and {}",
            coarse.level, fine.level
        )));
    }
    if fine.n_inherited() != nc {
        return Err(TransferError::NotNested(format!(
            "fine mesh inherits {} vertices, coarse has {nc}",
            fine.n_inherited()
        )));
    }
    if fine.vertices[..nc] != coarse.vertices[..] {
        return Err(TransferError::NotNested("vertex prefix differs".into()));
    }
    let mut triplets = Vec::with_capacity(nc + 2 * (nf - nc));
    for i in 0..nc {
        triplets.push((i, i, 1.0));
    }
    for (k, &(a, b)) in fine.parent_edges.iter().enumerate() {
        if a >= nc || b >= nc {
            return Err(TransferError::NotNested(format!(
                "parent edge ({a}, {b}) of vertex {} is not coarse",
                nc + k
            )));
        }
        triplets.push((nc + k, a, 0.5));
        triplets.push((nc + k, b, 0.5));
    }
    Ok(Prolongation {
        matrix: SparseMatrix::from_triplets(nf, nc, &triplets)?,
        coarse_level: coarse.level,
        fine_level: fine.level,
    })
}

pub fn prolong(p: &Prolongation, coarse: &[f64]) -> Result<Vec<f64>, TransferError> {
    if coarse.len() != p.n_coarse() {
        return Err(TransferError::Length { expected: p.n_coarse(), got: coarse.len() });
    }
    Ok(p.matrix.spmv(coarse)?)
}

/// `Pᵀ v`.
pub fn restrict(p: &Prolongation, fine: &[f64]) -> Result<Vec<f64>, TransferError> {
    if fine.len() != p.n_fine() {
        return Err(TransferError::Length { expected: p.n_fine(), got: fine.len() });
    }
    let mut out = vec![0.0; p.n_coarse()];
    for (i, &v) in fine.iter().enumerate() {
        let (cols, vals) = p.matrix.row(i);
        for (&j, &w) in cols.iter().zip(vals) {
            out[j] += w * v;
        }
    }
    Ok(out)
}

/// Nodal interpolation of a fine vector onto a coarser nested level with
/// `n_coarse` vertices.
pub fn inject(fine: &[f64], n_coarse: usize) -> Result<Vec<f64>, TransferError> {
    if n_coarse > fine.len() {
        return Err(TransferError::Length { expected: n_coarse, got: fine.len() });
    }
    Ok(fine[..n_coarse].to_vec())
}

/// Product `P_{to-1→to} ⋯ P_{from→from+1}`. `hierarchy` holds one
/// prolongation per level step in any order; `from == to` gives the
/// identity on level `from`.
pub fn compose_prolongations(
    hierarchy: &[Prolongation],
    from: usize,
    to: usize,
) -> Result<SparseMatrix, TransferError> {
    if from > to {
        return Err(TransferError::Gap(from, to));
    }
    let step = |l: usize| {
        hierarchy
            .iter()
            .find(|p| p.coarse_level == l)
            .ok_or(TransferError::Gap(l, l + 1))
    };
    if from == to {
        let n = match hierarchy.iter().find(|p| p.coarse_level == from) {
            Some(p) => p.n_coarse(),
            None => step(from - 1).map_err(|_| TransferError::Gap(from, to))?.n_fine(),
        };
        return Ok(SparseMatrix::identity(n));
    }
    let mut acc = step(from)?.matrix.clone();
    for l in from + 1..to {
        acc = step(l)?.matrix.matmul(&acc)?;
    }
    Ok(acc)
}
