//! P1 finite element matrices on a triangulated surface.
//!
//! Each triangle is treated as a flat element parametrized over the
//! reference triangle, so the element stiffness is `area * Gᵀ g⁻¹ G` with
//! `g` the 2x2 metric tensor of the edge vectors.

use crate::linalg::SparseMatrix;
use crate::mesh::{mesh_stats, TriMesh};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

/// Elements with area below this multiple of the squared diameter are
/// rejected.
pub const DEGENERATE_AREA: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    Degenerate { triangle: usize, area: f64 },
    #[error("{0}")]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Stiffness and mass matrices of one level.
#[derive(Debug, Clone)]
pub struct FemForms {
    pub stiffness: SparseMatrix,
    pub mass: SparseMatrix,
}

impl FemForms {
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }
}

fn triangle_area(p: &[Vector3<f64>; 3]) -> f64 {
    0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm()
}

fn diameter_sq(p: &[Vector3<f64>; 3]) -> f64 {
    (p[1] - p[0])
        .norm_squared()
        .max((p[2] - p[1]).norm_squared())
        .max((p[0] - p[2]).norm_squared())
}

fn check_element(p: &[Vector3<f64>; 3], h_sq: f64) -> Result<f64, f64> {
    let area = triangle_area(p);
    if area.is_finite() && area >= DEGENERATE_AREA * h_sq && area > 0.0 {
        Ok(area)
    } else {
        Err(area)
    }
}

/// Element stiffness from the in-plane parametrization.
pub fn element_stiffness(p: &[Vector3<f64>; 3]) -> Result<Matrix3<f64>, AssemblyError> {
    let area = check_element(p, diameter_sq(p))
        .map_err(|area| AssemblyError::Degenerate { triangle: 0, area })?;
    Ok(stiffness_with_area(p, area))
}

fn stiffness_with_area(p: &[Vector3<f64>; 3], area: f64) -> Matrix3<f64> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let g = Matrix2::new(e1.dot(&e1), e1.dot(&e2), e1.dot(&e2), e2.dot(&e2));
    let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
    let g_inv = Matrix2::new(g[(1, 1)], -g[(0, 1)], -g[(1, 0)], g[(0, 0)]) / det;
    // gradients of the reference hat functions
    let grads = [Vector2::new(-1.0, -1.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
    Matrix3::from_fn(|i, j| area * grads[i].dot(&(g_inv * grads[j])))
}

/// Consistent P1 mass: `area/6` on the diagonal, `area/12` off it.
pub fn element_mass(p: &[Vector3<f64>; 3]) -> Result<Matrix3<f64>, AssemblyError> {
    let area = check_element(p, diameter_sq(p))
        .map_err(|area| AssemblyError::Degenerate { triangle: 0, area })?;
    Ok(mass_with_area(area))
}

fn mass_with_area(area: f64) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| if i == j { area / 6.0 } else { area / 12.0 })
}

fn element_areas(mesh: &TriMesh) -> Result<Vec<f64>, AssemblyError> {
    let h_max = mesh_stats(mesh).h_max;
    let areas: Vec<Result<f64, f64>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| check_element(&mesh.triangle_points(t), h_max * h_max))
        .collect();
    areas
        .into_iter()
        .enumerate()
        .map(|(t, a)| a.map_err(|area| AssemblyError::Degenerate { triangle: t, area }))
        .collect()
}

/// Scatters element matrices in triangle order.
fn scatter(mesh: &TriMesh, elements: &[Matrix3<f64>]) -> Result<SparseMatrix, AssemblyError> {
    let mut triplets = Vec::with_capacity(9 * elements.len());
    for (tri, k) in mesh.triangles.iter().zip(elements) {
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], k[(i, j)]));
            }
        }
    }
    let n = mesh.n_vertices();
    Ok(SparseMatrix::from_triplets(n, n, &triplets)?)
}

/// Assembles the stiffness and mass matrices. Element matrices are computed
/// in parallel and summed in a fixed order, so the result does not depend on
/// the thread count.
pub fn assemble(mesh: &TriMesh) -> Result<FemForms, AssemblyError> {
    let areas = element_areas(mesh)?;
    let (k, m): (Vec<_>, Vec<_>) = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| {
            let p = mesh.triangle_points(t);
            (stiffness_with_area(&p, areas[t]), mass_with_area(areas[t]))
        })
        .unzip();
    Ok(FemForms {
        stiffness: scatter(mesh, &k)?,
        mass: scatter(mesh, &m)?,
    })
}

/// Stiffness matrix from the cotangent formula
/// `A_ij = -(cot α_ij + cot β_ij) / 2`, with the diagonal set to minus the
/// off-diagonal row sum.
pub fn cotangent_stiffness(mesh: &TriMesh) -> Result<SparseMatrix, AssemblyError> {
    element_areas(mesh)?;
    let mut triplets = Vec::with_capacity(12 * mesh.n_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = mesh.triangle_points(t);
        for k in 0..3 {
            // angle at corner k is opposite edge (k+1, k+2)
            let u = p[(k + 1) % 3] - p[k];
            let v = p[(k + 2) % 3] - p[k];
            let cot = u.dot(&v) / u.cross(&v).norm();
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            triplets.push((i, j, -0.5 * cot));
            triplets.push((j, i, -0.5 * cot));
            triplets.push((i, i, 0.5 * cot));
            triplets.push((j, j, 0.5 * cot));
        }
    }
    let n = mesh.n_vertices();
    Ok(SparseMatrix::from_triplets(n, n, &triplets)?)
}
