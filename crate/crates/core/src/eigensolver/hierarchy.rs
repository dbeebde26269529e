use super::SolverError;
use crate::assembly::{assemble, FemForms};
use crate::linalg::SparseMatrix;
use crate::mesh::{refine_hierarchy, SurfaceProjector, TriMesh};
use crate::transfer::{build_prolongation, compose_prolongations, inject, Prolongation};

/// Nested meshes with their assembled forms and transfer operators.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub meshes: Vec<TriMesh>,
    pub forms: Vec<FemForms>,
    /// `prolongations[l]` maps level `l` to level `l + 1`.
    pub prolongations: Vec<Prolongation>,
    /// `from_coarsest[l]` maps level 0 to level `l`.
    pub from_coarsest: Vec<SparseMatrix>,
}

impl Hierarchy {
    /// Refines `coarse` until there are `n_levels` levels and assembles each.
    pub fn build(
        coarse: TriMesh,
        n_levels: usize,
        projector: &dyn SurfaceProjector,
    ) -> Result<Self, SolverError> {
        if n_levels == 0 {
            return Err(SolverError::Config("at least one level is required".into()));
        }
        let meshes = refine_hierarchy(coarse, n_levels - 1, projector)?;
        Self::from_meshes(meshes)
    }

    pub fn from_meshes(meshes: Vec<TriMesh>) -> Result<Self, SolverError> {
        if meshes.is_empty() {
            return Err(SolverError::Config("empty hierarchy".into()));
        }
        let forms = meshes.iter().map(assemble).collect::<Result<Vec<_>, _>>()?;
        let prolongations = meshes
            .windows(2)
            .map(|w| build_prolongation(&w[0], &w[1]))
            .collect::<Result<Vec<_>, _>>()?;
        let mut from_coarsest = vec![SparseMatrix::identity(meshes[0].n_vertices())];
        for l in 1..meshes.len() {
            from_coarsest.push(compose_prolongations(&prolongations, 0, l)?);
        }
        Ok(Hierarchy { meshes, forms, prolongations, from_coarsest })
    }

    pub fn n_levels(&self) -> usize {
        self.meshes.len()
    }

    pub fn dim(&self, level: usize) -> usize {
        self.meshes[level].n_vertices()
    }

    /// Maps a vector on level `from` to level `to`: prolongation upward,
    /// nodal interpolation downward.
    pub fn transfer(&self, v: &[f64], from: usize, to: usize) -> Result<Vec<f64>, SolverError> {
        if v.len() != self.dim(from) {
            return Err(SolverError::Config(format!(
                "vector of length {} does not live on level {from}",
                v.len()
            )));
        }
        if to <= from {
            return Ok(inject(v, self.dim(to))?);
        }
        let mut out = v.to_vec();
        for l in from..to {
            out = self.prolongations[l].matrix.spmv(&out)?;
        }
        Ok(out)
    }
}
