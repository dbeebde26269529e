//! Triangulated closed surfaces and their uniform refinement.
//!
//! A [`TriMesh`] produced by [`refine`] keeps the parent vertices as a prefix
//! of its vertex list and records, for every new vertex, the coarse edge it
//! was created on. The transfer operators rely on both properties.

mod off;

pub use off::{load_off, read_off, save_off, write_off};

use nalgebra::Vector3;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("vertex index {index} out of range in triangle {triangle} ({n_vertices} vertices)")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        n_vertices: usize,
    },
    #[error("triangle {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("edge ({0}, {1}) is shared by {2} triangles; the surface must be a closed 2-manifold")]
    NonManifold(usize, usize, usize),
    #[error("edge ({0}, {1}) is traversed twice in the same direction; inconsistent orientation")]
    InconsistentOrientation(usize, usize),
    #[error("mesh has non-positive enclosed volume {0}; triangles must be oriented outward")]
    InwardOrientation(f64),
    #[error("mesh has no triangles")]
    Empty,
    #[error("parent edge table has {got} entries, expected {expected}")]
    ParentTable { got: usize, expected: usize },
    #[error("OFF parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Maps points onto the exact surface.
pub trait SurfaceProjector: Sync {
    fn project(&self, p: &Vector3<f64>) -> Vector3<f64>;
    /// Outward unit normal of the exact surface at a point on it.
    fn normal(&self, p: &Vector3<f64>) -> Vector3<f64>;
}

/// Radial projection onto the unit sphere.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSphere;

impl SurfaceProjector for UnitSphere {
    fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p / p.norm()
    }

    fn normal(&self, p: &Vector3<f64>) -> Vector3<f64> {
        p / p.norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    /// Number of refinements since the coarse mesh.
    pub level: usize,
    /// Coarse endpoints `(i, j)`, `i < j`, of each vertex created by the last
    /// refinement. Entry `k` belongs to vertex `n_coarse + k`.
    pub parent_edges: Vec<(usize, usize)>,
}

impl TriMesh {
    /// Builds a level-0 mesh and checks its invariants.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mesh = TriMesh {
            vertices,
            triangles,
            level: 0,
            parent_edges: Vec::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// The same triangulation as a level-0 mesh with no refinement history.
    pub fn rebased(self) -> TriMesh {
        TriMesh { level: 0, parent_edges: Vec::new(), ..self }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Vertices inherited from the parent level.
    pub fn n_inherited(&self) -> usize {
        self.vertices.len() - self.parent_edges.len()
    }

    /// Coarse endpoints of vertex `v`, or `None` if it was inherited.
    pub fn parent_edge(&self, v: usize) -> Option<(usize, usize)> {
        v.checked_sub(self.n_inherited())
            .and_then(|k| self.parent_edges.get(k).copied())
    }

    pub fn triangle_points(&self, t: usize) -> [Vector3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unique undirected edges `(i, j)` with `i < j`, in order of first
    /// appearance.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let e = ordered(tri[k], tri[(k + 1) % 3]);
                if seen.insert(e, ()).is_none() {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Enclosed volume by the divergence theorem; positive when oriented
    /// outward.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0
            })
            .sum()
    }

    /// Checks index ranges, the closed 2-manifold property, orientation
    /// consistency and outward orientation.
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = self.vertices.len();
        if self.parent_edges.len() > nv {
            return Err(MeshError::ParentTable {
                got: self.parent_edges.len(),
                expected: nv,
            });
        }
        // directed edge -> count; undirected edge -> count
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &index in tri {
                if index >= nv {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index,
                        n_vertices: nv,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex(t));
            }
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                *directed.entry((i, j)).or_default() += 1;
                *undirected.entry(ordered(i, j)).or_default() += 1;
            }
        }
        let mut bad: Vec<_> = undirected.iter().filter(|(_, &c)| c != 2).collect();
        bad.sort();
        if let Some((&(i, j), &c)) = bad.first() {
            return Err(MeshError::NonManifold(i, j, c));
        }
        let mut twisted: Vec<_> = directed.iter().filter(|(_, &c)| c > 1).collect();
        twisted.sort();
        if let Some((&(i, j), _)) = twisted.first() {
            return Err(MeshError::InconsistentOrientation(i, j));
        }
        let vol = self.signed_volume();
        if vol.is_nan() || vol <= 0.0 {
            return Err(MeshError::InwardOrientation(vol));
        }
        Ok(())
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Flips faces whose normal points towards the origin. Only meaningful for
/// star-shaped generator meshes.
fn orient_outward(vertices: &[Vector3<f64>], faces: &mut [[usize; 3]]) {
    for f in faces.iter_mut() {
        let [a, b, c] = *f;
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        let centroid = vertices[a] + vertices[b] + vertices[c];
        if n.dot(&centroid) < 0.0 {
            f.swap(1, 2);
        }
    }
}

/// Regular octahedron inscribed in the unit sphere (6 vertices, 8 faces).
pub fn make_octahedron() -> TriMesh {
    let vertices = vec![
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ];
    let mut faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    orient_outward(&vertices, &mut faces);
    TriMesh::new(vertices, faces).expect("octahedron is a valid closed mesh")
}

/// Regular icosahedron inscribed in the unit sphere (12 vertices, 20 faces).
pub fn make_icosahedron() -> TriMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let vertices: Vec<_> = raw
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
        .collect();
    let mut faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    orient_outward(&vertices, &mut faces);
    TriMesh::new(vertices, faces).expect("icosahedron is a valid closed mesh")
}

/// Uniform 4-split refinement. Edge midpoints are projected onto the surface
/// and appended after the inherited vertices in order of first appearance.
pub fn refine(mesh: &TriMesh, projector: &dyn SurfaceProjector) -> Result<TriMesh, MeshError> {
    mesh.validate()?;
    let nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    let mut parent_edges = Vec::new();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(4 * mesh.n_triangles());
    for tri in &mesh.triangles {
        let mut mid = [0usize; 3];
        for k in 0..3 {
            let e = ordered(tri[k], tri[(k + 1) % 3]);
            mid[k] = *midpoint.entry(e).or_insert_with(|| {
                let p = 0.5 * (mesh.vertices[e.0] + mesh.vertices[e.1]);
                vertices.push(projector.project(&p));
                parent_edges.push(e);
                nv + parent_edges.len() - 1
            });
        }
        let [a, b, c] = *tri;
        let [ab, bc, ca] = mid;
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    Ok(TriMesh {
        vertices,
        triangles,
        level: mesh.level + 1,
        parent_edges,
    })
}

/// `base` refined `times` times and rebased to level 0.
pub fn refined_coarse(base: &TriMesh, times: usize, projector: &dyn SurfaceProjector) -> Result<TriMesh, MeshError> {
    let mut mesh = base.clone();
    for _ in 0..times {
        mesh = refine(&mesh, projector)?;
    }
    Ok(mesh.rebased())
}

/// Applies [`refine`] `times` times and returns every level, coarsest first.
pub fn refine_hierarchy(
    coarse: TriMesh,
    times: usize,
    projector: &dyn SurfaceProjector,
) -> Result<Vec<TriMesh>, MeshError> {
    let mut levels = vec![coarse];
    for _ in 0..times {
        let next = refine(levels.last().expect("non-empty"), projector)?;
        levels.push(next);
    }
    Ok(levels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    pub n_vertices: usize,
    pub n_triangles: usize,
    /// Largest triangle diameter.
    pub h_max: f64,
    /// Smallest triangle diameter.
    pub h_min: f64,
    pub total_area: f64,
    /// Smallest ratio inradius / circumradius; 0.5 for an equilateral triangle.
    pub min_quality: f64,
}

pub fn mesh_stats(mesh: &TriMesh) -> MeshStats {
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut total_area = 0.0;
    let mut min_quality = f64::INFINITY;
    for t in 0..mesh.n_triangles() {
        let [p0, p1, p2] = mesh.triangle_points(t);
        let a = (p1 - p2).norm();
        let b = (p2 - p0).norm();
        let c = (p0 - p1).norm();
        let area = 0.5 * (p1 - p0).cross(&(p2 - p0)).norm();
        let diam = a.max(b).max(c);
        h_max = h_max.max(diam);
        h_min = h_min.min(diam);
        total_area += area;
        let s = 0.5 * (a + b + c);
        let inradius = area / s;
        let circumradius = a * b * c / (4.0 * area);
        min_quality = min_quality.min(inradius / circumradius);
    }
    MeshStats {
        n_vertices: mesh.n_vertices(),
        n_triangles: mesh.n_triangles(),
        h_max,
        h_min,
        total_area,
        min_quality,
    }
}
