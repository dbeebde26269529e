//! Residual a posteriori estimator for P1 eigenfunctions on sphere meshes.
//!
//! Per triangle,
//!
//! ```text
//! eta_T^2 = h_T^2 lambda^2 |u|_{L2(T)}^2
//!         + 1/2 sum_e h_e |[grad u . (n_T x tau_e)]|_{L2(e)}^2
//!         + (max_vertex B(x))^2 |grad u|_{L2(T)}^2
//! ```
//!
//! with the sphere bound `B(x) = |(1 - n.n_T)/(n.n_T)| (|x|^2 + 4|x|)`.
//! The estimator only reports; it never drives refinement.

use crate::assembly::element_mass;
use crate::eigensolver::KERNEL_TOL;
use crate::mesh::TriMesh;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use std::collections::HashMap;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("edge ({0}, {1}) has a single adjacent triangle")]
    BoundaryEdge(usize, usize),
    #[error("edge ({0}, {1}) has more than two adjacent triangles")]
    NonManifoldEdge(usize, usize),
    #[error("triangle {0} faces away from the sphere normal")]
    Misoriented(usize),
    #[error("triangle {0} is degenerate")]
    Degenerate(usize),
    #[error("vector has length {got}, mesh has {expected} vertices")]
    Length { expected: usize, got: usize },
    #[error("eigenvalue {0} is negative")]
    NegativeEigenvalue(f64),
}

/// The three estimator contributions of one triangle, already squared.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TriangleTerms {
    pub volume: f64,
    pub jump: f64,
    pub geometric: f64,
}

impl TriangleTerms {
    pub fn eta_sq(&self) -> f64 {
        self.volume + self.jump + self.geometric
    }

    pub fn eta(&self) -> f64 {
        self.eta_sq().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorBreakdown {
    pub triangles: Vec<TriangleTerms>,
    pub global: f64,
}

impl EstimatorBreakdown {
    /// Writes `triangle,volume,jump,geometric,eta` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "triangle,volume,jump,geometric,eta")?;
        for (t, terms) in self.triangles.iter().enumerate() {
            writeln!(
                w,
                "{t},{:e},{:e},{:e},{:e}",
                terms.volume,
                terms.jump,
                terms.geometric,
                terms.eta()
            )?;
        }
        Ok(())
    }
}

/// For each triangle and local edge `k` (opposite vertex `k`), the
/// neighbouring triangle across that edge.
#[derive(Debug, Clone)]
pub struct EdgeAdjacency {
    neighbours: Vec<[usize; 3]>,
}

impl EdgeAdjacency {
    pub fn new(mesh: &TriMesh) -> Result<Self, EstimatorError> {
        let mut owners: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                owners.entry((a.min(b), a.max(b))).or_default().push((t, k));
            }
        }
        let mut neighbours = vec![[usize::MAX; 3]; mesh.n_triangles()];
        for (&(a, b), list) in &owners {
            match list.as_slice() {
                [(t1, k1), (t2, k2)] => {
                    neighbours[*t1][*k1] = *t2;
                    neighbours[*t2][*k2] = *t1;
                }
                [_] => return Err(EstimatorError::BoundaryEdge(a, b)),
                _ => return Err(EstimatorError::NonManifoldEdge(a, b)),
            }
        }
        Ok(Self { neighbours })
    }

    pub fn neighbour(&self, t: usize, k: usize) -> usize {
        self.neighbours[t][k]
    }
}

fn unit_normal(p: &[Vector3<f64>; 3]) -> (Vector3<f64>, f64) {
    let c = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let twice_area = c.norm();
    (c / twice_area, 0.5 * twice_area)
}

/// Tangential gradient of the linear interpolant of `u` on a flat triangle.
pub fn element_gradient(p: &[Vector3<f64>; 3], u: [f64; 3]) -> Vector3<f64> {
    let (n, area) = unit_normal(p);
    (0..3)
        .map(|i| u[i] * n.cross(&(p[(i + 2) % 3] - p[(i + 1) % 3])) / (2.0 * area))
        .sum()
}

/// Pointwise bound of the geometric error operator at `x` for a flat
/// element with unit normal `n_t`.
pub fn vertex_bound(x: &Vector3<f64>, n_t: &Vector3<f64>) -> f64 {
    let r = x.norm();
    let c = x.dot(n_t) / r;
    ((1.0 - c) / c).abs() * (r * r + 4.0 * r)
}

/// Maximum of [`vertex_bound`] over the three vertices.
pub fn geometric_bound(p: &[Vector3<f64>; 3]) -> Option<f64> {
    let (n_t, area) = unit_normal(p);
    if !(area > 0.0) {
        return None;
    }
    let mut best = 0.0f64;
    for x in p {
        if x.dot(&n_t) <= 0.0 {
            return None;
        }
        best = best.max(vertex_bound(x, &n_t));
    }
    Some(best)
}

/// Conormal derivative jump across the edge `a -> b`. The tangent is
/// oriented from the lower to the higher vertex index.
pub fn conormal_jump(
    grad_t: &Vector3<f64>,
    n_t: &Vector3<f64>,
    grad_s: &Vector3<f64>,
    n_s: &Vector3<f64>,
    tau: &Vector3<f64>,
) -> f64 {
    grad_t.dot(&n_t.cross(tau)) - grad_s.dot(&n_s.cross(tau))
}

fn local_values(mesh: &TriMesh, u: &[f64], t: usize) -> [f64; 3] {
    let tri = mesh.triangles[t];
    [u[tri[0]], u[tri[1]], u[tri[2]]]
}

/// Squared estimator terms of triangle `t`.
pub fn local_estimator(
    mesh: &TriMesh,
    adjacency: &EdgeAdjacency,
    u: &[f64],
    lambda: f64,
    t: usize,
) -> Result<TriangleTerms, EstimatorError> {
    let p = mesh.triangle_points(t);
    let tri = mesh.triangles[t];
    let ut = local_values(mesh, u, t);
    let mass: Matrix3<f64> = element_mass(&p).map_err(|_| EstimatorError::Degenerate(t))?;
    let uv = Vector3::from(ut);
    let l2_sq = uv.dot(&(mass * uv));
    let h_sq = (0..3)
        .map(|k| (p[(k + 1) % 3] - p[k]).norm_squared())
        .fold(0.0, f64::max);
    let volume = h_sq * lambda * lambda * l2_sq;

    let (n_t, area) = unit_normal(&p);
    let grad = element_gradient(&p, ut);
    let mut jump = 0.0;
    for k in 0..3 {
        let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
        let (lo, hi) = (a.min(b), a.max(b));
        let edge = mesh.vertices[hi] - mesh.vertices[lo];
        let len = edge.norm();
        let tau = edge / len;
        let s = adjacency.neighbour(t, k);
        let ps = mesh.triangle_points(s);
        let (n_s, _) = unit_normal(&ps);
        let grad_s = element_gradient(&ps, local_values(mesh, u, s));
        let j = conormal_jump(&grad, &n_t, &grad_s, &n_s, &tau);
        // h_e * |e| * j^2 with the jump constant along the edge
        jump += 0.5 * len * len * j * j;
    }

    let bound = geometric_bound(&p).ok_or(EstimatorError::Misoriented(t))?;
    let geometric = bound * bound * area * grad.norm_squared();
    Ok(TriangleTerms { volume, jump, geometric })
}

/// Root-sum-square of per-triangle values.
pub fn global_estimator(eta_t: &[f64]) -> f64 {
    eta_t.iter().map(|e| e * e).sum::<f64>().sqrt()
}

/// Evaluates the estimator on every triangle.
pub fn estimate(mesh: &TriMesh, u: &[f64], lambda: f64) -> Result<EstimatorBreakdown, EstimatorError> {
    if u.len() != mesh.n_vertices() {
        return Err(EstimatorError::Length { expected: mesh.n_vertices(), got: u.len() });
    }
    if lambda < -KERNEL_TOL || !lambda.is_finite() {
        return Err(EstimatorError::NegativeEigenvalue(lambda));
    }
    let lambda = lambda.max(0.0);
    let adjacency = EdgeAdjacency::new(mesh)?;
    let triangles = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| local_estimator(mesh, &adjacency, u, lambda, t))
        .collect::<Result<Vec<_>, _>>()?;
    let global = triangles.iter().map(TriangleTerms::eta_sq).sum::<f64>().sqrt();
    Ok(EstimatorBreakdown { triangles, global })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::eigensolver::coarse_eigensolve;
    use crate::mesh::{make_icosahedron, make_octahedron, refine, refine_hierarchy, UnitSphere};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn octa(level: usize) -> TriMesh {
        let mut m = make_octahedron();
        for _ in 0..level {
            m = refine(&m, &UnitSphere).unwrap();
        }
        m
    }

    #[test]
    fn constant_has_zero_estimate() {
        let mesh = octa(2);
        let u = vec![0.7; mesh.n_vertices()];
        let est = estimate(&mesh, &u, 0.0).unwrap();
        assert!(est.triangles.iter().all(|t| t.eta() < 1e-12));
        assert!(est.global < 1e-12);
    }

    #[test]
    fn flat_linear_patch_has_no_jump() {
        let p = [
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(1.0, 0.0, 1.0),
            Vector3::new(0.0, 1.0, 1.0),
        ];
        let q = [p[1], Vector3::new(1.0, 1.0, 1.0), p[2]];
        let f = |x: &Vector3<f64>| 2.0 * x.x - 3.0 * x.y + 0.5;
        let gt = element_gradient(&p, [f(&p[0]), f(&p[1]), f(&p[2])]);
        let gs = element_gradient(&q, [f(&q[0]), f(&q[1]), f(&q[2])]);
        assert!((gt - Vector3::new(2.0, -3.0, 0.0)).norm() < 1e-14);
        let n = Vector3::z();
        let tau = (p[2] - p[1]).normalize();
        assert!(conormal_jump(&gt, &n, &gs, &n, &tau).abs() < 1e-14);
    }

    #[test]
    fn gradient_energy_matches_element_stiffness() {
        let p = octa(1).triangle_points(3);
        let k = crate::assembly::element_stiffness(&p).unwrap();
        let u = [0.3, -1.2, 2.0];
        let g = element_gradient(&p, u);
        let (_, area) = unit_normal(&p);
        let uv = Vector3::from(u);
        assert!((area * g.norm_squared() - uv.dot(&(k * uv))).abs() < 1e-13);
    }

    #[test]
    fn octahedron_face_bound() {
        let mesh = make_octahedron();
        let expected = 5.0 * (3f64.sqrt() - 1.0);
        for t in 0..mesh.n_triangles() {
            let b = geometric_bound(&mesh.triangle_points(t)).unwrap();
            assert!((b - expected).abs() < 1e-13, "{b}");
        }
    }

    #[test]
    fn bound_vanishes_where_normals_agree() {
        let n = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(vertex_bound(&Vector3::new(0.0, 0.0, 1.0), &n), 0.0);
    }

    #[test]
    fn bound_decreases_under_refinement() {
        let levels = refine_hierarchy(make_octahedron(), 3, &UnitSphere).unwrap();
        let max_bound = |m: &TriMesh| {
            (0..m.n_triangles())
                .map(|t| geometric_bound(&m.triangle_points(t)).unwrap())
                .fold(0.0, f64::max)
        };
        let b: Vec<f64> = levels.iter().map(max_bound).collect();
        assert!(b[1] < b[0] && b[2] < b[1] && b[3] < b[2], "{b:?}");
    }

    #[test]
    fn inward_face_is_rejected() {
        let mesh = make_octahedron();
        let mut p = mesh.triangle_points(0);
        p.swap(1, 2);
        assert!(geometric_bound(&p).is_none());
    }

    #[test]
    fn global_matches_two_pass_sum() {
        assert_eq!(global_estimator(&[]), 0.0);
        assert_eq!(global_estimator(&[0.0, 3.0, 0.0]), 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..2.0)).collect();
        let mut squares = Vec::with_capacity(v.len());
        for x in &v {
            squares.push(x * x);
        }
        let mut total = 0.0;
        for s in &squares {
            total += s;
        }
        assert!((global_estimator(&v) - total.sqrt()).abs() < 1e-14 * total.sqrt());
    }

    #[test]
    fn global_is_root_sum_of_local() {
        let mesh = octa(2);
        let u: Vec<f64> = mesh.vertices.iter().map(|x| x.x * x.y + x.z).collect();
        let est = estimate(&mesh, &u, 2.0).unwrap();
        let eta: Vec<f64> = est.triangles.iter().map(TriangleTerms::eta).collect();
        assert!((global_estimator(&eta) - est.global).abs() < 1e-13 * est.global);
        assert!(est
            .triangles
            .iter()
            .all(|t| t.volume >= 0.0 && t.jump >= 0.0 && t.geometric >= 0.0));
    }

    #[test]
    fn edge_jump_is_symmetric() {
        let mesh = octa(2);
        let adj = EdgeAdjacency::new(&mesh).unwrap();
        let u: Vec<f64> = mesh.vertices.iter().map(|x| x.x.powi(2) - x.y).collect();
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles[t];
            for k in 0..3 {
                let s = adj.neighbour(t, k);
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let tau = (mesh.vertices[a.max(b)] - mesh.vertices[a.min(b)]).normalize();
                let pt = mesh.triangle_points(t);
                let ps = mesh.triangle_points(s);
                let gt = element_gradient(&pt, local_values(&mesh, &u, t));
                let gs = element_gradient(&ps, local_values(&mesh, &u, s));
                let nt = unit_normal(&pt).0;
                let ns = unit_normal(&ps).0;
                let from_t = conormal_jump(&gt, &nt, &gs, &ns, &tau);
                let from_s = conormal_jump(&gs, &ns, &gt, &nt, &tau);
                assert!((from_t.powi(2) - from_s.powi(2)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn open_mesh_reports_boundary_edge() {
        let v = vec![Vector3::x(), Vector3::y(), Vector3::z()];
        let mesh = TriMesh {
            vertices: v,
            triangles: vec![[0, 1, 2]],
            level: 0,
            parent_edges: vec![],
        };
        assert!(matches!(EdgeAdjacency::new(&mesh), Err(EstimatorError::BoundaryEdge(..))));
    }

    #[test]
    fn rejects_bad_input() {
        let mesh = octa(1);
        assert!(matches!(estimate(&mesh, &[1.0], 0.0), Err(EstimatorError::Length { .. })));
        let u = vec![0.0; mesh.n_vertices()];
        assert!(estimate(&mesh, &u, -1.0).is_err());
    }

    #[test]
    fn permutation_invariant() {
        let mesh = make_icosahedron();
        let mesh = refine(&mesh, &UnitSphere).unwrap();
        let n = mesh.n_vertices();
        let u: Vec<f64> = mesh.vertices.iter().map(|x| x.x - 0.3 * x.z * x.y).collect();
        let perm: Vec<usize> = (0..n).map(|i| (i * 17 + 5) % n).collect();
        let mut verts = vec![Vector3::zeros(); n];
        let mut pu = vec![0.0; n];
        for (old, &new) in perm.iter().enumerate() {
            verts[new] = mesh.vertices[old];
            pu[new] = u[old];
        }
        let tris = mesh.triangles.iter().map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]]).collect();
        let shuffled = TriMesh::new(verts, tris).unwrap();
        let a = estimate(&mesh, &u, 6.0).unwrap();
        let b = estimate(&shuffled, &pu, 6.0).unwrap();
        assert!((a.global - b.global).abs() < 1e-12 * a.global);
    }

    #[test]
    fn decays_like_h_for_first_cluster() {
        let levels = refine_hierarchy(octa(2), 2, &UnitSphere).unwrap();
        let mut samples = Vec::new();
        for mesh in &levels {
            let forms = assemble(mesh).unwrap();
            let set = coarse_eigensolve(&forms, 0.0, 4).unwrap();
            let est = estimate(mesh, &set.vectors[1], set.values[1]).unwrap();
            samples.push((mesh.n_vertices() as f64, est.global));
        }
        let fit = crate::validation::fit_rate(&samples).unwrap();
        let exponent = -fit.rate;
        assert!((-0.65..=-0.35).contains(&exponent), "{exponent} {samples:?}");
    }

    proptest! {
        #[test]
        fn one_homogeneous(c in -5.0f64..5.0, seed in 0u64..1000) {
            let mesh = octa(1);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u: Vec<f64> = (0..mesh.n_vertices()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
            let a = estimate(&mesh, &u, 2.0).unwrap().global;
            let b = estimate(&mesh, &cu, 2.0).unwrap().global;
            prop_assert!((b - c.abs() * a).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
