//! ASCII OFF reading and writing.
//!
//! Coordinates are written with the shortest representation that parses back
//! to the same `f64`, so a save/load cycle is bit-exact.

use super::{MeshError, SurfaceProjector, TriMesh};
use nalgebra::Vector3;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

pub fn write_off<W: Write>(mesh: &TriMesh, mut out: W) -> Result<(), MeshError> {
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(
        s,
        "{} {} {}",
        mesh.n_vertices(),
        mesh.n_triangles(),
        mesh.edges().len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn save_off(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let file = std::fs::File::create(path)?;
    write_off(mesh, std::io::BufWriter::new(file))
}

/// Parses an OFF stream into a level-0 mesh. When `projector` is given the
/// vertices are snapped onto the surface.
pub fn read_off<R: BufRead>(
    input: R,
    projector: Option<&dyn SurfaceProjector>,
) -> Result<TriMesh, MeshError> {
    // (line number, tokens) for every non-blank, non-comment line
    let mut lines = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if !content.is_empty() {
            lines.push((k + 1, content.to_string()));
        }
    }
    let mut it = lines.into_iter();
    let err = |line: usize, msg: String| MeshError::Parse { line, msg };

    let (line, header) = it.next().ok_or_else(|| err(1, "empty file".into()))?;
    // The counts may share the header line ("OFF 6 8 12").
    let counts_inline = match header.strip_prefix("OFF") {
        Some(rest) if rest.trim().is_empty() => None,
        Some(rest) if rest.starts_with(char::is_whitespace) => Some((line, rest.trim().to_string())),
        _ => return Err(err(line, format!("expected 'OFF' header, found '{header}'"))),
    };
    let (line, counts) = match counts_inline {
        Some(c) => c,
        None => it
            .next()
            .ok_or_else(|| err(line + 1, "missing vertex/face counts".into()))?,
    };
    let nums: Vec<&str> = counts.split_whitespace().collect();
    if nums.len() < 2 {
        return Err(err(line, format!("expected '<V> <F> <E>', found '{counts}'")));
    }
    let parse_count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(line, format!("invalid count '{s}'")))
    };
    let nv = parse_count(nums[0])?;
    let nf = parse_count(nums[1])?;

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, text) = it
            .next()
            .ok_or_else(|| err(0, format!("file ends after {k} of {nv} vertices")))?;
        let xyz: Vec<f64> = text
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f64>().map_err(|_| err(line, format!("invalid coordinate '{s}'"))))
            .collect::<Result<_, _>>()?;
        if xyz.len() != 3 || xyz.iter().any(|x| !x.is_finite()) {
            return Err(err(line, "expected three finite coordinates".into()));
        }
        let p = Vector3::new(xyz[0], xyz[1], xyz[2]);
        vertices.push(match projector {
            Some(proj) => proj.project(&p),
            None => p,
        });
    }

    let mut triangles = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, text) = it
            .next()
            .ok_or_else(|| err(0, format!("file ends after {k} of {nf} faces")))?;
        let idx: Vec<usize> = text
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| err(line, format!("invalid index '{s}'"))))
            .collect::<Result<_, _>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(err(line, format!("face {k} is not a triangle")));
        }
        let tri = [idx[1], idx[2], idx[3]];
        if let Some(&bad) = tri.iter().find(|&&i| i >= nv) {
            return Err(err(
                line,
                format!("vertex index {bad} out of range ({nv} vertices)"),
            ));
        }
        triangles.push(tri);
    }
    TriMesh::new(vertices, triangles)
}

pub fn load_off(path: &Path, projector: Option<&dyn SurfaceProjector>) -> Result<TriMesh, MeshError> {
    let file = std::fs::File::open(path)?;
    read_off(std::io::BufReader::new(file), projector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_icosahedron, make_octahedron, refine, UnitSphere};

    #[test]
    fn round_trip_is_bit_exact() {
        let mesh = refine(&make_icosahedron(), &UnitSphere).unwrap();
        let mut buf = Vec::new();
        write_off(&mesh, &mut buf).unwrap();
        let back = read_off(buf.as_slice(), None).unwrap();
        assert_eq!(back.vertices, mesh.vertices);
        assert_eq!(back.triangles, mesh.triangles);
    }

    #[test]
    fn header_format() {
        let mut buf = Vec::new();
        write_off(&make_octahedron(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("OFF"));
        assert_eq!(lines.next(), Some("6 8 12"));
        assert_eq!(text.lines().last(), Some("3 0 3 5"));
    }

    #[test]
    fn reports_line_numbers() {
        let text = "OFF\n# comment\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n";
        match read_off(text.as_bytes(), None) {
            Err(MeshError::Parse { line, msg }) => {
                assert_eq!(line, 7);
                assert!(msg.contains("out of range"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 2 3\n";
        assert!(matches!(
            read_off(quad.as_bytes(), None),
            Err(MeshError::Parse { line: 7, .. })
        ));
        assert!(matches!(
            read_off("PLY\n".as_bytes(), None),
            Err(MeshError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn snaps_to_surface() {
        let text = "OFF 6 8 0\n2 0 0\n-2 0 0\n0 2 0\n0 -2 0\n0 0 2\n0 0 -2\n\
                    3 0 2 4\n3 2 1 4\n3 1 3 4\n3 3 0 4\n3 2 0 5\n3 1 2 5\n3 3 1 5\n3 0 3 5\n";
        let m = read_off(text.as_bytes(), Some(&UnitSphere)).unwrap();
        assert!(m.vertices.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert_eq!(m.triangles, make_octahedron().triangles);
    }
}
