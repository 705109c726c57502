use crate::{MeshError, Point2, Point3, TriMesh};
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

/// ASCII OBJ loader: `v`, `vt` and triangular `f` records. Vertex order
/// is preserved. UVs are optional; when present, every face corner must
/// pair each position index with one consistent `vt` index (per-vertex
/// parameterization), which is what `save_obj` emits.
pub fn load_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut positions: Vec<Point3> = Vec::new();
    let mut texcoords: Vec<Point2> = Vec::new();
    // vt index assigned to each vertex, if consistent
    let mut vertex_vt: Vec<Option<usize>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut saw_vt_faces = false;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords = parse_floats(parts, 3, lineno)?;
                positions.push(Point3::new(coords[0], coords[1], coords[2]));
                vertex_vt.push(None);
            }
            Some("vt") => {
                let coords = parse_floats(parts, 2, lineno)?;
                texcoords.push(Point2::new(coords[0], coords[1]));
            }
            Some("f") => {
                let corners: Vec<&str> = parts.collect();
                if corners.len() != 3 {
                    return Err(MeshError::Parse {
                        line: lineno,
                        message: format!(
                            "only triangular faces are supported, got {} corners",
                            corners.len()
                        ),
                    });
                }
                let mut tri = [0u32; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut fields = corner.split('/');
                    let v_idx = parse_index(fields.next(), positions.len(), lineno)?;
                    tri[k] = v_idx as u32;
                    if let Some(vt_field) = fields.next() {
                        if !vt_field.is_empty() {
                            saw_vt_faces = true;
                            let vt_idx = parse_index(Some(vt_field), texcoords.len(), lineno)?;
                            match vertex_vt[v_idx] {
                                None => vertex_vt[v_idx] = Some(vt_idx),
                                Some(existing) if existing == vt_idx => {}
                                Some(_) => {
                                    return Err(MeshError::Parse {
                                        line: lineno,
                                        message: format!(
                                            "vertex {} maps to multiple vt indices; \
                                             per-vertex UVs are required",
                                            v_idx + 1
                                        ),
                                    });
                                }
                            }
                        }
                    }
                }
                triangles.push(tri);
            }
            _ => {} // comments, groups, normals and other records ignored
        }
    }

    let uvs = if saw_vt_faces {
        let mut uvs = Vec::with_capacity(positions.len());
        for (v, vt) in vertex_vt.iter().enumerate() {
            match vt {
                Some(i) => uvs.push(texcoords[*i]),
                None => {
                    // vertex never referenced with a vt; only fatal if it
                    // is referenced by some face at all
                    if triangles.iter().any(|t| t.contains(&(v as u32))) {
                        return Err(MeshError::Parse {
                            line: 0,
                            message: format!("vertex {} has no uv but other faces carry uvs", v + 1),
                        });
                    }
                    uvs.push(Point2::new(0.0, 0.0));
                }
            }
        }
        Some(uvs)
    } else {
        None
    };

    TriMesh::new(positions, triangles, uvs)
}

/// Writes positions (and UVs when present) with shortest round-trip
/// float formatting, so load(save(m)) reproduces coordinates exactly.
pub fn save_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for p in &mesh.vertices {
        writeln!(w, "v {} {} {}", p.x, p.y, p.z)?;
    }
    if let Some(uvs) = &mesh.uvs {
        for uv in uvs {
            writeln!(w, "vt {} {}", uv.x, uv.y)?;
        }
        for t in &mesh.triangles {
            writeln!(
                w,
                "f {}/{} {}/{} {}/{}",
                t[0] + 1,
                t[0] + 1,
                t[1] + 1,
                t[1] + 1,
                t[2] + 1,
                t[2] + 1
            )?;
        }
    } else {
        for t in &mesh.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_floats<'a>(
    parts: impl Iterator<Item = &'a str>,
    want: usize,
    line: usize,
) -> Result<Vec<f64>, MeshError> {
    let values: Result<Vec<f64>, _> = parts.take(want).map(|s| s.parse::<f64>()).collect();
    let values = values.map_err(|e| MeshError::Parse {
        line,
        message: format!("bad float: {e}"),
    })?;
    if values.len() < want {
        return Err(MeshError::Parse {
            line,
            message: format!("expected {want} numeric fields"),
        });
    }
    Ok(values)
}

/// 1-based OBJ index to 0-based, bounds-checked.
fn parse_index(field: Option<&str>, len: usize, line: usize) -> Result<usize, MeshError> {
    let raw = field.ok_or(MeshError::Parse {
        line,
        message: "missing index".into(),
    })?;
    let idx: i64 = raw.parse().map_err(|e| MeshError::Parse {
        line,
        message: format!("bad index '{raw}': {e}"),
    })?;
    if idx < 1 || idx as usize > len {
        return Err(MeshError::Parse {
            line,
            message: format!("index {idx} out of range 1..={len}"),
        });
    }
    Ok(idx as usize - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_triangle() {
        let f = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let mesh = load_obj(f.path()).unwrap();
        assert_eq!(mesh.vertex_count(), 3);
        assert_eq!(mesh.triangle_count(), 1);
        assert_eq!(mesh.boundary_loops.len(), 1);
        assert_eq!(mesh.boundary_loops[0].len(), 3);
        assert!(!mesh.has_uvs());
    }

    #[test]
    fn quad_with_shared_edge() {
        let f = write_temp(
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n",
        );
        let mesh = load_obj(f.path()).unwrap();
        assert_eq!(mesh.triangle_count(), 2);
        assert_eq!(mesh.boundary_loops.len(), 1);
        assert_eq!(mesh.boundary_loops[0].len(), 4);
    }

    #[test]
    fn out_of_range_face_index() {
        let f = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
        let err = load_obj(f.path()).unwrap_err();
        assert!(matches!(err, MeshError::Parse { .. }), "{err}");
        assert!(err.to_string().contains("out of range"));
    }

    #[test]
    fn roundtrip_preserves_exact_values() {
        let f = write_temp(
            "v 0.1 0.2 0.30000000000000004\nv 1 0 0\nv 0 1 0\n\
             vt 0.1 0.9\nvt 1 0\nvt 0 1\n\
             f 1/1 2/2 3/3\n",
        );
        let mesh = load_obj(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        save_obj(&mesh, out.path()).unwrap();
        let back = load_obj(out.path()).unwrap();
        assert_eq!(mesh.vertices, back.vertices);
        assert_eq!(mesh.triangles, back.triangles);
        assert_eq!(mesh.uvs, back.uvs);
    }

    #[test]
    fn inconsistent_uv_seam_rejected() {
        let f = write_temp(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\n\
             vt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\n\
             f 1/1 2/2 3/3\nf 2/4 4/2 3/3\n",
        );
        let err = load_obj(f.path()).unwrap_err();
        assert!(err.to_string().contains("multiple vt"));
    }
}
