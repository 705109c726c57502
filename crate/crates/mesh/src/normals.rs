use crate::{MeshError, TriMesh, Vector3, VertexField, DEGENERATE_AREA};
use nalgebra::Matrix3;

/// Unit vertex normals plus the vertices that had to fall back to the
/// default because every incident triangle was degenerate (or absent).
#[derive(Debug, Clone)]
pub struct VertexNormals {
    pub field: VertexField<Vector3>,
    pub degenerate: Vec<u32>,
}

/// Area-weighted average of incident triangle normals. Triangles with
/// area below `DEGENERATE_AREA` do not contribute; vertices left without
/// any contribution get the flagged default (0, 0, 1).
pub fn compute_vertex_normals(mesh: &TriMesh) -> VertexNormals {
    let mut acc = vec![Vector3::zeros(); mesh.vertex_count()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (cross, area) = mesh.triangle_normal_area(t);
        if area < DEGENERATE_AREA {
            continue;
        }
        // cross = 2 * area * unit normal, so summing it is area weighting
        for &v in tri {
            acc[v as usize] += cross;
        }
    }
    let mut degenerate = Vec::new();
    let normals = acc
        .into_iter()
        .enumerate()
        .map(|(v, n)| {
            let len = n.norm();
            if len < 1e-20 {
                degenerate.push(v as u32);
                Vector3::new(0.0, 0.0, 1.0)
            } else {
                n / len
            }
        })
        .collect();
    VertexNormals {
        field: VertexField::from_values(normals),
        degenerate,
    }
}

/// Orthonormal right-handed tangent/binormal/normal frames, one per
/// vertex, stored as matrix columns [t | b | n].
#[derive(Debug, Clone)]
pub struct TbnFrames {
    pub frames: Vec<Matrix3<f64>>,
    /// Vertices whose tangent came from the arbitrary stable fallback
    /// because the UV parameterization was degenerate there.
    pub fallback: Vec<u32>,
}

/// Tangents follow the UV u-direction projected into the tangent plane;
/// accumulation is area-weighted so frames are rotation-equivariant.
pub fn tbn_frames(mesh: &TriMesh, normals: &VertexField<Vector3>) -> Result<TbnFrames, MeshError> {
    let uvs = mesh.uvs()?;
    let mut tangent_acc = vec![Vector3::zeros(); mesh.vertex_count()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [p0, p1, p2] = mesh.triangle_positions(t);
        let (_, area) = mesh.triangle_normal_area(t);
        if area < DEGENERATE_AREA {
            continue;
        }
        let w0 = uvs[tri[0] as usize];
        let w1 = uvs[tri[1] as usize];
        let w2 = uvs[tri[2] as usize];
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let du1 = w1.x - w0.x;
        let dv1 = w1.y - w0.y;
        let du2 = w2.x - w0.x;
        let dv2 = w2.y - w0.y;
        let det = du1 * dv2 - du2 * dv1;
        if det.abs() < 1e-15 {
            continue;
        }
        let tangent = (e1 * dv2 - e2 * dv1) / det;
        for &v in tri {
            tangent_acc[v as usize] += tangent * area;
        }
    }

    let mut fallback = Vec::new();
    let frames = (0..mesh.vertex_count())
        .map(|v| {
            let n = normals[v as u32];
            let projected = tangent_acc[v] - n * n.dot(&tangent_acc[v]);
            let t = if projected.norm() > 1e-12 {
                projected.normalize()
            } else {
                fallback.push(v as u32);
                stable_perpendicular(&n)
            };
            let b = n.cross(&t);
            Matrix3::from_columns(&[t, b, n])
        })
        .collect();
    Ok(TbnFrames { frames, fallback })
}

/// Frame for a single vertex; see `tbn_frames` for the full-mesh variant.
pub fn tbn_frame(
    mesh: &TriMesh,
    normals: &VertexField<Vector3>,
    vertex: u32,
) -> Result<Matrix3<f64>, MeshError> {
    Ok(tbn_frames(mesh, normals)?.frames[vertex as usize])
}

/// Unit vector perpendicular to n, chosen from the axis least aligned
/// with n so the choice is stable under small perturbations.
fn stable_perpendicular(n: &Vector3) -> Vector3 {
    let abs = n.abs();
    let axis = if abs.x <= abs.y && abs.x <= abs.z {
        Vector3::x()
    } else if abs.y <= abs.z {
        Vector3::y()
    } else {
        Vector3::z()
    };
    (axis - n * n.dot(&axis)).normalize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Point2, Point3};
    use approx::assert_relative_eq;

    fn planar_grid(n: usize) -> TriMesh {
        let mut vertices = Vec::new();
        let mut uvs = Vec::new();
        for y in 0..=n {
            for x in 0..=n {
                let (u, v) = (x as f64 / n as f64, y as f64 / n as f64);
                vertices.push(Point3::new(u, v, 0.0));
                uvs.push(Point2::new(u, v));
            }
        }
        let mut triangles = Vec::new();
        let w = n + 1;
        for y in 0..n {
            for x in 0..n {
                let i = (y * w + x) as u32;
                triangles.push([i, i + 1, i + w as u32 + 1]);
                triangles.push([i, i + w as u32 + 1, i + w as u32]);
            }
        }
        TriMesh::new(vertices, triangles, Some(uvs)).unwrap()
    }

    #[test]
    fn flat_plane_normals_point_up() {
        let mesh = planar_grid(4);
        let normals = compute_vertex_normals(&mesh);
        assert!(normals.degenerate.is_empty());
        for n in normals.field.iter() {
            assert_relative_eq!(*n, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_triangle_flagged() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let normals = compute_vertex_normals(&mesh);
        assert_eq!(normals.degenerate, vec![0, 1, 2]);
        assert_eq!(normals.field[0], Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn identity_parameterization_gives_world_axes() {
        let mesh = planar_grid(3);
        let normals = compute_vertex_normals(&mesh);
        let tbn = tbn_frames(&mesh, &normals.field).unwrap();
        assert!(tbn.fallback.is_empty());
        for f in &tbn.frames {
            assert_relative_eq!(*f, Matrix3::identity(), epsilon = 1e-9);
        }
    }

    #[test]
    fn frames_are_orthonormal_and_right_handed() {
        let mesh = planar_grid(3);
        let normals = compute_vertex_normals(&mesh);
        let tbn = tbn_frames(&mesh, &normals.field).unwrap();
        for f in &tbn.frames {
            assert_relative_eq!(f.transpose() * f, Matrix3::identity(), epsilon = 1e-9);
            assert_relative_eq!(f.determinant(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn missing_uvs_refused() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        let normals = compute_vertex_normals(&mesh);
        assert!(matches!(
            tbn_frames(&mesh, &normals.field),
            Err(MeshError::MissingUvs)
        ));
    }
}
