use crate::{Point2, Point3, Vector3};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        vertex_count: usize,
    },
    #[error("uv count {uvs} does not match vertex count {vertices}")]
    UvCountMismatch { uvs: usize, vertices: usize },
    #[error("uv coordinate {index} = ({u}, {v}) lies outside [0,1]^2")]
    UvOutOfRange { index: usize, u: f64, v: f64 },
    #[error("boundary of mesh does not close into loops (stuck at vertex {vertex})")]
    OpenBoundary { vertex: u32 },
    #[error("mesh has no uv coordinates but the operation requires them")]
    MissingUvs,
    #[error("edge ({a}, {b}) has {count} incident triangles")]
    NonManifoldEdge { a: u32, b: u32, count: usize },
    #[error("field length {field} does not match vertex count {vertices}")]
    FieldLengthMismatch { field: usize, vertices: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Indexed triangle mesh with optional per-vertex UVs and extracted
/// boundary loops. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<Point3>,
    pub triangles: Vec<[u32; 3]>,
    pub uvs: Option<Vec<Point2>>,
    pub boundary_loops: Vec<Vec<u32>>,
}

impl TriMesh {
    /// Validates indices and UV range, then extracts boundary loops.
    /// Vertex order is preserved.
    pub fn new(
        vertices: Vec<Point3>,
        triangles: Vec<[u32; 3]>,
        uvs: Option<Vec<Point2>>,
    ) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= n {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        vertex_count: n,
                    });
                }
            }
        }
        if let Some(uvs) = &uvs {
            if uvs.len() != n {
                return Err(MeshError::UvCountMismatch {
                    uvs: uvs.len(),
                    vertices: n,
                });
            }
            const EPS: f64 = 1e-9;
            for (i, uv) in uvs.iter().enumerate() {
                if uv.x < -EPS || uv.x > 1.0 + EPS || uv.y < -EPS || uv.y > 1.0 + EPS {
                    return Err(MeshError::UvOutOfRange {
                        index: i,
                        u: uv.x,
                        v: uv.y,
                    });
                }
            }
        }
        let boundary_loops = extract_boundary_loops(&triangles)?;
        Ok(TriMesh {
            vertices,
            triangles,
            uvs,
            boundary_loops,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn has_uvs(&self) -> bool {
        self.uvs.is_some()
    }

    pub fn uvs(&self) -> Result<&[Point2], MeshError> {
        self.uvs.as_deref().ok_or(MeshError::MissingUvs)
    }

    pub fn triangle_positions(&self, t: usize) -> [Point3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_normal_area(&self, t: usize) -> (Vector3, f64) {
        let [a, b, c] = self.triangle_positions(t);
        let cross = (b - a).cross(&(c - a));
        let len = cross.norm();
        (cross, 0.5 * len)
    }

    /// Same topology, new vertex positions.
    pub fn with_positions(&self, positions: Vec<Point3>) -> Result<Self, MeshError> {
        if positions.len() != self.vertices.len() {
            return Err(MeshError::FieldLengthMismatch {
                field: positions.len(),
                vertices: self.vertices.len(),
            });
        }
        Ok(TriMesh {
            vertices: positions,
            triangles: self.triangles.clone(),
            uvs: self.uvs.clone(),
            boundary_loops: self.boundary_loops.clone(),
        })
    }

    pub fn same_topology(&self, other: &TriMesh) -> bool {
        self.vertices.len() == other.vertices.len() && self.triangles == other.triangles
    }

    /// Unique undirected edges, each as (min, max) vertex pair.
    pub fn unique_edges(&self) -> Vec<(u32, u32)> {
        let mut edges: Vec<(u32, u32)> = self
            .triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        edges
    }
}

/// Per-vertex attribute storage; length always equals the vertex count of
/// the mesh it was created for.
#[derive(Debug, Clone)]
pub struct VertexField<T> {
    values: Vec<T>,
}

impl<T> VertexField<T> {
    pub fn new(mesh: &TriMesh, values: Vec<T>) -> Result<Self, MeshError> {
        if values.len() != mesh.vertex_count() {
            return Err(MeshError::FieldLengthMismatch {
                field: values.len(),
                vertices: mesh.vertex_count(),
            });
        }
        Ok(VertexField { values })
    }

    pub fn from_values(values: Vec<T>) -> Self {
        VertexField { values }
    }

    pub fn constant(mesh: &TriMesh, value: T) -> Self
    where
        T: Clone,
    {
        VertexField {
            values: vec![value; mesh.vertex_count()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

impl<T> std::ops::Deref for VertexField<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.values
    }
}

impl<T> std::ops::DerefMut for VertexField<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
}

impl<T> std::ops::Index<u32> for VertexField<T> {
    type Output = T;
    fn index(&self, i: u32) -> &T {
        &self.values[i as usize]
    }
}

/// Walks directed boundary edges (edges whose reverse is absent) into
/// closed loops. Loops are canonicalized to start at their smallest vertex
/// and sorted by that vertex so extraction is deterministic.
fn extract_boundary_loops(triangles: &[[u32; 3]]) -> Result<Vec<Vec<u32>>, MeshError> {
    let mut directed: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for tri in triangles {
        for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
            *directed.entry((a, b)).or_insert(0) += 1;
        }
    }
    // A directed boundary edge occurs in its own direction and has no
    // opposite. Duplicated directed edges (non-manifold fans) are not
    // boundary candidates.
    let mut outgoing: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (&(a, b), &count) in &directed {
        if count == 1 && !directed.contains_key(&(b, a)) {
            outgoing.entry(a).or_default().push(b);
        }
    }
    for targets in outgoing.values_mut() {
        targets.sort_unstable();
    }

    let mut loops = Vec::new();
    while let Some((&start, _)) = outgoing.iter().find(|(_, v)| !v.is_empty()) {
        let mut cycle = vec![start];
        let mut current = start;
        loop {
            let next = {
                let targets = outgoing
                    .get_mut(&current)
                    .filter(|t| !t.is_empty())
                    .ok_or(MeshError::OpenBoundary { vertex: current })?;
                targets.remove(0)
            };
            if next == start {
                break;
            }
            cycle.push(next);
            current = next;
        }
        // canonical start: smallest vertex index
        let min_pos = cycle
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| v)
            .map(|(i, _)| i)
            .unwrap();
        cycle.rotate_left(min_pos);
        loops.push(cycle);
    }
    loops.sort_by_key(|l| l[0]);
    Ok(loops)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    #[test]
    fn single_triangle_has_one_loop() {
        let mesh = TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        assert_eq!(mesh.boundary_loops.len(), 1);
        assert_eq!(mesh.boundary_loops[0].len(), 3);
        assert_eq!(mesh.boundary_loops[0][0], 0);
    }

    #[test]
    fn quad_of_two_triangles_has_four_vertex_loop() {
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(1.0, 1.0, 0.0),
                p(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            None,
        )
        .unwrap();
        assert_eq!(mesh.boundary_loops.len(), 1);
        assert_eq!(mesh.boundary_loops[0].len(), 4);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = TriMesh::new(vec![p(0.0, 0.0, 0.0)], vec![[0, 0, 9]], None).unwrap_err();
        assert!(matches!(err, MeshError::IndexOutOfRange { index: 9, .. }));
    }

    #[test]
    fn uv_out_of_range_rejected() {
        let err = TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            Some(vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.5, 0.0),
                Point2::new(0.0, 1.0),
            ]),
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::UvOutOfRange { index: 1, .. }));
    }

    #[test]
    fn closed_tetrahedron_has_no_boundary() {
        let mesh = TriMesh::new(
            vec![
                p(0.0, 0.0, 0.0),
                p(1.0, 0.0, 0.0),
                p(0.0, 1.0, 0.0),
                p(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
            None,
        )
        .unwrap();
        assert!(mesh.boundary_loops.is_empty());
    }

    #[test]
    fn vertex_field_length_checked() {
        let mesh = TriMesh::new(
            vec![p(0.0, 0.0, 0.0), p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap();
        assert!(VertexField::new(&mesh, vec![1.0f64; 2]).is_err());
        assert!(VertexField::new(&mesh, vec![1.0f64; 3]).is_ok());
    }
}
