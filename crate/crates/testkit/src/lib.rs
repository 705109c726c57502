//! Procedural test geometry shared by the workspace test suites: cloth
//! grids, spheres, boxes, tubes and random triangle soups.

use drape_mesh::{Point2, Point3, TriMesh, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Regular (nx+1)×(ny+1) vertex grid in the z=0 plane with UVs spanning
/// [0,1]². Vertex (ix, iy) sits at (ix·spacing, iy·spacing, 0).
pub fn cloth_grid(nx: usize, ny: usize, spacing: f64) -> TriMesh {
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    for iy in 0..=ny {
        for ix in 0..=nx {
            vertices.push(Point3::new(ix as f64 * spacing, iy as f64 * spacing, 0.0));
            uvs.push(Point2::new(ix as f64 / nx as f64, iy as f64 / ny as f64));
        }
    }
    let w = (nx + 1) as u32;
    let mut triangles = Vec::new();
    for iy in 0..ny as u32 {
        for ix in 0..nx as u32 {
            let i = iy * w + ix;
            triangles.push([i, i + 1, i + w + 1]);
            triangles.push([i, i + w + 1, i + w]);
        }
    }
    TriMesh::new(vertices, triangles, Some(uvs)).unwrap()
}

pub fn grid_vertex(nx: usize, ix: usize, iy: usize) -> u32 {
    (iy * (nx + 1) + ix) as u32
}

/// Two-triangle unit quad in the z=0 plane with full-square UVs, scaled
/// by `size` and centered at the origin.
pub fn quad(size: f64) -> TriMesh {
    let h = size / 2.0;
    TriMesh::new(
        vec![
            Point3::new(-h, -h, 0.0),
            Point3::new(h, -h, 0.0),
            Point3::new(h, h, 0.0),
            Point3::new(-h, h, 0.0),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
        Some(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]),
    )
    .unwrap()
}

/// Icosphere without UVs; outward counter-clockwise winding.
pub fn icosphere(subdivisions: usize, radius: f64, center: Point3) -> TriMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|v| Vector3::new(v[0], v[1], v[2]).normalize())
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
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
    for _ in 0..subdivisions {
        let mut midpoints = std::collections::HashMap::new();
        let mut next = Vec::new();
        for tri in &triangles {
            let mut mids = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoints.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize] + vertices[b as usize]).normalize();
                    vertices.push(m);
                    (vertices.len() - 1) as u32
                });
            }
            next.push([tri[0], mids[0], mids[2]]);
            next.push([tri[1], mids[1], mids[0]]);
            next.push([tri[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        triangles = next;
    }
    let vertices = vertices
        .into_iter()
        .map(|v| center + v * radius)
        .collect();
    TriMesh::new(vertices, triangles, None).unwrap()
}

/// Axis-aligned closed box with outward winding.
pub fn closed_box(min: Point3, max: Point3) -> TriMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    let vertices = vec![
        v(false, false, false), // 0
        v(true, false, false),  // 1
        v(true, true, false),   // 2
        v(false, true, false),  // 3
        v(false, false, true),  // 4
        v(true, false, true),   // 5
        v(true, true, true),    // 6
        v(false, true, true),   // 7
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2], // z = min (down)
        [4, 5, 6],
        [4, 6, 7], // z = max (up)
        [0, 1, 5],
        [0, 5, 4], // y = min
        [2, 3, 7],
        [2, 7, 6], // y = max
        [0, 4, 7],
        [0, 7, 3], // x = min
        [1, 2, 6],
        [1, 6, 5], // x = max
    ];
    TriMesh::new(vertices, triangles, None).unwrap()
}

/// Open tube (welded seam, no UVs): `rings`+1 circles of `segments`
/// vertices from z=0 (radius_bottom) to z=height (radius_top). Exactly
/// two boundary loops.
pub fn tube(radius_bottom: f64, radius_top: f64, height: f64, segments: usize, rings: usize) -> TriMesh {
    let mut vertices = Vec::new();
    for j in 0..=rings {
        let t = j as f64 / rings as f64;
        let r = radius_bottom + (radius_top - radius_bottom) * t;
        let z = height * t;
        for s in 0..segments {
            let a = s as f64 / segments as f64 * std::f64::consts::TAU;
            vertices.push(Point3::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let mut triangles = Vec::new();
    for j in 0..rings as u32 {
        for s in 0..segments as u32 {
            let s1 = (s + 1) % segments as u32;
            let a = j * segments as u32 + s;
            let b = j * segments as u32 + s1;
            let c = (j + 1) * segments as u32 + s1;
            let d = (j + 1) * segments as u32 + s;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, triangles, None).unwrap()
}

/// Tube cut open along one vertical seam so it carries per-vertex UVs
/// (u around, v up). One boundary loop; used as a desk-scale skirt.
pub fn tube_slit(
    radius_bottom: f64,
    radius_top: f64,
    height: f64,
    segments: usize,
    rings: usize,
) -> TriMesh {
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..=rings {
        let t = j as f64 / rings as f64;
        let r = radius_bottom + (radius_top - radius_bottom) * t;
        let z = height * t;
        for s in 0..=segments {
            let a = s as f64 / segments as f64 * std::f64::consts::TAU;
            vertices.push(Point3::new(r * a.cos(), r * a.sin(), z));
            uvs.push(Point2::new(s as f64 / segments as f64, t));
        }
    }
    let w = (segments + 1) as u32;
    let mut triangles = Vec::new();
    for j in 0..rings as u32 {
        for s in 0..segments as u32 {
            let a = j * w + s;
            let b = j * w + s + 1;
            let c = (j + 1) * w + s + 1;
            let d = (j + 1) * w + s;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::new(vertices, triangles, Some(uvs)).unwrap()
}

/// Closed cylinder (capped) for use as a collision body.
pub fn capped_cylinder(radius: f64, z0: f64, z1: f64, segments: usize, rings: usize) -> TriMesh {
    let mut vertices = Vec::new();
    for j in 0..=rings {
        let z = z0 + (z1 - z0) * j as f64 / rings as f64;
        for s in 0..segments {
            let a = s as f64 / segments as f64 * std::f64::consts::TAU;
            vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, z0));
    let top_center = vertices.len() as u32;
    vertices.push(Point3::new(0.0, 0.0, z1));

    let mut triangles = Vec::new();
    let seg = segments as u32;
    for j in 0..rings as u32 {
        for s in 0..seg {
            let s1 = (s + 1) % seg;
            let a = j * seg + s;
            let b = j * seg + s1;
            let c = (j + 1) * seg + s1;
            let d = (j + 1) * seg + s;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    for s in 0..seg {
        let s1 = (s + 1) % seg;
        // bottom cap faces -z
        triangles.push([bottom_center, s1, s]);
        // top cap faces +z
        let base = rings as u32 * seg;
        triangles.push([top_center, base + s, base + s1]);
    }
    TriMesh::new(vertices, triangles, None).unwrap()
}

/// Uniformly random triangle soup inside [-extent, extent]³.
pub fn random_triangles(count: usize, seed: u64, extent: f64) -> (Vec<Point3>, Vec<[u32; 3]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count * 3);
    let mut tris = Vec::with_capacity(count);
    for i in 0..count {
        for _ in 0..3 {
            points.push(Point3::new(
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
                rng.random_range(-extent..extent),
            ));
        }
        tris.push([(i * 3) as u32, (i * 3 + 1) as u32, (i * 3 + 2) as u32]);
    }
    (points, tris)
}

/// Random unit vector.
pub fn random_unit(rng: &mut impl Rng) -> Vector3 {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Applies `f` to every vertex position, keeping topology and UVs.
pub fn map_positions(mesh: &TriMesh, f: impl Fn(&Point3) -> Point3) -> TriMesh {
    mesh.with_positions(mesh.vertices.iter().map(f).collect()).unwrap()
}
