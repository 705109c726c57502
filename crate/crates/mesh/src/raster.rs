use crate::{Coverage, MeshError, Point2, Point3, TexelGrid, TriMesh, VertexField};
use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

/// Value types that can be barycentrically interpolated and averaged,
/// as required by UV rasterization and dilation.
pub trait Attribute: Clone + Send + Sync {
    fn bary(a: &Self, b: &Self, c: &Self, w: [f64; 3]) -> Self;
    fn mean(values: &[Self]) -> Self;
}

macro_rules! scalar_attribute {
    ($t:ty) => {
        impl Attribute for $t {
            fn bary(a: &Self, b: &Self, c: &Self, w: [f64; 3]) -> Self {
                (*a as f64 * w[0] + *b as f64 * w[1] + *c as f64 * w[2]) as $t
            }
            fn mean(values: &[Self]) -> Self {
                (values.iter().map(|v| *v as f64).sum::<f64>() / values.len() as f64) as $t
            }
        }
    };
}
scalar_attribute!(f32);
scalar_attribute!(f64);

macro_rules! vector_attribute {
    ($t:ty) => {
        impl Attribute for $t {
            fn bary(a: &Self, b: &Self, c: &Self, w: [f64; 3]) -> Self {
                let conv = |v: &$t| v.map(|x| x as f64);
                let r = conv(a) * w[0] + conv(b) * w[1] + conv(c) * w[2];
                r.map(|x| x as _)
            }
            fn mean(values: &[Self]) -> Self {
                let mut acc = values[0].map(|x| x as f64);
                for v in &values[1..] {
                    acc += v.map(|x| x as f64);
                }
                (acc / values.len() as f64).map(|x| x as _)
            }
        }
    };
}
vector_attribute!(Vector3<f64>);
vector_attribute!(Vector3<f32>);
vector_attribute!(Vector2<f64>);
vector_attribute!(Vector2<f32>);

impl Attribute for Point3 {
    fn bary(a: &Self, b: &Self, c: &Self, w: [f64; 3]) -> Self {
        Point3::from(a.coords * w[0] + b.coords * w[1] + c.coords * w[2])
    }
    fn mean(values: &[Self]) -> Self {
        let mut acc = values[0].coords;
        for v in &values[1..] {
            acc += v.coords;
        }
        Point3::from(acc / values.len() as f64)
    }
}

impl Attribute for Point2 {
    fn bary(a: &Self, b: &Self, c: &Self, w: [f64; 3]) -> Self {
        Point2::from(a.coords * w[0] + b.coords * w[1] + c.coords * w[2])
    }
    fn mean(values: &[Self]) -> Self {
        let mut acc = values[0].coords;
        for v in &values[1..] {
            acc += v.coords;
        }
        Point2::from(acc / values.len() as f64)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RasterOptions {
    pub resolution: (usize, usize),
    /// Island-margin dilation width in texels.
    pub dilation: usize,
}

impl Default for RasterOptions {
    fn default() -> Self {
        RasterOptions {
            resolution: (512, 512),
            dilation: 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RasterDiagnostics {
    /// Texels written by more than one strictly-interior triangle sample
    /// (overlapping UV islands; last writer wins).
    pub overlap_texels: usize,
}

struct TexelWrite<T> {
    x: usize,
    value: T,
    interior_overlap: bool,
}

/// Barycentric interpolation of a per-vertex field over UV triangles at
/// texel centers, followed by island-margin dilation. Rows rasterize in
/// parallel; within a row triangles apply in submission order, so
/// last-writer-wins is deterministic.
pub fn rasterize_uv_attribute<T: Attribute + Default>(
    mesh: &TriMesh,
    field: &VertexField<T>,
    options: RasterOptions,
) -> Result<(TexelGrid<T>, RasterDiagnostics), MeshError> {
    let uvs = mesh.uvs()?;
    if field.len() != mesh.vertex_count() {
        return Err(MeshError::FieldLengthMismatch {
            field: field.len(),
            vertices: mesh.vertex_count(),
        });
    }
    let (w, h) = options.resolution;
    assert!(w >= 1 && h >= 1, "resolution must be >= 1");

    // Bin triangles per texel row from their UV bounding boxes.
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); h];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let (a, b, c) = (
            uvs[tri[0] as usize],
            uvs[tri[1] as usize],
            uvs[tri[2] as usize],
        );
        if uv_area(&a, &b, &c).abs() < 1e-14 {
            continue;
        }
        let vmin = a.y.min(b.y).min(c.y);
        let vmax = a.y.max(b.y).max(c.y);
        let y0 = ((vmin * h as f64 - 0.5).floor().max(0.0)) as usize;
        let y1 = ((vmax * h as f64 - 0.5).ceil() as usize).min(h - 1);
        for row in rows.iter_mut().take(y1 + 1).skip(y0) {
            row.push(t as u32);
        }
    }

    let mut grid = TexelGrid::filled(w, h, T::default());
    let row_results: Vec<Vec<TexelWrite<T>>> = rows
        .par_iter()
        .enumerate()
        .map(|(y, tris)| {
            let v = (y as f64 + 0.5) / h as f64;
            let mut writes: Vec<TexelWrite<T>> = Vec::new();
            let mut written: Vec<Option<bool>> = vec![None; w]; // Some(strictly_interior)
            for &t in tris {
                let tri = mesh.triangles[t as usize];
                let (a, b, c) = (
                    uvs[tri[0] as usize],
                    uvs[tri[1] as usize],
                    uvs[tri[2] as usize],
                );
                let umin = a.x.min(b.x).min(c.x);
                let umax = a.x.max(b.x).max(c.x);
                let x0 = ((umin * w as f64 - 0.5).floor().max(0.0)) as usize;
                let x1 = ((umax * w as f64 - 0.5).ceil() as usize).min(w - 1);
                for x in x0..=x1 {
                    let u = (x as f64 + 0.5) / w as f64;
                    if let Some(bw) = barycentric(&a, &b, &c, u, v) {
                        let value = T::bary(
                            &field[tri[0]],
                            &field[tri[1]],
                            &field[tri[2]],
                            bw,
                        );
                        let strictly_interior = bw.iter().all(|&x| x > 1e-6);
                        let overlap =
                            strictly_interior && written[x] == Some(true);
                        written[x] = Some(strictly_interior || written[x] == Some(true));
                        writes.push(TexelWrite {
                            x,
                            value,
                            interior_overlap: overlap,
                        });
                    }
                }
            }
            writes
        })
        .collect();

    let mut diagnostics = RasterDiagnostics::default();
    for (y, writes) in row_results.into_iter().enumerate() {
        for wr in writes {
            if wr.interior_overlap {
                diagnostics.overlap_texels += 1;
            }
            grid.set(wr.x, y, wr.value, Coverage::Interior);
        }
    }

    dilate(&mut grid, options.dilation);
    Ok((grid, diagnostics))
}

/// Each pass gives every outside texel with a valued 8-neighbor the mean
/// of those neighbors. Passes apply simultaneously, so the result does
/// not depend on traversal order.
pub fn dilate<T: Attribute>(grid: &mut TexelGrid<T>, width: usize) {
    let (w, h) = (grid.width(), grid.height());
    for _ in 0..width {
        let mut updates = Vec::new();
        for y in 0..h {
            for x in 0..w {
                if grid.has_value(x, y) {
                    continue;
                }
                let mut neighbors = Vec::new();
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        if grid.has_value(nx as usize, ny as usize) {
                            neighbors.push(grid.get(nx as usize, ny as usize).clone());
                        }
                    }
                }
                if !neighbors.is_empty() {
                    updates.push((x, y, T::mean(&neighbors)));
                }
            }
        }
        if updates.is_empty() {
            break;
        }
        for (x, y, value) in updates {
            grid.set(x, y, value, Coverage::Dilated);
        }
    }
}

fn uv_area(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

/// Barycentric weights of (u, v) inside triangle (a, b, c), or None when
/// the point lies outside. Accepts either winding; points exactly on an
/// edge are inside.
fn barycentric(a: &Point2, b: &Point2, c: &Point2, u: f64, v: f64) -> Option<[f64; 3]> {
    let area = uv_area(a, b, c);
    if area.abs() < 1e-14 {
        return None;
    }
    let p = Point2::new(u, v);
    let w0 = uv_area(b, c, &p) / area;
    let w1 = uv_area(c, a, &p) / area;
    // exact partition of unity so constant fields interpolate exactly
    let w2 = 1.0 - w0 - w1;
    const EPS: f64 = 1e-12;
    if w0 >= -EPS && w1 >= -EPS && w2 >= -EPS {
        Some([w0, w1, w2])
    } else {
        None
    }
}

/// Bilinear sample of a grid at UV coordinates, weighting only valued
/// texels. Returns None when all four footprint texels are outside.
pub fn sample_bilinear<T: Attribute + Default>(grid: &TexelGrid<T>, u: f64, v: f64) -> Option<T>
where
    T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
{
    let (w, h) = (grid.width() as f64, grid.height() as f64);
    let x = (u * w - 0.5).clamp(0.0, w - 1.0);
    let y = (v * h - 0.5).clamp(0.0, h - 1.0);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(grid.width() - 1);
    let y1 = (y0 + 1).min(grid.height() - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let mut acc: Option<T> = None;
    let mut weight_sum = 0.0;
    for (xi, yi, wgt) in [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x1, y0, fx * (1.0 - fy)),
        (x0, y1, (1.0 - fx) * fy),
        (x1, y1, fx * fy),
    ] {
        if wgt > 0.0 && grid.has_value(xi, yi) {
            let term = grid.get(xi, yi).clone() * wgt;
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
            weight_sum += wgt;
        }
    }
    acc.map(|a| a * (1.0 / weight_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Point3;

    fn uv_square() -> TriMesh {
        TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
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

    #[test]
    fn constant_field_fills_covered_texels() {
        let mesh = uv_square();
        let field = VertexField::constant(&mesh, 3.5f64);
        let (grid, diag) = rasterize_uv_attribute(
            &mesh,
            &field,
            RasterOptions {
                resolution: (16, 16),
                dilation: 0,
            },
        )
        .unwrap();
        assert_eq!(diag.overlap_texels, 0);
        let covered: Vec<_> = grid.covered_indices().collect();
        assert_eq!(covered.len(), 256, "full-square UV coverage");
        for (x, y) in covered {
            assert_eq!(*grid.get(x, y), 3.5);
        }
    }

    #[test]
    fn linear_field_matches_u_coordinate() {
        let mesh = uv_square();
        let uvs = mesh.uvs().unwrap().to_vec();
        let field = VertexField::from_values(uvs.iter().map(|uv| uv.x).collect());
        let (grid, _) = rasterize_uv_attribute(
            &mesh,
            &field,
            RasterOptions {
                resolution: (32, 32),
                dilation: 0,
            },
        )
        .unwrap();
        let half_texel = 0.5 / 32.0;
        for (x, y) in grid.covered_indices() {
            let (u, _) = grid.texel_center(x, y);
            assert!(
                (grid.get(x, y) - u).abs() <= half_texel,
                "texel ({x},{y}) = {} vs u = {u}",
                grid.get(x, y)
            );
        }
    }

    #[test]
    fn vertex_index_field_hits_endpoints() {
        // Single UV triangle spanning the square corner-to-corner.
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
            Some(vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ]),
        )
        .unwrap();
        let field = VertexField::from_values(vec![0.0f64, 1.0, 2.0]);
        let res = 64;
        let (grid, _) = rasterize_uv_attribute(
            &mesh,
            &field,
            RasterOptions {
                resolution: (res, res),
                dilation: 0,
            },
        )
        .unwrap();
        // Nearest covered texel to each vertex uv should carry the vertex
        // value within interpolation tolerance (one texel of gradient).
        let grad_tol = 2.0 * 2.0 / res as f64; // max |∇field| * texel size, doubled
        let near = |u: f64, v: f64| {
            let x = ((u * res as f64 - 0.5).round() as i64).clamp(0, res as i64 - 1) as usize;
            let y = ((v * res as f64 - 0.5).round() as i64).clamp(0, res as i64 - 1) as usize;
            (x, y)
        };
        for (uv, expect) in [((0.0, 0.0), 0.0), ((1.0, 0.0), 1.0), ((0.0, 1.0), 2.0)] {
            let (x, y) = near(uv.0, uv.1);
            // walk inward until covered
            let (mut cx, mut cy) = (x, y);
            while !grid.is_covered(cx, cy) {
                cx = cx.saturating_sub(1);
                if !grid.is_covered(cx, cy) {
                    cy = cy.saturating_sub(1);
                }
            }
            assert!(
                (grid.get(cx, cy) - expect).abs() < grad_tol,
                "vertex value {expect} vs {}",
                grid.get(cx, cy)
            );
        }
    }

    #[test]
    fn dilation_fills_margin() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
            Some(vec![
                Point2::new(0.1, 0.1),
                Point2::new(0.5, 0.1),
                Point2::new(0.1, 0.5),
            ]),
        )
        .unwrap();
        let field = VertexField::constant(&mesh, 1.0f64);
        let (grid, _) = rasterize_uv_attribute(
            &mesh,
            &field,
            RasterOptions {
                resolution: (32, 32),
                dilation: 2,
            },
        )
        .unwrap();
        let dilated = grid
            .valued_indices()
            .filter(|&(x, y)| grid.coverage_at(x, y) == Coverage::Dilated)
            .count();
        assert!(dilated > 0, "margin texels were dilated");
        for (x, y) in grid.valued_indices() {
            assert_eq!(*grid.get(x, y), 1.0);
        }
    }

    #[test]
    fn bilinear_sampling_interpolates() {
        let mut grid = TexelGrid::filled(2, 1, 0.0f64);
        grid.set(0, 0, 1.0, Coverage::Interior);
        grid.set(1, 0, 3.0, Coverage::Interior);
        let mid = sample_bilinear(&grid, 0.5, 0.5).unwrap();
        assert!((mid - 2.0).abs() < 1e-12);
        assert!(sample_bilinear(&grid, 0.25, 0.5).unwrap() < mid);
    }
}
