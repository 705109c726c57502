use crate::{Point3, Vector3, DEGENERATE_AREA};
use std::collections::HashMap;

/// Ray hit against a triangle set: parameter along the ray, triangle id
/// and barycentric coordinates of the hit point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle: u32,
    pub bary: [f64; 3],
}

/// Closest surface point to a query, signed by the angle-weighted
/// pseudo-normal of the closest feature (positive outside).
#[derive(Debug, Clone, Copy)]
pub struct ClosestPoint {
    pub point: Point3,
    pub distance: f64,
    pub signed_distance: f64,
    pub triangle: u32,
    /// Pseudo-normal of the closest feature (face, edge or vertex), unit.
    pub normal: Vector3,
}

#[derive(Debug, Clone)]
struct Node {
    min: Vector3,
    max: Vector3,
    /// Leaf: index of first primitive in `prims`. Internal: index of the
    /// first child; the second child is at `+1`.
    first: u32,
    /// Number of primitives for leaves, 0 for internal nodes.
    count: u32,
}

/// Binned-SAH bounding volume hierarchy over a triangle soup, refittable
/// in place for deforming geometry with constant topology.
#[derive(Debug, Clone)]
pub struct TriBvh {
    points: Vec<Point3>,
    tris: Vec<[u32; 3]>,
    nodes: Vec<Node>,
    prims: Vec<u32>,
    degenerate: Vec<bool>,
    face_normals: Vec<Vector3>,
    vertex_pseudo: Vec<Vector3>,
    edge_pseudo: HashMap<(u32, u32), Vector3>,
}

const LEAF_SIZE: usize = 4;
const SAH_BINS: usize = 16;

impl TriBvh {
    pub fn build(points: Vec<Point3>, tris: Vec<[u32; 3]>) -> TriBvh {
        let mut bvh = TriBvh {
            prims: (0..tris.len() as u32).collect(),
            degenerate: vec![false; tris.len()],
            face_normals: vec![Vector3::zeros(); tris.len()],
            vertex_pseudo: vec![Vector3::zeros(); points.len()],
            edge_pseudo: HashMap::new(),
            nodes: Vec::new(),
            points,
            tris,
        };
        bvh.compute_normals();
        if !bvh.tris.is_empty() {
            let centroids: Vec<Vector3> = bvh
                .tris
                .iter()
                .map(|t| {
                    (bvh.points[t[0] as usize].coords
                        + bvh.points[t[1] as usize].coords
                        + bvh.points[t[2] as usize].coords)
                        / 3.0
                })
                .collect();
            bvh.nodes.push(Node {
                min: Vector3::zeros(),
                max: Vector3::zeros(),
                first: 0,
                count: bvh.tris.len() as u32,
            });
            bvh.split_node(0, &centroids);
            bvh.refit_boxes();
        }
        bvh
    }

    pub fn triangle_count(&self) -> usize {
        self.tris.len()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.tris
    }

    pub fn face_normal(&self, tri: u32) -> Vector3 {
        self.face_normals[tri as usize]
    }

    /// Update vertex positions (topology unchanged) and restore bounding
    /// boxes and pseudo-normals without rebuilding the tree.
    pub fn refit(&mut self, points: &[Point3]) {
        assert_eq!(points.len(), self.points.len(), "refit requires same topology");
        self.points.copy_from_slice(points);
        self.compute_normals();
        self.refit_boxes();
    }

    fn compute_normals(&mut self) {
        for v in self.vertex_pseudo.iter_mut() {
            *v = Vector3::zeros();
        }
        self.edge_pseudo.clear();
        for (t, tri) in self.tris.iter().enumerate() {
            let a = self.points[tri[0] as usize];
            let b = self.points[tri[1] as usize];
            let c = self.points[tri[2] as usize];
            let cross = (b - a).cross(&(c - a));
            let len = cross.norm();
            if 0.5 * len < DEGENERATE_AREA {
                self.degenerate[t] = true;
                self.face_normals[t] = Vector3::zeros();
                continue;
            }
            self.degenerate[t] = false;
            let n = cross / len;
            self.face_normals[t] = n;
            let pos = [a, b, c];
            for k in 0..3 {
                // angle-weighted vertex pseudo-normal
                let e0 = (pos[(k + 1) % 3] - pos[k]).normalize();
                let e1 = (pos[(k + 2) % 3] - pos[k]).normalize();
                let angle = e0.dot(&e1).clamp(-1.0, 1.0).acos();
                self.vertex_pseudo[tri[k] as usize] += n * angle;
                let (ea, eb) = (tri[k], tri[(k + 1) % 3]);
                let key = (ea.min(eb), ea.max(eb));
                *self.edge_pseudo.entry(key).or_insert_with(Vector3::zeros) += n;
            }
        }
        for v in self.vertex_pseudo.iter_mut() {
            let norm = v.norm();
            if norm > 1e-20 {
                *v /= norm;
            }
        }
        for v in self.edge_pseudo.values_mut() {
            let norm = v.norm();
            if norm > 1e-20 {
                *v /= norm;
            }
        }
    }

    fn primitive_bounds(&self, prim: u32) -> (Vector3, Vector3) {
        let tri = self.tris[prim as usize];
        let a = self.points[tri[0] as usize].coords;
        let b = self.points[tri[1] as usize].coords;
        let c = self.points[tri[2] as usize].coords;
        (a.inf(&b).inf(&c), a.sup(&b).sup(&c))
    }

    fn refit_boxes(&mut self) {
        for i in (0..self.nodes.len()).rev() {
            if self.nodes[i].count > 0 {
                let (first, count) = (self.nodes[i].first as usize, self.nodes[i].count as usize);
                let mut min = Vector3::repeat(f64::INFINITY);
                let mut max = Vector3::repeat(f64::NEG_INFINITY);
                for &p in &self.prims[first..first + count] {
                    let (pmin, pmax) = self.primitive_bounds(p);
                    min = min.inf(&pmin);
                    max = max.sup(&pmax);
                }
                self.nodes[i].min = min;
                self.nodes[i].max = max;
            } else {
                let l = self.nodes[i].first as usize;
                self.nodes[i].min = self.nodes[l].min.inf(&self.nodes[l + 1].min);
                self.nodes[i].max = self.nodes[l].max.sup(&self.nodes[l + 1].max);
            }
        }
    }

    fn split_node(&mut self, node: usize, centroids: &[Vector3]) {
        let first = self.nodes[node].first as usize;
        let count = self.nodes[node].count as usize;
        if count <= LEAF_SIZE {
            return;
        }
        let slice = &self.prims[first..first + count];
        let mut cmin = Vector3::repeat(f64::INFINITY);
        let mut cmax = Vector3::repeat(f64::NEG_INFINITY);
        for &p in slice {
            cmin = cmin.inf(&centroids[p as usize]);
            cmax = cmax.sup(&centroids[p as usize]);
        }
        let extent = cmax - cmin;
        let axis = extent.imax();
        if extent[axis] < 1e-15 {
            return; // all centroids coincide
        }

        // binned SAH along the widest centroid axis
        let mut bin_count = [0usize; SAH_BINS];
        let mut bin_min = [Vector3::repeat(f64::INFINITY); SAH_BINS];
        let mut bin_max = [Vector3::repeat(f64::NEG_INFINITY); SAH_BINS];
        let scale = SAH_BINS as f64 / extent[axis];
        let bin_of = |c: &Vector3| {
            (((c[axis] - cmin[axis]) * scale) as usize).min(SAH_BINS - 1)
        };
        for &p in slice {
            let b = bin_of(&centroids[p as usize]);
            bin_count[b] += 1;
            let (pmin, pmax) = self.primitive_bounds(p);
            bin_min[b] = bin_min[b].inf(&pmin);
            bin_max[b] = bin_max[b].sup(&pmax);
        }
        let area = |min: &Vector3, max: &Vector3| {
            if min.x > max.x {
                return 0.0;
            }
            let d = max - min;
            2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
        };
        let mut best_cost = f64::INFINITY;
        let mut best_split = usize::MAX;
        for split in 1..SAH_BINS {
            let (mut lmin, mut lmax) = (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY));
            let (mut rmin, mut rmax) = (lmin, lmax);
            let mut lcount = 0;
            let mut rcount = 0;
            for b in 0..split {
                if bin_count[b] > 0 {
                    lmin = lmin.inf(&bin_min[b]);
                    lmax = lmax.sup(&bin_max[b]);
                    lcount += bin_count[b];
                }
            }
            for b in split..SAH_BINS {
                if bin_count[b] > 0 {
                    rmin = rmin.inf(&bin_min[b]);
                    rmax = rmax.sup(&bin_max[b]);
                    rcount += bin_count[b];
                }
            }
            if lcount == 0 || rcount == 0 {
                continue;
            }
            let cost = area(&lmin, &lmax) * lcount as f64 + area(&rmin, &rmax) * rcount as f64;
            if cost < best_cost {
                best_cost = cost;
                best_split = split;
            }
        }
        if best_split == usize::MAX {
            return;
        }

        // stable partition keeps primitive order deterministic
        let slice = &mut self.prims[first..first + count];
        let mut left: Vec<u32> = Vec::with_capacity(count);
        let mut right: Vec<u32> = Vec::with_capacity(count);
        for &p in slice.iter() {
            if bin_of(&centroids[p as usize]) < best_split {
                left.push(p);
            } else {
                right.push(p);
            }
        }
        let lcount = left.len();
        slice[..lcount].copy_from_slice(&left);
        slice[lcount..].copy_from_slice(&right);

        let child = self.nodes.len() as u32;
        self.nodes.push(Node {
            min: Vector3::zeros(),
            max: Vector3::zeros(),
            first: first as u32,
            count: lcount as u32,
        });
        self.nodes.push(Node {
            min: Vector3::zeros(),
            max: Vector3::zeros(),
            first: (first + lcount) as u32,
            count: (count - lcount) as u32,
        });
        self.nodes[node].first = child;
        self.nodes[node].count = 0;
        self.split_node(child as usize, centroids);
        self.split_node(child as usize + 1, centroids);
    }

    /// Nearest triangle hit with `t` in `(t_min, t_max]`, or None.
    /// Uses a watertight-style test so rays crossing shared edges do not
    /// slip between triangles. Degenerate triangles never hit.
    pub fn ray_intersect(
        &self,
        origin: &Point3,
        dir: &Vector3,
        t_min: f64,
        t_max: f64,
    ) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let ray = WatertightRay::new(origin, dir);
        let inv = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut limit = t_max;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = &self.nodes[stack[sp] as usize];
            if !slab_hit(&node.min, &node.max, origin, &inv, limit) {
                continue;
            }
            if node.count > 0 {
                let first = node.first as usize;
                for &p in &self.prims[first..first + node.count as usize] {
                    if self.degenerate[p as usize] {
                        continue;
                    }
                    let tri = self.tris[p as usize];
                    if let Some((t, bary)) = ray.intersect(
                        &self.points[tri[0] as usize],
                        &self.points[tri[1] as usize],
                        &self.points[tri[2] as usize],
                    ) {
                        if t > t_min && t <= limit {
                            let replace = match &best {
                                None => true,
                                Some(b) => t < b.t || (t == b.t && p < b.triangle),
                            };
                            if replace {
                                best = Some(RayHit {
                                    t,
                                    triangle: p,
                                    bary,
                                });
                                limit = t;
                            }
                        }
                    }
                }
            } else {
                stack[sp] = node.first;
                stack[sp + 1] = node.first + 1;
                sp += 2;
            }
        }
        best
    }

    /// Closest point on the surface. Empty or fully degenerate input
    /// returns None.
    pub fn closest_point(&self, query: &Point3) -> Option<ClosestPoint> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(f64, u32, Point3, Feature)> = None;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp];
            let node = &self.nodes[idx as usize];
            if let Some((d2, _, _, _)) = &best {
                if box_distance_sq(&node.min, &node.max, query) > *d2 {
                    continue;
                }
            }
            if node.count > 0 {
                let first = node.first as usize;
                for &p in &self.prims[first..first + node.count as usize] {
                    if self.degenerate[p as usize] {
                        continue;
                    }
                    let tri = self.tris[p as usize];
                    let (point, feature) = closest_point_triangle(
                        query,
                        &self.points[tri[0] as usize],
                        &self.points[tri[1] as usize],
                        &self.points[tri[2] as usize],
                        tri,
                    );
                    let d2 = (query - point).norm_squared();
                    let replace = match &best {
                        None => true,
                        Some((bd2, bp, _, _)) => d2 < *bd2 || (d2 == *bd2 && p < *bp),
                    };
                    if replace {
                        best = Some((d2, p, point, feature));
                    }
                }
            } else {
                stack[sp] = node.first;
                stack[sp + 1] = node.first + 1;
                sp += 2;
            }
        }
        let (d2, tri, point, feature) = best?;
        let normal = match feature {
            Feature::Face => self.face_normals[tri as usize],
            Feature::Edge(a, b) => self.edge_pseudo[&(a.min(b), a.max(b))],
            Feature::Vertex(v) => self.vertex_pseudo[v as usize],
        };
        let distance = d2.sqrt();
        let to_query = query - point;
        let signed = if to_query.dot(&normal) >= 0.0 {
            distance
        } else {
            -distance
        };
        Some(ClosestPoint {
            point,
            distance,
            signed_distance: signed,
            triangle: tri,
            normal,
        })
    }
}

#[derive(Debug, Clone, Copy)]
enum Feature {
    Face,
    Edge(u32, u32),
    Vertex(u32),
}

fn slab_hit(min: &Vector3, max: &Vector3, origin: &Point3, inv: &Vector3, t_max: f64) -> bool {
    let mut t0 = 0.0f64;
    let mut t1 = t_max;
    for axis in 0..3 {
        let near = (min[axis] - origin[axis]) * inv[axis];
        let far = (max[axis] - origin[axis]) * inv[axis];
        let (near, far) = if near <= far { (near, far) } else { (far, near) };
        if near.is_nan() || far.is_nan() {
            continue; // axis-parallel ray exactly on slab plane
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return false;
        }
    }
    true
}

fn box_distance_sq(min: &Vector3, max: &Vector3, p: &Point3) -> f64 {
    let mut d2 = 0.0;
    for axis in 0..3 {
        let v = p[axis];
        let d = if v < min[axis] {
            min[axis] - v
        } else if v > max[axis] {
            v - max[axis]
        } else {
            0.0
        };
        d2 += d * d;
    }
    d2
}

/// Precomputed shear constants of the watertight ray-triangle test
/// (Woop et al. style), done in f64.
struct WatertightRay {
    origin: Point3,
    kx: usize,
    ky: usize,
    kz: usize,
    sx: f64,
    sy: f64,
    sz: f64,
}

impl WatertightRay {
    fn new(origin: &Point3, dir: &Vector3) -> Self {
        let abs = dir.abs();
        let kz = abs.imax();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        WatertightRay {
            origin: *origin,
            kx,
            ky,
            kz,
            sx: dir[kx] / dir[kz],
            sy: dir[ky] / dir[kz],
            sz: 1.0 / dir[kz],
        }
    }

    fn intersect(&self, va: &Point3, vb: &Point3, vc: &Point3) -> Option<(f64, [f64; 3])> {
        let a = va - self.origin;
        let b = vb - self.origin;
        let c = vc - self.origin;
        let ax = a[self.kx] - self.sx * a[self.kz];
        let ay = a[self.ky] - self.sy * a[self.kz];
        let bx = b[self.kx] - self.sx * b[self.kz];
        let by = b[self.ky] - self.sy * b[self.kz];
        let cx = c[self.kx] - self.sx * c[self.kz];
        let cy = c[self.ky] - self.sy * c[self.kz];
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let az = self.sz * a[self.kz];
        let bz = self.sz * b[self.kz];
        let cz = self.sz * c[self.kz];
        let t_scaled = u * az + v * bz + w * cz;
        let t = t_scaled / det;
        if !t.is_finite() {
            return None;
        }
        Some((t, [u / det, v / det, w / det]))
    }
}

/// Closest point on a triangle (Ericson, Real-Time Collision Detection)
/// plus the feature it lies on for pseudo-normal lookup.
fn closest_point_triangle(
    p: &Point3,
    a: &Point3,
    b: &Point3,
    c: &Point3,
    tri: [u32; 3],
) -> (Point3, Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, Feature::Vertex(tri[0]));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, Feature::Vertex(tri[1]));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, Feature::Edge(tri[0], tri[1]));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, Feature::Vertex(tri[2]));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, Feature::Edge(tri[0], tri[2]));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, Feature::Edge(tri[1], tri[2]));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, Feature::Face)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_hit() {
        let bvh = TriBvh::build(
            vec![
                Point3::new(-1.0, -1.0, 0.0),
                Point3::new(1.0, -1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        let hit = bvh
            .ray_intersect(
                &Point3::new(0.0, 0.0, 1.0),
                &Vector3::new(0.0, 0.0, -1.0),
                0.0,
                f64::INFINITY,
            )
            .unwrap();
        assert!((hit.t - 1.0).abs() < 1e-12);
        assert_eq!(hit.triangle, 0);
    }

    #[test]
    fn miss_returns_none() {
        let bvh = TriBvh::build(
            vec![
                Point3::new(-1.0, -1.0, 0.0),
                Point3::new(1.0, -1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        );
        assert!(bvh
            .ray_intersect(
                &Point3::new(0.0, 0.0, 1.0),
                &Vector3::new(0.0, 0.0, 1.0),
                0.0,
                f64::INFINITY
            )
            .is_none());
    }

    #[test]
    fn shared_edge_does_not_leak() {
        // quad split along the diagonal; rays through diagonal points must hit
        let bvh = TriBvh::build(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(1.0, 1.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        );
        for i in 0..50 {
            let s = i as f64 / 49.0;
            // points exactly on the diagonal (s, s)
            let hit = bvh.ray_intersect(
                &Point3::new(s, s, 1.0),
                &Vector3::new(0.0, 0.0, -1.0),
                0.0,
                10.0,
            );
            assert!(hit.is_some(), "leaked through diagonal at s={s}");
        }
    }

    #[test]
    fn closest_point_sign() {
        // unit right tetrahedron, outward orientation
        let bvh = TriBvh::build(
            vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
                Point3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
        );
        let outside = bvh.closest_point(&Point3::new(0.25, 0.25, -0.5)).unwrap();
        assert!(outside.signed_distance > 0.0);
        assert!((outside.distance - 0.5).abs() < 1e-12);
        let inside = bvh.closest_point(&Point3::new(0.2, 0.2, 0.2)).unwrap();
        assert!(inside.signed_distance < 0.0);
    }

    #[test]
    fn refit_follows_movement() {
        let points = vec![
            Point3::new(-1.0, -1.0, 0.0),
            Point3::new(1.0, -1.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
        ];
        let mut bvh = TriBvh::build(points.clone(), vec![[0, 1, 2]]);
        let moved: Vec<Point3> = points.iter().map(|p| p + Vector3::new(0.0, 0.0, 2.0)).collect();
        bvh.refit(&moved);
        let hit = bvh
            .ray_intersect(
                &Point3::new(0.0, 0.0, 5.0),
                &Vector3::new(0.0, 0.0, -1.0),
                0.0,
                f64::INFINITY,
            )
            .unwrap();
        assert!((hit.t - 3.0).abs() < 1e-12);
    }
}
