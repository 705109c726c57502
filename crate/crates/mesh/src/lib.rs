//! Triangle mesh representation, file I/O, differential quantities and
//! UV-space attribute rasterization shared by the simulation, baking,
//! appearance and registration crates.

pub mod bvh;
pub mod grid;
pub mod gridio;
pub mod mesh;
pub mod normals;
pub mod obj;
pub mod ply;
pub mod raster;

pub use bvh::{ClosestPoint, RayHit, TriBvh};
pub use grid::{Coverage, TexelGrid};
pub use mesh::{MeshError, TriMesh, VertexField};
pub use normals::{tbn_frame, tbn_frames, compute_vertex_normals, TbnFrames, VertexNormals};
pub use raster::{rasterize_uv_attribute, Attribute, RasterDiagnostics, RasterOptions};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;
pub type Point2 = nalgebra::Point2<f64>;
pub type Vector2 = nalgebra::Vector2<f64>;
pub type Rgb = nalgebra::Vector3<f32>;

/// Triangles with area below this are treated as degenerate and excluded
/// from normal accumulation and rasterization.
pub const DEGENERATE_AREA: f64 = 1e-12;
