//! Mesh representation and the geometric primitives shared by every stage:
//! signed distance grids, Chamfer distances, part normals, rigid alignment
//! and decimation.

mod bvh;
mod chamfer;
mod decimate;
mod kdtree;
mod mesh;
mod normals;
mod procrustes;
mod sdf;
pub mod shapes;
mod transform;

pub use bvh::TriangleBvh;
pub use chamfer::{
    nearest_indices, one_way_chamfer, one_way_chamfer_with, symmetric_chamfer, ChamferMode,
};
pub use decimate::{canonicalize_mesh, decimate, CanonicalScaling, DEFAULT_TARGET_VERTICES};
pub use kdtree::{KdTree, Neighbor};
pub use mesh::{Aabb, PartLabeledMesh, TriangleMesh};
pub use normals::part_mean_normal;
pub use procrustes::procrustes_align;
pub use sdf::{
    closest_point_on_triangle, compute_sdf_grid, compute_sdf_grid_padded, point_in_mesh,
    sample_sdf, winding_number, SdfGrid, SdfSample, DEFAULT_SDF_PADDING,
};
pub use shapes::PartMeshBuilder;
pub use transform::RigidSimTransform;
