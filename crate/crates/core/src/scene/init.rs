use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use super::silhouette::{evaluate_silhouette, linearize_silhouette, render_silhouette, MaskTarget};
use crate::body::Camera;
use crate::error::{invalid, Result};
use crate::geometry::{PartLabeledMesh, RigidSimTransform};
use crate::math::{axis_angle_from_rotation, rotation_from_axis_angle, Vec3};
use crate::optim::Adam;
use crate::priors::SizePrior;

pub const INIT_STEPS: usize = 50;
pub const INIT_LR: f64 = 1e-3;
/// Masks with fewer set pixels give an unreliable initialization.
pub const MIN_RELIABLE_MASK_PIXELS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub transform: RigidSimTransform,
    /// Pose before the silhouette refinement.
    pub initial: RigidSimTransform,
    /// Mask smaller than [`MIN_RELIABLE_MASK_PIXELS`].
    pub unreliable: bool,
    /// Silhouette IoU of the refined pose against the mask.
    pub iou: f64,
}

/// Places a canonical exemplar (y up, front +z) at the prior scale facing
/// the camera, at the depth where its projected bounding-box area matches
/// the mask's, behind the mask centroid; then refines rotation and
/// translation on the silhouette loss.
pub fn init_object_pose(
    exemplar: &PartLabeledMesh,
    mask: &MaskTarget,
    camera: &Camera,
    size: &SizePrior,
    steps: usize,
    lr: f64,
) -> Result<InitOutcome> {
    camera.validate()?;
    let m = mask.mask();
    let unreliable = m.count() < MIN_RELIABLE_MASK_PIXELS;
    let centroid = m.centroid().ok_or_else(|| invalid("object mask is empty"))?;
    let (lo, hi) = m.bounding_box().ok_or_else(|| invalid("object mask is empty"))?;
    let rotation = rotation_from_axis_angle(&Vec3::new(PI, 0.0, 0.0));
    let bounds = exemplar.mesh.bounding_box().ok_or_else(|| invalid("empty exemplar mesh"))?;
    let rotated: Vec<Vec3> = exemplar.mesh.vertices().iter().map(|v| rotation * (v - bounds.center())).collect();
    let ext = crate::geometry::Aabb::from_points(rotated.iter()).expect("non-empty").extent() * size.size;
    let px = hi - lo;
    let depth = (camera.fx * camera.fy * ext.x * ext.y / (px.x * px.y)).sqrt();
    if !(depth.is_finite() && depth > 0.0) {
        return Err(invalid("exemplar has no extent across the image plane"));
    }
    let translation = camera.back_project(&centroid, depth) - rotation * bounds.center() * size.size;
    let initial = RigidSimTransform::from_matrix(size.size, &rotation, translation);

    let faces = exemplar.mesh.faces();
    let local = exemplar.mesh.vertices();
    let mut transform = initial;
    let mut adam = Adam::new(6, lr);
    for _ in 0..steps {
        let points = transform.apply_all(local);
        let lin = linearize_silhouette(&points, faces, camera, mask)?;
        let mut gx = alloc::vec![Vec3::zeros(); points.len()];
        evaluate_silhouette(&points, camera, mask, &lin, Some(&mut gx));
        let mut grad = [0.0; 6];
        for (x, g) in points.iter().zip(&gx) {
            let dr = (x - transform.translation).cross(g);
            for a in 0..3 {
                grad[a] += dr[a];
                grad[3 + a] += g[a];
            }
        }
        let d = adam.update(&grad);
        let inc = rotation_from_axis_angle(&Vec3::new(d[0], d[1], d[2]));
        transform.rotation = axis_angle_from_rotation(&(inc * transform.rotation_matrix()));
        transform.translation += Vec3::new(d[3], d[4], d[5]);
    }
    let rendered = render_silhouette(&transform.apply_all(local), faces, camera)?;
    Ok(InitOutcome { transform, initial, unreliable, iou: rendered.iou(m) })
}
