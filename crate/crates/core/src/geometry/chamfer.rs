use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::kdtree::KdTree;
use crate::error::{invalid, Result};
use crate::math::Vec3;

/// Distance applied to each nearest-neighbor pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChamferMode {
    #[default]
    Unsquared,
    Squared,
}

fn check(src: &[Vec3], dst: &[Vec3]) -> Result<()> {
    if src.is_empty() || dst.is_empty() {
        return Err(invalid("Chamfer distance needs two non-empty point sets"));
    }
    Ok(())
}

/// Index of the nearest `dst` point for every `src` point; equal distances
/// resolve to the lowest index.
pub fn nearest_indices(src: &[Vec3], dst: &[Vec3]) -> Result<Vec<usize>> {
    check(src, dst)?;
    let tree = KdTree::from_points3(dst);
    Ok(src.iter().map(|p| tree.nearest3(p).expect("non-empty tree").index).collect())
}

/// Mean Euclidean distance from each `src` point to its nearest `dst` point.
pub fn one_way_chamfer(src: &[Vec3], dst: &[Vec3]) -> Result<f64> {
    one_way_chamfer_with(src, dst, ChamferMode::Unsquared)
}

pub fn one_way_chamfer_with(src: &[Vec3], dst: &[Vec3], mode: ChamferMode) -> Result<f64> {
    check(src, dst)?;
    let tree = KdTree::from_points3(dst);
    let total: f64 = src
        .iter()
        .map(|p| {
            let d2 = tree.nearest3(p).expect("non-empty tree").dist_sq;
            match mode {
                ChamferMode::Unsquared => d2.sqrt(),
                ChamferMode::Squared => d2,
            }
        })
        .sum();
    Ok(total / src.len() as f64)
}

/// Mean of the two one-way terms.
pub fn symmetric_chamfer(a: &[Vec3], b: &[Vec3], mode: ChamferMode) -> Result<f64> {
    Ok(0.5 * (one_way_chamfer_with(a, b, mode)? + one_way_chamfer_with(b, a, mode)?))
}
