use crate::error::{invalid, Result};
use crate::math::{axis_angle_from_rotation, rotation_from_axis_angle, Mat3, Vec3};

/// Isotropic scale, rotation (axis-angle, radians) and translation (meters):
/// `p -> scale * R p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidSimTransform {
    pub scale: f64,
    pub rotation: Vec3,
    pub translation: Vec3,
}

impl Default for RigidSimTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidSimTransform {
    pub fn identity() -> Self {
        RigidSimTransform { scale: 1.0, rotation: Vec3::zeros(), translation: Vec3::zeros() }
    }

    pub fn new(scale: f64, rotation: Vec3, translation: Vec3) -> Result<Self> {
        let t = RigidSimTransform { scale, rotation, translation };
        t.validate()?;
        Ok(t)
    }

    pub fn from_matrix(scale: f64, rotation: &Mat3, translation: Vec3) -> Self {
        RigidSimTransform { scale, rotation: axis_angle_from_rotation(rotation), translation }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(invalid(alloc::format!("scale must be positive, got {}", self.scale)));
        }
        if !self.rotation.iter().chain(self.translation.iter()).all(|c| c.is_finite()) {
            return Err(invalid("non-finite rotation or translation"));
        }
        Ok(())
    }

    pub fn rotation_matrix(&self) -> Mat3 {
        rotation_from_axis_angle(&self.rotation)
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation_matrix() * p * self.scale + self.translation
    }

    pub fn apply_all(&self, points: &[Vec3]) -> alloc::vec::Vec<Vec3> {
        let r = self.rotation_matrix() * self.scale;
        points.iter().map(|p| r * p + self.translation).collect()
    }

    /// `self` after `other`: `self.apply(other.apply(p))`.
    pub fn compose(&self, other: &RigidSimTransform) -> RigidSimTransform {
        let r = self.rotation_matrix();
        RigidSimTransform::from_matrix(
            self.scale * other.scale,
            &(r * other.rotation_matrix()),
            r * other.translation * self.scale + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidSimTransform {
        let rt = self.rotation_matrix().transpose();
        RigidSimTransform::from_matrix(
            1.0 / self.scale,
            &rt,
            -(rt * self.translation) / self.scale,
        )
    }
}
