use alloc::vec::Vec;
use nalgebra::Matrix3;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::math::{Vec2, Vec3};

/// Pinhole intrinsics in pixels, camera looking down +z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let c = Camera { fx, fy, cx, cy, width, height };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(invalid("focal lengths must be positive"));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(invalid("principal point must be finite"));
        }
        Ok(())
    }

    pub fn intrinsic_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Image diagonal in pixels.
    pub fn diagonal(&self) -> f64 {
        ((self.width * self.width + self.height * self.height) as f64).sqrt()
    }

    pub fn project(&self, p: &Vec3) -> Result<Vec2> {
        if !(p.z > 0.0) {
            return Err(Error::BehindCamera { index: 0, z: p.z });
        }
        Ok(Vec2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Rows of d(u, v)/d(x, y, z) at `p`.
    pub fn projection_jacobian(&self, p: &Vec3) -> [Vec3; 2] {
        let iz = 1.0 / p.z;
        [
            Vec3::new(self.fx * iz, 0.0, -self.fx * p.x * iz * iz),
            Vec3::new(0.0, self.fy * iz, -self.fy * p.y * iz * iz),
        ]
    }

    /// Point at depth `z` whose projection is `pixel`.
    pub fn back_project(&self, pixel: &Vec2, z: f64) -> Vec3 {
        Vec3::new((pixel.x - self.cx) / self.fx * z, (pixel.y - self.cy) / self.fy * z, z)
    }
}

/// `(fx x/z + cx, fy y/z + cy)` for every point.
pub fn project_perspective(points: &[Vec3], camera: &Camera) -> Result<Vec<Vec2>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| camera.project(p).map_err(|_| Error::BehindCamera { index: i, z: p.z }))
        .collect()
}
