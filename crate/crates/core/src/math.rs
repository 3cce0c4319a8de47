//! Small linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector2, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;
pub type Mat3 = Matrix3<f64>;

/// Cross-product matrix `[v]x` such that `[v]x * w == v.cross(w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation matrix of an axis-angle vector (Rodrigues).
pub fn rotation_from_axis_angle(v: &Vec3) -> Mat3 {
    Rotation3::from_scaled_axis(*v).into_inner()
}

/// Axis-angle vector of a rotation matrix. Stable for angles near pi.
pub fn axis_angle_from_rotation(r: &Mat3) -> Vec3 {
    let rot = Rotation3::from_matrix_unchecked(*r);
    UnitQuaternion::from_rotation_matrix(&rot).scaled_axis()
}

/// Partial derivatives of `rotation_from_axis_angle(v)` with respect to
/// each component of `v`.
pub fn rotation_derivatives(v: &Vec3) -> [Mat3; 3] {
    let theta2 = v.norm_squared();
    let basis = [Vec3::x(), Vec3::y(), Vec3::z()];
    if theta2 < 1e-16 {
        // Second-order expansion of exp([v]x) around zero.
        let sv = skew(v);
        return basis.map(|e| {
            let se = skew(&e);
            se + (se * sv + sv * se) * 0.5
        });
    }
    let r = rotation_from_axis_angle(v);
    let sv = skew(v);
    let i_minus_r = Mat3::identity() - r;
    core::array::from_fn(|i| {
        let w = v.cross(&(i_minus_r * basis[i]));
        (sv * v[i] + skew(&w)) * r / theta2
    })
}

/// Angle in radians between two rotations.
pub fn rotation_angle_between(a: &Mat3, b: &Mat3) -> f64 {
    let rel = a.transpose() * b;
    let c = ((rel.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    c.acos()
}

/// Cosine similarity of two vectors; zero when either is zero-length.
pub fn cosine(a: &Vec3, b: &Vec3) -> f64 {
    let d = a.norm() * b.norm();
    if d == 0.0 {
        0.0
    } else {
        a.dot(b) / d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        for v in [
            Vec3::new(0.3, -0.2, 0.9),
            Vec3::new(2.5, 0.4, -1.0),
            Vec3::new(1e-9, 0.0, 0.0),
            Vec3::zeros(),
        ] {
            let d = rotation_derivatives(&v);
            for i in 0..3 {
                let h = 1e-6;
                let mut vp = v;
                let mut vm = v;
                vp[i] += h;
                vm[i] -= h;
                let fd = (rotation_from_axis_angle(&vp) - rotation_from_axis_angle(&vm)) / (2.0 * h);
                assert!((fd - d[i]).norm() < 1e-7, "component {i} at {v:?}");
            }
        }
    }

    #[test]
    fn axis_angle_round_trip_near_pi() {
        let v = Vec3::new(0.0, 0.0, core::f64::consts::PI - 1e-7);
        let r = rotation_from_axis_angle(&v);
        let back = rotation_from_axis_angle(&axis_angle_from_rotation(&r));
        assert!((r - back).norm() < 1e-9);
    }
}
