use super::transform::RigidSimTransform;
use crate::error::{Error, Result};
use crate::math::{Mat3, Vec3};

/// Least-squares similarity transform mapping `src` onto `dst` (Umeyama).
pub fn procrustes_align(src: &[Vec3], dst: &[Vec3]) -> Result<RigidSimTransform> {
    if src.len() != dst.len() {
        return Err(Error::InvalidInput(alloc::format!(
            "point sets differ in size ({} vs {})",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 3 {
        return Err(Error::DegenerateConfiguration(alloc::format!(
            "need at least 3 correspondences, got {}",
            src.len()
        )));
    }
    let n = src.len() as f64;
    let mu_s = src.iter().sum::<Vec3>() / n;
    let mu_d = dst.iter().sum::<Vec3>() / n;
    let mut cov = Mat3::zeros();
    let mut cov_s = Mat3::zeros();
    let mut var_s = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let (s, d) = (s - mu_s, d - mu_d);
        cov += d * s.transpose();
        cov_s += s * s.transpose();
        var_s += s.norm_squared();
    }
    cov /= n;
    var_s /= n;
    let spread = cov_s.symmetric_eigenvalues();
    let mut ev = [spread[0], spread[1], spread[2]];
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::DegenerateConfiguration("source points are collinear".into()));
    }
    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    // nalgebra does not sort singular values; a reflection is undone on the
    // smallest one.
    let mut sign = Mat3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        let sv = &svd.singular_values;
        let smallest = (0..3).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
        sign[(smallest, smallest)] = -1.0;
    }
    let r = u * sign * v_t;
    let trace: f64 = (0..3).map(|i| svd.singular_values[i] * sign[(i, i)]).sum();
    let scale = trace / var_s;
    if !(scale > 0.0) {
        return Err(Error::DegenerateConfiguration("target points collapse to a point".into()));
    }
    Ok(RigidSimTransform::from_matrix(scale, &r, mu_d - r * mu_s * scale))
}
