use alloc::string::ToString;

use super::mesh::PartLabeledMesh;
use crate::error::{Error, Result};
use crate::math::Vec3;

/// Area-weighted mean face normal of the faces lying entirely in `part`.
///
/// A part without such faces falls back to the mean of its vertex normals.
/// Returns a degenerate-normal error when the mean vanishes, for example for
/// a closed surface.
pub fn part_mean_normal(mesh: &PartLabeledMesh, part: u32) -> Result<Vec3> {
    let name = || mesh.part_name(part).map(|s| s.to_string()).unwrap_or_else(|| alloc::format!("#{part}"));
    let labels = mesh.part_of_vertex();
    let m = &mesh.mesh;
    let mut sum = Vec3::zeros();
    let mut magnitude = 0.0;
    let mut faces = 0usize;
    for (f, tri) in m.faces().iter().enumerate() {
        if tri.iter().all(|&v| labels[v as usize] == part) {
            let an = m.face_area_normal(f);
            sum += an;
            magnitude += an.norm();
            faces += 1;
        }
    }
    if faces == 0 {
        for (v, n) in m.normals().iter().enumerate() {
            if labels[v] == part {
                sum += n;
                magnitude += 1.0;
            }
        }
    }
    if magnitude == 0.0 {
        return Err(Error::DegenerateNormal(name()));
    }
    let len = sum.norm();
    if len <= 1e-9 * magnitude {
        return Err(Error::DegenerateNormal(name()));
    }
    Ok(sum / len)
}

#[cfg(test)]
mod tests {
    use super::super::mesh::fixtures::*;
    use super::super::mesh::TriangleMesh;
    use super::*;
    use crate::math::rotation_from_axis_angle;
    use alloc::collections::BTreeMap;
    use alloc::string::String;
    use alloc::vec;

    fn grid_patch(n: usize) -> TriangleMesh {
        let mut v = vec![];
        for i in 0..n {
            for j in 0..n {
                v.push(Vec3::new(i as f64 / (n - 1) as f64, 0.0, j as f64 / (n - 1) as f64));
            }
        }
        let mut f = vec![];
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let a = (i * n + j) as u32;
                let (b, c, d) = (a + 1, a + n as u32, a + n as u32 + 1);
                f.push([a, b, c]);
                f.push([b, d, c]);
            }
        }
        TriangleMesh::new(v, f).unwrap()
    }

    #[test]
    fn flat_seat_points_up() {
        let m = PartLabeledMesh::single_part(grid_patch(5), "seat").unwrap();
        let n = part_mean_normal(&m, 0).unwrap();
        assert!((n - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn closed_sphere_is_degenerate() {
        let m = PartLabeledMesh::single_part(uv_sphere(1.0, 8, 12), "ball").unwrap();
        assert_eq!(part_mean_normal(&m, 0), Err(Error::DegenerateNormal(String::from("ball"))));
    }

    #[test]
    fn tilted_patch_matches_plane_normal() {
        let r = rotation_from_axis_angle(&Vec3::new(10f64.to_radians(), 0.0, 0.0));
        let patch = grid_patch(6);
        let v = patch.vertices().iter().map(|p| r * p).collect();
        let m = PartLabeledMesh::single_part(patch.with_vertices(v).unwrap(), "back").unwrap();
        let n = part_mean_normal(&m, 0).unwrap();
        assert!((n - r * Vec3::y()).norm() < 1e-3);
    }

    #[test]
    fn part_without_faces_uses_vertex_normals() {
        let patch = grid_patch(3);
        let mut labels = vec![0u32; 9];
        labels[4] = 1;
        let names = BTreeMap::from([(0, String::from("a")), (1, String::from("b"))]);
        let m = PartLabeledMesh::new(patch, labels, names).unwrap();
        let n = part_mean_normal(&m, 1).unwrap();
        assert!((n - Vec3::y()).norm() < 1e-12);
    }
}
