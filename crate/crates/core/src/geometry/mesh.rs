use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::RigidSimTransform;
use crate::error::{invalid, Result};
use crate::math::Vec3;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut b = Aabb { min: first, max: first };
        for p in it {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        Some(b)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn expanded(&self, pad: f64) -> Self {
        let d = Vec3::repeat(pad);
        Aabb { min: self.min - d, max: self.max + d }
    }

    pub fn union(&self, other: &Aabb) -> Self {
        Aabb { min: self.min.inf(&other.min), max: self.max.sup(&other.max) }
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }
}

/// Triangle mesh with derived unit vertex normals. Units are meters.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    normals: Vec<Vec3>,
}

impl TriangleMesh {
    /// Builds a mesh, checking that every face index is in range.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len();
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i as usize >= n)) {
            return Err(invalid(alloc::format!("face {f:?} indexes past {n} vertices")));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(invalid("non-finite vertex coordinate"));
        }
        let normals = vertex_normals(&vertices, &faces);
        Ok(TriangleMesh { vertices, faces, normals })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    pub fn triangle(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Face normal scaled by twice the face area.
    pub fn face_area_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.triangle(f);
        (b - a).cross(&(c - a))
    }

    /// Copy with faces of zero area (or repeated indices) removed.
    pub fn without_degenerate_faces(&self) -> TriangleMesh {
        let scale = self.bounding_box().map(|b| b.diagonal()).unwrap_or(1.0).max(1e-300);
        let eps = 1e-14 * scale * scale;
        let faces: Vec<_> = (0..self.faces.len())
            .filter(|&f| {
                let [a, b, c] = self.faces[f];
                a != b && b != c && a != c && self.face_area_normal(f).norm() > eps
            })
            .map(|f| self.faces[f])
            .collect();
        let normals = vertex_normals(&self.vertices, &faces);
        TriangleMesh { vertices: self.vertices.clone(), faces, normals }
    }

    /// Applies a similarity transform to every vertex.
    pub fn transformed(&self, t: &RigidSimTransform) -> TriangleMesh {
        let r = t.rotation_matrix();
        let vertices = self.vertices.iter().map(|v| r * v * t.scale + t.translation).collect();
        let normals = self.normals.iter().map(|n| r * n).collect();
        TriangleMesh { vertices, faces: self.faces.clone(), normals }
    }

    /// Replaces vertex positions, keeping connectivity.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<TriangleMesh> {
        if vertices.len() != self.vertices.len() {
            return Err(invalid("vertex count changed"));
        }
        TriangleMesh::new(vertices, self.faces.clone())
    }

    /// True when every directed edge is matched by exactly one opposite
    /// edge, i.e. the surface is closed and consistently oriented.
    pub fn is_watertight(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(self.faces.len() * 3);
        for f in &self.faces {
            for k in 0..3 {
                edges.push((f[k], f[(k + 1) % 3]));
            }
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            return false;
        }
        edges.iter().all(|&(a, b)| edges.binary_search(&(b, a)).is_ok())
    }
}

fn vertex_normals(vertices: &[Vec3], faces: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = alloc::vec![Vec3::zeros(); vertices.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| vertices[i as usize]);
        let n = (b - a).cross(&(c - a));
        for &i in f {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

/// Triangle mesh whose vertices each carry a semantic part label.
#[derive(Debug, Clone, PartialEq)]
pub struct PartLabeledMesh {
    pub mesh: TriangleMesh,
    part_of_vertex: Vec<u32>,
    part_names: BTreeMap<u32, String>,
}

impl PartLabeledMesh {
    /// Validates that every vertex is labeled, every label is named and
    /// every named part owns at least one vertex.
    pub fn new(
        mesh: TriangleMesh,
        part_of_vertex: Vec<u32>,
        part_names: BTreeMap<u32, String>,
    ) -> Result<Self> {
        if part_of_vertex.len() != mesh.vertices().len() {
            return Err(invalid(alloc::format!(
                "{} part labels for {} vertices",
                part_of_vertex.len(),
                mesh.vertices().len()
            )));
        }
        if let Some(l) = part_of_vertex.iter().find(|l| !part_names.contains_key(l)) {
            return Err(invalid(alloc::format!("part label {l} has no name")));
        }
        for (id, name) in &part_names {
            if !part_of_vertex.contains(id) {
                return Err(invalid(alloc::format!("part `{name}` ({id}) has no vertices")));
            }
        }
        Ok(PartLabeledMesh { mesh, part_of_vertex, part_names })
    }

    /// Mesh with a single part covering every vertex.
    pub fn single_part(mesh: TriangleMesh, name: &str) -> Result<Self> {
        let n = mesh.vertices().len();
        let mut names = BTreeMap::new();
        names.insert(0, String::from(name));
        PartLabeledMesh::new(mesh, alloc::vec![0; n], names)
    }

    pub fn part_of_vertex(&self) -> &[u32] {
        &self.part_of_vertex
    }

    pub fn part_names(&self) -> &BTreeMap<u32, String> {
        &self.part_names
    }

    pub fn part_id(&self, name: &str) -> Option<u32> {
        self.part_names.iter().find(|(_, n)| n.as_str() == name).map(|(&id, _)| id)
    }

    pub fn part_name(&self, id: u32) -> Option<&str> {
        self.part_names.get(&id).map(String::as_str)
    }

    /// Sorted, de-duplicated part names.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut v: Vec<String> = self.part_names.values().cloned().collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn vertex_indices_of(&self, id: u32) -> Vec<usize> {
        (0..self.part_of_vertex.len()).filter(|&i| self.part_of_vertex[i] == id).collect()
    }

    /// Same labels on a transformed copy of the mesh.
    pub fn transformed(&self, t: &RigidSimTransform) -> PartLabeledMesh {
        PartLabeledMesh {
            mesh: self.mesh.transformed(t),
            part_of_vertex: self.part_of_vertex.clone(),
            part_names: self.part_names.clone(),
        }
    }

    pub fn with_mesh(&self, mesh: TriangleMesh) -> Result<PartLabeledMesh> {
        PartLabeledMesh::new(mesh, self.part_of_vertex.clone(), self.part_names.clone())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Axis-aligned box centered at `c` with half extents `h`, outward faces.
    pub fn box_mesh(c: Vec3, h: Vec3) -> TriangleMesh {
        let mut v = Vec::new();
        for i in 0..8 {
            let s = Vec3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            v.push(c + h.component_mul(&s));
        }
        let faces = alloc::vec![
            [0, 2, 1], [1, 2, 3], // z-
            [4, 5, 6], [5, 7, 6], // z+
            [0, 1, 4], [1, 5, 4], // y-
            [2, 6, 3], [3, 6, 7], // y+
            [0, 4, 2], [2, 4, 6], // x-
            [1, 3, 5], [3, 7, 5], // x+
        ];
        TriangleMesh::new(v, faces).unwrap()
    }

    pub fn unit_cube() -> TriangleMesh {
        box_mesh(Vec3::zeros(), Vec3::repeat(0.5))
    }

    /// UV sphere of radius `r`, closed and outward oriented.
    pub fn uv_sphere(r: f64, stacks: usize, slices: usize) -> TriangleMesh {
        use core::f64::consts::PI;
        let mut v = alloc::vec![Vec3::new(0.0, 0.0, r)];
        for i in 1..stacks {
            let phi = PI * i as f64 / stacks as f64;
            for j in 0..slices {
                let th = 2.0 * PI * j as f64 / slices as f64;
                v.push(Vec3::new(r * phi.sin() * th.cos(), r * phi.sin() * th.sin(), r * phi.cos()));
            }
        }
        v.push(Vec3::new(0.0, 0.0, -r));
        let south = (v.len() - 1) as u32;
        let ring = |i: usize, j: usize| (1 + (i - 1) * slices + j % slices) as u32;
        let mut f = Vec::new();
        for j in 0..slices {
            f.push([0, ring(1, j), ring(1, j + 1)]);
        }
        for i in 1..stacks - 1 {
            for j in 0..slices {
                let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
                f.push([a, c, d]);
                f.push([a, d, b]);
            }
        }
        for j in 0..slices {
            f.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
        }
        TriangleMesh::new(v, f).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn rejects_out_of_range_faces() {
        let err = TriangleMesh::new(alloc::vec![Vec3::zeros(); 3], alloc::vec![[0, 1, 3]]);
        assert!(err.is_err());
    }

    #[test]
    fn cube_is_watertight_with_unit_normals() {
        let m = unit_cube();
        assert!(m.is_watertight());
        for n in m.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-12);
        }
        let s = uv_sphere(1.0, 8, 12);
        assert!(s.is_watertight());
        // Outward orientation: normal points away from the center.
        for (v, n) in s.vertices().iter().zip(s.normals()) {
            assert!(v.dot(n) > 0.0);
        }
    }

    #[test]
    fn part_invariants_are_checked() {
        let m = unit_cube();
        let mut names = BTreeMap::new();
        names.insert(0, String::from("a"));
        names.insert(1, String::from("b"));
        assert!(PartLabeledMesh::new(m.clone(), alloc::vec![0; 8], names.clone()).is_err());
        let mut labels = alloc::vec![0; 8];
        labels[7] = 1;
        let pm = PartLabeledMesh::new(m.clone(), labels.clone(), names.clone()).unwrap();
        assert_eq!(pm.part_id("b"), Some(1));
        labels[3] = 2;
        assert!(PartLabeledMesh::new(m, labels, names).is_err());
    }

    #[test]
    fn degenerate_faces_are_dropped() {
        let v = alloc::vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::x() * 2.0];
        let m = TriangleMesh::new(v, alloc::vec![[0, 1, 2], [0, 1, 3], [1, 1, 2]]).unwrap();
        assert_eq!(m.without_degenerate_faces().faces(), &[[0, 1, 2]]);
    }
}
