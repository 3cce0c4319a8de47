//! Closed primitive meshes and a builder that assembles labeled parts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use super::mesh::{PartLabeledMesh, TriangleMesh};
use crate::error::Result;
use crate::math::Vec3;

/// Surface of an axis-aligned box subdivided on a regular lattice. Returns
/// the vertices, outward faces and the lattice coordinate of each vertex.
pub fn lattice_box(min: Vec3, max: Vec3, divisions: [usize; 3]) -> (Vec<Vec3>, Vec<[u32; 3]>, Vec<[usize; 3]>) {
    let n = divisions.map(|d| d.max(1));
    let mut index = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut lattice = Vec::new();
    let mut id = |c: [usize; 3], vertices: &mut Vec<Vec3>, lattice: &mut Vec<[usize; 3]>| -> u32 {
        *index.entry(c).or_insert_with(|| {
            let p = Vec3::from_fn(|a, _| min[a] + (max[a] - min[a]) * c[a] as f64 / n[a] as f64);
            vertices.push(p);
            lattice.push(c);
            (vertices.len() - 1) as u32
        })
    };
    let mut faces = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n[axis]] {
            for i in 0..n[u] {
                for j in 0..n[v] {
                    let corner = |di: usize, dj: usize| {
                        let mut c = [0usize; 3];
                        c[axis] = side;
                        c[u] = i + di;
                        c[v] = j + dj;
                        c
                    };
                    let a = id(corner(0, 0), &mut vertices, &mut lattice);
                    let b = id(corner(1, 0), &mut vertices, &mut lattice);
                    let c = id(corner(1, 1), &mut vertices, &mut lattice);
                    let d = id(corner(0, 1), &mut vertices, &mut lattice);
                    if side == 0 {
                        faces.push([a, c, b]);
                        faces.push([a, d, c]);
                    } else {
                        faces.push([a, b, c]);
                        faces.push([a, c, d]);
                    }
                }
            }
        }
    }
    (vertices, faces, lattice)
}

fn orthonormal_basis(d: &Vec3) -> (Vec3, Vec3) {
    let helper = if d.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = d.cross(&helper).normalize();
    (u, d.cross(&u))
}

/// Closed ring-and-pole surface: each ring is `(center, radius)` around
/// `axis`, between the two poles.
fn ring_surface(bottom: Vec3, top: Vec3, rings: &[(Vec3, f64)], axis: &Vec3, slices: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let (bu, bv) = orthonormal_basis(axis);
    let mut v = alloc::vec![bottom];
    for (c, r) in rings {
        for s in 0..slices {
            let t = 2.0 * PI * s as f64 / slices as f64;
            v.push(c + (bu * t.cos() + bv * t.sin()) * *r);
        }
    }
    v.push(top);
    let top_id = (v.len() - 1) as u32;
    let ring = |i: usize, j: usize| (1 + i * slices + j % slices) as u32;
    let mut f = Vec::new();
    for j in 0..slices {
        f.push([0, ring(0, j + 1), ring(0, j)]);
    }
    for i in 0..rings.len() - 1 {
        for j in 0..slices {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            f.push([a, b, d]);
            f.push([a, d, c]);
        }
    }
    for j in 0..slices {
        f.push([top_id, ring(rings.len() - 1, j), ring(rings.len() - 1, j + 1)]);
    }
    orient_outward(&v, &mut f);
    (v, f)
}

/// Flips every face when the enclosed signed volume is negative.
pub fn orient_outward(vertices: &[Vec3], faces: &mut [[u32; 3]]) {
    let vol: f64 = faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            a.dot(&b.cross(&c))
        })
        .sum();
    if vol < 0.0 {
        for f in faces.iter_mut() {
            f.swap(1, 2);
        }
    }
}

/// Capsule around the segment `p0 -> p1`.
pub fn capsule(p0: Vec3, p1: Vec3, radius: f64, slices: usize, cap_rings: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let seg = p1 - p0;
    let d = if seg.norm() > 1e-12 { seg.normalize() } else { Vec3::y() };
    let mut rings = Vec::new();
    for k in 1..=cap_rings {
        let a = 0.5 * PI * k as f64 / cap_rings as f64;
        rings.push((p0 - d * (radius * a.cos()), radius * a.sin()));
    }
    for k in (1..=cap_rings).rev() {
        let a = 0.5 * PI * k as f64 / cap_rings as f64;
        rings.push((p1 + d * (radius * a.cos()), radius * a.sin()));
    }
    ring_surface(p0 - d * radius, p1 + d * radius, &rings, &d, slices)
}

/// UV sphere.
pub fn sphere(center: Vec3, radius: f64, stacks: usize, slices: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let rings: Vec<(Vec3, f64)> = (1..stacks)
        .map(|i| {
            let phi = PI * i as f64 / stacks as f64;
            (center - Vec3::y() * (radius * phi.cos()), radius * phi.sin())
        })
        .collect();
    ring_surface(center - Vec3::y() * radius, center + Vec3::y() * radius, &rings, &Vec3::y(), slices)
}

/// Accumulates closed components into one part-labeled mesh.
#[derive(Debug, Clone, Default)]
pub struct PartMeshBuilder {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    labels: Vec<u32>,
    names: BTreeMap<u32, String>,
}

impl PartMeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of `name`, registering it if new.
    pub fn part(&mut self, name: &str) -> u32 {
        if let Some((&id, _)) = self.names.iter().find(|(_, n)| n.as_str() == name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.insert(id, String::from(name));
        id
    }

    /// Adds a component whose vertices are labeled by `label(vertex index)`.
    pub fn add(&mut self, vertices: &[Vec3], faces: &[[u32; 3]], mut label: impl FnMut(usize) -> u32) {
        let base = self.vertices.len() as u32;
        for (i, v) in vertices.iter().enumerate() {
            self.vertices.push(*v);
            self.labels.push(label(i));
        }
        self.faces.extend(faces.iter().map(|f| f.map(|i| i + base)));
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn build(self) -> Result<PartLabeledMesh> {
        let mut names = self.names;
        names.retain(|id, _| self.labels.contains(id));
        PartLabeledMesh::new(TriangleMesh::new(self.vertices, self.faces)?, self.labels, names)
    }
}
