use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec::Vec;
use core::cmp::Ordering;
use nalgebra::{Matrix3, Matrix4, Vector4};

use super::kdtree::KdTree;
use super::mesh::{PartLabeledMesh, TriangleMesh};
use crate::error::{invalid, Error, Result};
use crate::math::Vec3;

pub const DEFAULT_TARGET_VERTICES: usize = 1000;

/// How a mesh is fitted into the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CanonicalScaling {
    /// Every axis stretched to unit extent.
    #[default]
    Anisotropic,
    /// Longest axis scaled to unit extent, proportions kept.
    Isotropic,
}

/// Decimates to at most `target_vertex_count` vertices, centers the bounding
/// box at the origin and scales it into `[-0.5, 0.5]^3`.
pub fn canonicalize_mesh(
    mesh: &PartLabeledMesh,
    target_vertex_count: usize,
    scaling: CanonicalScaling,
) -> Result<PartLabeledMesh> {
    let reduced = decimate(mesh, target_vertex_count)?;
    let bounds = reduced.mesh.bounding_box().ok_or_else(|| invalid("empty mesh"))?;
    let center = bounds.center();
    let ext = bounds.extent();
    let longest = ext.max();
    if !(longest > 0.0) {
        return Err(invalid("mesh has zero extent"));
    }
    let factor = match scaling {
        CanonicalScaling::Anisotropic => {
            Vec3::from_fn(|i, _| if ext[i] > 1e-12 * longest { 1.0 / ext[i] } else { 1.0 / longest })
        }
        CanonicalScaling::Isotropic => Vec3::repeat(1.0 / longest),
    };
    let vertices = reduced
        .mesh
        .vertices()
        .iter()
        .map(|v| (v - center).component_mul(&factor).map(|c| c.clamp(-0.5, 0.5)))
        .collect();
    let scaled = reduced.mesh.with_vertices(vertices)?.without_degenerate_faces();
    reduced.with_mesh(scaled)
}

/// Quadric-error edge collapse down to at most `target` vertices. Labels of
/// surviving vertices come from the nearest original vertex (lowest label id
/// on ties); parts left without vertices are dropped. Meshes already within
/// the target are returned unchanged.
pub fn decimate(mesh: &PartLabeledMesh, target: usize) -> Result<PartLabeledMesh> {
    if mesh.mesh.is_empty() {
        return Err(invalid("cannot decimate an empty mesh"));
    }
    if target < 4 {
        return Err(invalid(alloc::format!("target vertex count {target} is below 4")));
    }
    if mesh.mesh.vertices().len() <= target {
        return Ok(mesh.clone());
    }
    let mut state = Collapser::new(&mesh.mesh);
    state.run(target);
    let (vertices, faces) = state.compact();
    if vertices.len() > target {
        return Err(Error::DegenerateConfiguration(alloc::format!(
            "decimation stalled at {} vertices",
            vertices.len()
        )));
    }
    let reduced = TriangleMesh::new(vertices, faces)?;

    let labels = mesh.part_of_vertex();
    let tree = KdTree::from_points3_ranked(mesh.mesh.vertices(), labels.iter().map(|&l| l as u64).collect())?;
    let new_labels: Vec<u32> = reduced
        .vertices()
        .iter()
        .map(|p| labels[tree.nearest3(p).expect("non-empty").index])
        .collect();
    let names: BTreeMap<u32, _> = mesh
        .part_names()
        .iter()
        .filter(|(id, _)| new_labels.contains(id))
        .map(|(&id, n)| (id, n.clone()))
        .collect();
    PartLabeledMesh::new(reduced, new_labels, names)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    a: u32,
    b: u32,
    stamp_a: u32,
    stamp_b: u32,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest collapse first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| (other.a, other.b).cmp(&(self.a, self.b)))
    }
}

struct Collapser {
    pos: Vec<Vec3>,
    quadric: Vec<Matrix4<f64>>,
    stamp: Vec<u32>,
    alive_vertex: Vec<bool>,
    faces: Vec<[u32; 3]>,
    alive_face: Vec<bool>,
    faces_of: Vec<Vec<u32>>,
    heap: BinaryHeap<Candidate>,
    alive: usize,
}

fn plane_quadric(n: &Vec3, p: &Vec3, weight: f64) -> Matrix4<f64> {
    let q = Vector4::new(n.x, n.y, n.z, -n.dot(p));
    q * q.transpose() * weight
}

impl Collapser {
    fn new(mesh: &TriangleMesh) -> Self {
        let n = mesh.vertices().len();
        let mut quadric = alloc::vec![Matrix4::zeros(); n];
        let mut faces_of = alloc::vec![Vec::new(); n];
        let mut edge_count: BTreeMap<(u32, u32), (u32, usize)> = BTreeMap::new();
        for (f, tri) in mesh.faces().iter().enumerate() {
            let an = mesh.face_area_normal(f);
            let area = an.norm();
            for k in 0..3 {
                faces_of[tri[k] as usize].push(f as u32);
                let (x, y) = (tri[k], tri[(k + 1) % 3]);
                let e = edge_count.entry((x.min(y), x.max(y))).or_insert((0, f));
                e.0 += 1;
            }
            if area > 0.0 {
                let q = plane_quadric(&(an / area), &mesh.vertices()[tri[0] as usize], area);
                for &v in tri {
                    quadric[v as usize] += q;
                }
            }
        }
        // Boundary edges get a perpendicular constraint plane so open rims
        // keep their outline.
        for (&(x, y), &(count, f)) in &edge_count {
            if count != 1 {
                continue;
            }
            let (px, py) = (mesh.vertices()[x as usize], mesh.vertices()[y as usize]);
            let fnormal = mesh.face_area_normal(f);
            let side = (py - px).cross(&fnormal);
            let len = side.norm();
            if len > 0.0 {
                let q = plane_quadric(&(side / len), &px, (py - px).norm_squared());
                quadric[x as usize] += q;
                quadric[y as usize] += q;
            }
        }
        let alive_vertex: Vec<bool> = faces_of.iter().map(|f| !f.is_empty()).collect();
        let alive = alive_vertex.iter().filter(|&&a| a).count();
        let mut c = Collapser {
            pos: mesh.vertices().to_vec(),
            quadric,
            stamp: alloc::vec![0; n],
            alive_vertex,
            faces: mesh.faces().to_vec(),
            alive_face: alloc::vec![true; mesh.faces().len()],
            faces_of,
            heap: BinaryHeap::new(),
            alive,
        };
        for (&(x, y), _) in &edge_count {
            c.push(x, y);
        }
        c
    }

    fn cost(q: &Matrix4<f64>, p: &Vec3) -> f64 {
        let h = Vector4::new(p.x, p.y, p.z, 1.0);
        (h.transpose() * q * h)[0].max(0.0)
    }

    fn push(&mut self, a: u32, b: u32) {
        let (a, b) = (a.min(b), a.max(b));
        let q = self.quadric[a as usize] + self.quadric[b as usize];
        let (pa, pb) = (self.pos[a as usize], self.pos[b as usize]);
        let mid = (pa + pb) * 0.5;
        let mut best = (Self::cost(&q, &pa), pa);
        for p in [pb, mid] {
            let c = Self::cost(&q, &p);
            if c < best.0 {
                best = (c, p);
            }
        }
        let m: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into();
        let eig = m.symmetric_eigenvalues();
        if eig.min() > 1e-10 * eig.max().max(1e-300) {
            if let Some(inv) = m.try_inverse() {
                let p = -(inv * q.fixed_view::<3, 1>(0, 3));
                // Far-flung optima come from nearly flat quadrics.
                if (p - mid).norm() <= (pb - pa).norm() {
                    let c = Self::cost(&q, &p);
                    if c < best.0 {
                        best = (c, p);
                    }
                }
            }
        }
        self.heap.push(Candidate {
            cost: best.0,
            a,
            b,
            stamp_a: self.stamp[a as usize],
            stamp_b: self.stamp[b as usize],
            target: best.1,
        });
    }

    fn live_faces(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.faces_of[v as usize].iter().copied().filter(|&f| self.alive_face[f as usize])
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut n: Vec<u32> = self
            .live_faces(v)
            .flat_map(|f| self.faces[f as usize])
            .filter(|&u| u != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn can_collapse(&self, a: u32, b: u32, p: &Vec3) -> bool {
        // Link condition: the shared neighbors are exactly the apexes of the
        // faces on the edge.
        let na = self.neighbors(a);
        let nb = self.neighbors(b);
        let shared: Vec<u32> = na.iter().copied().filter(|u| nb.binary_search(u).is_ok()).collect();
        let mut apex: Vec<u32> = self
            .live_faces(a)
            .filter(|&f| self.faces[f as usize].contains(&b))
            .flat_map(|f| self.faces[f as usize])
            .filter(|&u| u != a && u != b)
            .collect();
        apex.sort_unstable();
        apex.dedup();
        if apex.is_empty() || shared != apex {
            return false;
        }
        // No incident face may flip or collapse.
        for v in [a, b] {
            for f in self.live_faces(v) {
                let tri = self.faces[f as usize];
                if tri.contains(&a) && tri.contains(&b) {
                    continue;
                }
                let old = tri.map(|u| self.pos[u as usize]);
                let new = tri.map(|u| if u == a || u == b { *p } else { self.pos[u as usize] });
                let n_old = (old[1] - old[0]).cross(&(old[2] - old[0]));
                let n_new = (new[1] - new[0]).cross(&(new[2] - new[0]));
                let (lo, ln) = (n_old.norm(), n_new.norm());
                if ln <= 1e-12 * lo.max(1e-300) || n_old.dot(&n_new) <= 0.2 * lo * ln {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, a: u32, b: u32, p: Vec3) {
        let b_faces: Vec<u32> = self.live_faces(b).collect();
        for f in b_faces {
            let tri = &mut self.faces[f as usize];
            if tri.contains(&a) {
                self.alive_face[f as usize] = false;
            } else {
                for u in tri.iter_mut() {
                    if *u == b {
                        *u = a;
                    }
                }
                self.faces_of[a as usize].push(f);
            }
        }
        self.faces_of[b as usize].clear();
        self.alive_vertex[b as usize] = false;
        self.alive -= 1;
        self.pos[a as usize] = p;
        let qb = self.quadric[b as usize];
        self.quadric[a as usize] += qb;
        self.stamp[a as usize] += 1;
        let live: Vec<u32> = self.live_faces(a).collect();
        self.faces_of[a as usize] = live;
        for n in self.neighbors(a) {
            self.push(a, n);
        }
    }

    fn run(&mut self, target: usize) {
        while self.alive > target {
            let Some(c) = self.heap.pop() else { break };
            let (a, b) = (c.a as usize, c.b as usize);
            if !self.alive_vertex[a]
                || !self.alive_vertex[b]
                || self.stamp[a] != c.stamp_a
                || self.stamp[b] != c.stamp_b
            {
                continue;
            }
            if self.can_collapse(c.a, c.b, &c.target) {
                self.collapse(c.a, c.b, c.target);
            }
        }
    }

    fn compact(&self) -> (Vec<Vec3>, Vec<[u32; 3]>) {
        let mut remap = alloc::vec![u32::MAX; self.pos.len()];
        let mut vertices = Vec::new();
        for (v, &alive) in self.alive_vertex.iter().enumerate() {
            if alive && self.live_faces(v as u32).next().is_some() {
                remap[v] = vertices.len() as u32;
                vertices.push(self.pos[v]);
            }
        }
        let faces = (0..self.faces.len())
            .filter(|&f| self.alive_face[f])
            .map(|f| self.faces[f].map(|u| remap[u as usize]))
            .collect();
        (vertices, faces)
    }
}
