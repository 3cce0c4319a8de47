use alloc::vec::Vec;

use super::mesh::{Aabb, TriangleMesh};
use super::sdf::closest_point_on_triangle;
use crate::math::Vec3;

const LEAF_TRIANGLES: usize = 4;

#[derive(Debug, Clone)]
struct BvhNode {
    bounds: Aabb,
    // Leaf: triangle range in `order`; inner: children.
    left: u32,
    right: u32,
    start: u32,
    count: u32,
}

/// Bounding-volume hierarchy over mesh triangles for closest-point queries.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    triangles: Vec<[Vec3; 3]>,
    order: Vec<u32>,
    nodes: Vec<BvhNode>,
}

impl TriangleBvh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let triangles: Vec<[Vec3; 3]> = (0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect();
        let mut bvh = TriangleBvh { order: (0..triangles.len() as u32).collect(), triangles, nodes: Vec::new() };
        if !bvh.triangles.is_empty() {
            let centroids: Vec<Vec3> =
                bvh.triangles.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
            bvh.build(0, bvh.triangles.len(), &centroids);
        }
        bvh
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    fn build(&mut self, start: usize, end: usize, centroids: &[Vec3]) -> u32 {
        let bounds = self.order[start..end]
            .iter()
            .map(|&i| Aabb::from_points(&self.triangles[i as usize]).unwrap())
            .reduce(|a, b| a.union(&b))
            .unwrap();
        let id = self.nodes.len() as u32;
        self.nodes.push(BvhNode { bounds, left: 0, right: 0, start: start as u32, count: (end - start) as u32 });
        if end - start <= LEAF_TRIANGLES {
            return id;
        }
        let cb = Aabb::from_points(self.order[start..end].iter().map(|&i| &centroids[i as usize])).unwrap();
        let ext = cb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a as usize][axis].total_cmp(&centroids[b as usize][axis])
        });
        let left = self.build(start, mid, centroids);
        let right = self.build(mid, end, centroids);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        node.count = 0;
        id
    }

    /// Closest point on the surface to `p`, with its triangle index and
    /// squared distance.
    pub fn closest_point(&self, p: &Vec3) -> Option<(Vec3, usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let mut best = (Vec3::zeros(), usize::MAX, f64::INFINITY);
        let mut stack: Vec<u32> = alloc::vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if node.bounds.distance_squared(p) > best.2 {
                continue;
            }
            if node.count > 0 {
                for &t in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    let [a, b, c] = self.triangles[t as usize];
                    let q = closest_point_on_triangle(p, &a, &b, &c);
                    let d = (q - p).norm_squared();
                    if d < best.2 || (d == best.2 && (t as usize) < best.1) {
                        best = (q, t as usize, d);
                    }
                }
            } else {
                let (l, r) = (node.left, node.right);
                let dl = self.nodes[l as usize].bounds.distance_squared(p);
                let dr = self.nodes[r as usize].bounds.distance_squared(p);
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best)
    }
}
