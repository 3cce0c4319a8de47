use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::{Vec2, Vec3};

const LEAF_SIZE: usize = 8;

/// Result of a nearest-neighbor query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Index of the point in the order it was inserted.
    pub index: usize,
    /// Squared Euclidean distance to the query.
    pub dist_sq: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { dim: u32, value: f64, left: u32, right: u32 },
}

/// Exact k-d tree over points of any fixed dimension.
///
/// Every point carries a rank; among equidistant neighbors the one with the
/// lowest `(rank, index)` wins, so results never depend on tree layout.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    ranks: Vec<u64>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds a tree over `points` laid out row-major (`len * dim` values).
    /// Ranks default to insertion order.
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("k-d tree dimension must be positive"));
        }
        let ranks = (0..(points.len() / dim) as u64).collect();
        Self::with_ranks(dim, points, ranks)
    }

    pub fn with_ranks(dim: usize, points: Vec<f64>, ranks: Vec<u64>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(invalid(alloc::format!(
                "{} coordinates do not split into {dim}-dimensional points",
                points.len()
            )));
        }
        let n = points.len() / dim;
        if ranks.len() != n {
            return Err(invalid("one rank per point required"));
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite coordinate in k-d tree input"));
        }
        let mut tree = KdTree { dim, points, ranks, order: (0..n as u32).collect(), nodes: Vec::new() };
        if n > 0 {
            tree.build(0, n);
        }
        Ok(tree)
    }

    pub fn from_points3(points: &[Vec3]) -> Self {
        let flat = points.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        KdTree::new(3, flat).expect("finite 3d points")
    }

    pub fn from_points3_ranked(points: &[Vec3], ranks: Vec<u64>) -> Result<Self> {
        let flat = points.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        KdTree::with_ranks(3, flat, ranks)
    }

    pub fn from_points2(points: &[Vec2]) -> Self {
        let flat = points.iter().flat_map(|p| [p.x, p.y]).collect();
        KdTree::new(2, flat).expect("finite 2d points")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index * self.dim..(index + 1) * self.dim]
    }

    fn coord(&self, index: u32, d: usize) -> f64 {
        self.points[index as usize * self.dim + d]
    }

    fn build(&mut self, start: usize, end: usize) -> u32 {
        let id = self.nodes.len() as u32;
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start: start as u32, end: end as u32 });
            return id;
        }
        // Split on the dimension of widest spread.
        let mut best = (0usize, -1.0f64);
        for d in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let c = self.coord(i, d);
                lo = lo.min(c);
                hi = hi.max(c);
            }
            if hi - lo > best.1 {
                best = (d, hi - lo);
            }
        }
        let dim = best.0;
        if best.1 <= 0.0 {
            self.nodes.push(Node::Leaf { start: start as u32, end: end as u32 });
            return id;
        }
        let mid = (start + end) / 2;
        let points = &self.points;
        let stride = self.dim;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize * stride + dim].total_cmp(&points[b as usize * stride + dim])
        });
        let value = self.coord(self.order[mid], dim);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id as usize] = Node::Split { dim: dim as u32, value, left, right };
        id
    }

    fn better(&self, cand: (f64, u32), best: &Option<(f64, u32)>) -> bool {
        match best {
            None => true,
            Some((bd, bi)) => {
                cand.0 < *bd
                    || (cand.0 == *bd
                        && (self.ranks[cand.1 as usize], cand.1) < (self.ranks[*bi as usize], *bi))
            }
        }
    }

    /// Exact nearest neighbor of `query`; `None` for an empty tree.
    pub fn nearest(&self, query: &[f64]) -> Option<Neighbor> {
        assert_eq!(query.len(), self.dim, "query dimension mismatch");
        if self.is_empty() {
            return None;
        }
        let mut best: Option<(f64, u32)> = None;
        self.search(0, query, &mut best);
        best.map(|(d, i)| Neighbor { index: i as usize, dist_sq: d })
    }

    pub fn nearest3(&self, q: &Vec3) -> Option<Neighbor> {
        self.nearest(q.as_slice())
    }

    pub fn nearest2(&self, q: &Vec2) -> Option<Neighbor> {
        self.nearest(q.as_slice())
    }

    fn search(&self, node: u32, q: &[f64], best: &mut Option<(f64, u32)>) {
        match self.nodes[node as usize] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start as usize..end as usize] {
                    let p = &self.points[i as usize * self.dim..(i as usize + 1) * self.dim];
                    let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    if self.better((d, i), best) {
                        *best = Some((d, i));
                    }
                }
            }
            Node::Split { dim, value, left, right } => {
                let diff = q[dim as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                // Equal distances must still be visited for the rank tie-break.
                if best.map_or(true, |(d, _)| diff * diff <= d) {
                    self.search(far, q, best);
                }
            }
        }
    }
}
