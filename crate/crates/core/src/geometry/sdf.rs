use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use super::bvh::TriangleBvh;
use super::mesh::{Aabb, TriangleMesh};
use crate::error::{invalid, Result};
use crate::math::Vec3;

/// Padding around the mesh bounding box, as a fraction of its diagonal.
pub const DEFAULT_SDF_PADDING: f64 = 0.05;

/// Closest point to `p` on triangle `abc` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Signed solid angle subtended by triangle `abc` at `p`
/// (Van Oosterom and Strackee).
fn solid_angle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (a, b, c) = (a - p, b - p, c - p);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(&c));
    let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
    2.0 * num.atan2(den)
}

/// Generalized winding number of `p` with respect to the mesh surface.
pub fn winding_number(mesh: &TriangleMesh, p: &Vec3) -> f64 {
    let total: f64 = (0..mesh.faces().len())
        .map(|f| {
            let [a, b, c] = mesh.triangle(f);
            solid_angle(p, &a, &b, &c)
        })
        .sum();
    total / (4.0 * PI)
}

/// Inside test by generalized winding number with threshold 0.5.
pub fn point_in_mesh(mesh: &TriangleMesh, p: &Vec3) -> bool {
    winding_number(mesh, p) > 0.5
}

/// Regular grid of signed distances (negative inside), x-fastest layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    resolution: [usize; 3],
    origin: Vec3,
    cell: Vec3,
    values: Vec<f64>,
    /// False when the source mesh was not watertight; signs may be wrong.
    pub sign_reliable: bool,
}

/// Value and gradient of a grid sample, plus the cell used for it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfSample {
    pub value: f64,
    pub gradient: Vec3,
    /// Lower corner of the interpolation cell; `None` outside the grid.
    pub cell: Option<[usize; 3]>,
}

impl SdfGrid {
    pub fn from_values(
        resolution: [usize; 3],
        origin: Vec3,
        cell: Vec3,
        values: Vec<f64>,
    ) -> Result<Self> {
        if resolution.iter().any(|&r| r < 2) {
            return Err(invalid("grid resolution must be at least 2 per axis"));
        }
        if values.len() != resolution.iter().product::<usize>() {
            return Err(invalid("grid value count does not match resolution"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite grid value"));
        }
        if !(cell.iter().all(|&c| c > 0.0 && c.is_finite())) {
            return Err(invalid("cell size must be positive"));
        }
        Ok(SdfGrid { resolution, origin, cell, values, sign_reliable: true })
    }

    /// Samples `mesh` on a grid whose corner nodes lie at `bounds.min` and
    /// `bounds.max`.
    pub fn from_mesh_in_box(mesh: &TriangleMesh, resolution: [usize; 3], bounds: Aabb) -> Result<Self> {
        if mesh.is_empty() || mesh.faces().is_empty() {
            return Err(invalid("cannot compute a signed distance field of an empty mesh"));
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(invalid("grid resolution must be at least 2 per axis"));
        }
        let ext = bounds.extent();
        let cell = Vec3::from_fn(|i, _| ext[i] / (resolution[i] - 1) as f64);
        if cell.iter().any(|&c| !(c > 0.0)) {
            return Err(invalid("grid bounds have zero extent"));
        }
        let watertight = mesh.is_watertight();
        let inside = if watertight {
            inside_by_rows(mesh, resolution, &bounds.min, &cell)
        } else {
            let mut v = Vec::with_capacity(resolution.iter().product());
            for k in 0..resolution[2] {
                for j in 0..resolution[1] {
                    for i in 0..resolution[0] {
                        let p = bounds.min + Vec3::new(i as f64, j as f64, k as f64).component_mul(&cell);
                        v.push(point_in_mesh(mesh, &p));
                    }
                }
            }
            v
        };
        let bvh = TriangleBvh::new(mesh);
        let mut values = Vec::with_capacity(inside.len());
        let mut idx = 0;
        for k in 0..resolution[2] {
            for j in 0..resolution[1] {
                for i in 0..resolution[0] {
                    let p = bounds.min + Vec3::new(i as f64, j as f64, k as f64).component_mul(&cell);
                    let d = bvh.closest_point(&p).map(|c| c.2.sqrt()).unwrap_or(0.0);
                    values.push(if inside[idx] { -d } else { d });
                    idx += 1;
                }
            }
        }
        let mut grid = SdfGrid::from_values(resolution, bounds.min, cell, values)?;
        grid.sign_reliable = watertight;
        Ok(grid)
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn cell_size(&self) -> Vec3 {
        self.cell
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn bounds(&self) -> Aabb {
        let max = self.origin
            + Vec3::from_fn(|i, _| (self.resolution[i] - 1) as f64).component_mul(&self.cell);
        Aabb { min: self.origin, max }
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.resolution[0] * (j + self.resolution[1] * k)]
    }

    pub fn node_position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64).component_mul(&self.cell)
    }

    /// Largest finite-difference slope between neighboring nodes.
    pub fn lipschitz_bound(&self) -> f64 {
        let [nx, ny, nz] = self.resolution;
        let mut l: f64 = 0.0;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let v = self.node(i, j, k);
                    if i + 1 < nx {
                        l = l.max((self.node(i + 1, j, k) - v).abs() / self.cell.x);
                    }
                    if j + 1 < ny {
                        l = l.max((self.node(i, j + 1, k) - v).abs() / self.cell.y);
                    }
                    if k + 1 < nz {
                        l = l.max((self.node(i, j, k + 1) - v).abs() / self.cell.z);
                    }
                }
            }
        }
        l
    }

    /// Cell containing `p`, which must lie inside the grid box.
    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        core::array::from_fn(|a| {
            let g = (p[a] - self.origin[a]) / self.cell[a];
            (g.floor().max(0.0) as usize).min(self.resolution[a] - 2)
        })
    }

    /// Trilinear polynomial of `cell`, evaluated (and extrapolated) at `p`.
    pub fn sample_in_cell(&self, cell: [usize; 3], p: &Vec3) -> (f64, Vec3) {
        let [i, j, k] = cell;
        let t = Vec3::from_fn(|a, _| (p[a] - self.origin[a]) / self.cell[a] - cell[a] as f64);
        let c = |di, dj, dk| self.node(i + di, j + dj, k + dk);
        let (c000, c100, c010, c110) = (c(0, 0, 0), c(1, 0, 0), c(0, 1, 0), c(1, 1, 0));
        let (c001, c101, c011, c111) = (c(0, 0, 1), c(1, 0, 1), c(0, 1, 1), c(1, 1, 1));
        let (x, y, z) = (t.x, t.y, t.z);
        let c00 = c000 + (c100 - c000) * x;
        let c10 = c010 + (c110 - c010) * x;
        let c01 = c001 + (c101 - c001) * x;
        let c11 = c011 + (c111 - c011) * x;
        let c0 = c00 + (c10 - c00) * y;
        let c1 = c01 + (c11 - c01) * y;
        let value = c0 + (c1 - c0) * z;
        let dx0 = (c100 - c000) + ((c110 - c010) - (c100 - c000)) * y;
        let dx1 = (c101 - c001) + ((c111 - c011) - (c101 - c001)) * y;
        let dx = dx0 + (dx1 - dx0) * z;
        let dy = (c10 - c00) + ((c11 - c01) - (c10 - c00)) * z;
        let dz = c1 - c0;
        (value, Vec3::new(dx / self.cell.x, dy / self.cell.y, dz / self.cell.z))
    }

    /// Trilinear sample inside the grid; outside, the value at the clamped
    /// point plus the distance to the grid box.
    pub fn sample_with_gradient(&self, p: &Vec3) -> SdfSample {
        let b = self.bounds();
        let clamped = Vec3::from_fn(|a, _| p[a].clamp(b.min[a], b.max[a]));
        let cell = self.cell_of(&clamped);
        let (v, mut g) = self.sample_in_cell(cell, &clamped);
        let off = p - clamped;
        let d = off.norm();
        if d == 0.0 {
            return SdfSample { value: v, gradient: g, cell: Some(cell) };
        }
        for a in 0..3 {
            if off[a] != 0.0 {
                g[a] = 0.0;
            }
        }
        SdfSample { value: v + d, gradient: g + off / d, cell: None }
    }

    pub fn sample(&self, p: &Vec3) -> f64 {
        self.sample_with_gradient(p).value
    }
}

/// Signed distance at `p` by trilinear interpolation of `grid`.
pub fn sample_sdf(grid: &SdfGrid, p: &Vec3) -> f64 {
    grid.sample(p)
}

/// Signed distance grid over the mesh bounding box padded by 5% of its
/// diagonal on every side.
pub fn compute_sdf_grid(mesh: &TriangleMesh, resolution: usize) -> Result<SdfGrid> {
    compute_sdf_grid_padded(mesh, resolution, DEFAULT_SDF_PADDING)
}

pub fn compute_sdf_grid_padded(mesh: &TriangleMesh, resolution: usize, padding: f64) -> Result<SdfGrid> {
    let bounds = mesh.bounding_box().ok_or_else(|| invalid("empty mesh"))?;
    let pad = (bounds.diagonal() * padding).max(1e-9);
    SdfGrid::from_mesh_in_box(mesh, [resolution; 3], bounds.expanded(pad))
}

/// Inside flags at every node for a closed mesh.
///
/// Along each x-row the winding number of a closed surface only changes
/// where the row crosses the surface, so it is evaluated exactly once per
/// interval between crossings. Rows that graze an edge or vertex fall back
/// to per-node evaluation.
fn inside_by_rows(mesh: &TriangleMesh, res: [usize; 3], origin: &Vec3, cell: &Vec3) -> Vec<bool> {
    let tris: Vec<[Vec3; 3]> = (0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect();
    let scale = mesh.bounding_box().map(|b| b.diagonal()).unwrap_or(1.0);
    let eps = 1e-9;
    let mut out = alloc::vec![false; res.iter().product()];
    let mut crossings: Vec<f64> = Vec::new();
    for k in 0..res[2] {
        let z = origin.z + k as f64 * cell.z;
        for j in 0..res[1] {
            let y = origin.y + j as f64 * cell.y;
            crossings.clear();
            let mut grazing = false;
            for t in &tris {
                if (y < t[0].y.min(t[1].y).min(t[2].y) - eps * scale)
                    || (y > t[0].y.max(t[1].y).max(t[2].y) + eps * scale)
                    || (z < t[0].z.min(t[1].z).min(t[2].z) - eps * scale)
                    || (z > t[0].z.max(t[1].z).max(t[2].z) + eps * scale)
                {
                    continue;
                }
                // Barycentric coordinates of (y, z) in the yz projection.
                let (ay, az) = (t[0].y - y, t[0].z - z);
                let (by, bz) = (t[1].y - y, t[1].z - z);
                let (cy, cz) = (t[2].y - y, t[2].z - z);
                let wa = by * cz - bz * cy;
                let wb = cy * az - cz * ay;
                let wc = ay * bz - az * by;
                let area = wa + wb + wc;
                let tol = eps * scale * scale;
                if area.abs() <= tol {
                    // Triangle seen edge-on; its projection is a segment.
                    grazing = true;
                    continue;
                }
                let (wa, wb, wc) = (wa / area, wb / area, wc / area);
                let m = wa.min(wb).min(wc);
                if m > eps {
                    crossings.push(wa * t[0].x + wb * t[1].x + wc * t[2].x);
                } else if m > -eps {
                    grazing = true;
                }
            }
            let row = (j + res[1] * k) * res[0];
            if grazing {
                for i in 0..res[0] {
                    let p = Vec3::new(origin.x + i as f64 * cell.x, y, z);
                    out[row + i] = point_in_mesh(mesh, &p);
                }
                continue;
            }
            crossings.sort_unstable_by(|a, b| a.total_cmp(b));
            let mut cache: Vec<Option<bool>> = alloc::vec![None; crossings.len() + 1];
            for i in 0..res[0] {
                let x = origin.x + i as f64 * cell.x;
                let interval = crossings.partition_point(|&c| c < x);
                let near_surface = crossings
                    .get(interval)
                    .into_iter()
                    .chain(interval.checked_sub(1).and_then(|m| crossings.get(m)))
                    .any(|&c| (c - x).abs() <= eps * scale);
                let p = Vec3::new(x, y, z);
                out[row + i] = if near_surface {
                    point_in_mesh(mesh, &p)
                } else if interval == 0 || interval == crossings.len() {
                    false
                } else {
                    *cache[interval].get_or_insert_with(|| point_in_mesh(mesh, &p))
                };
            }
        }
    }
    out
}
