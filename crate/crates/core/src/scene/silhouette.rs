//! Mask reprojection loss: projected-vertex coverage plus a symmetric 2D
//! chamfer between the silhouette contour and the mask boundary.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::body::Camera;
use crate::error::{invalid, Error, Result};
use crate::geometry::KdTree;
use crate::image::{rasterize, BinaryMask};
use crate::math::{Vec2, Vec3};

/// Points closer to the image plane than this are treated as behind it.
pub const MIN_DEPTH: f64 = 1e-6;

/// Contour edges get at least this many samples, and about one
/// per half pixel of projected length.
const MIN_EDGE_SAMPLES: usize = 3;

/// Object mask with its boundary samples and a search tree over them.
#[derive(Debug, Clone)]
pub struct MaskTarget {
    mask: BinaryMask,
    boundary: Vec<Vec2>,
    tree: Option<KdTree>,
}

impl MaskTarget {
    pub fn new(mask: BinaryMask) -> Result<Self> {
        if mask.is_empty() {
            return Err(invalid("object mask is empty"));
        }
        let boundary = densify_boundary(&mask.boundary_points());
        let tree = (!boundary.is_empty()).then(|| KdTree::from_points2(&boundary));
        Ok(MaskTarget { mask, boundary, tree })
    }

    pub fn mask(&self) -> &BinaryMask {
        &self.mask
    }

    pub fn boundary(&self) -> &[Vec2] {
        &self.boundary
    }

    fn nearest(&self, p: &Vec2) -> Option<usize> {
        self.tree.as_ref().and_then(|t| t.nearest2(p)).map(|n| n.index)
    }
}

/// Crack midpoints plus the crack end points, so boundary samples are half
/// a pixel apart.
fn densify_boundary(points: &[Vec2]) -> Vec<Vec2> {
    let key = |p: &Vec2| ((2.0 * p.x).round() as i64, (2.0 * p.y).round() as i64);
    let mut all = alloc::collections::BTreeSet::new();
    for p in points {
        let (x, y) = key(p);
        all.insert((x, y));
        if x % 2 != 0 {
            all.insert((x - 1, y));
            all.insert((x + 1, y));
        } else {
            all.insert((x, y - 1));
            all.insert((x, y + 1));
        }
    }
    all.into_iter().map(|(x, y)| Vec2::new(x as f64 / 2.0, y as f64 / 2.0)).collect()
}

/// Contour sample `(1 - t) * p[a] + t * p[b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    a: u32,
    b: u32,
    t: f64,
}

/// Correspondences frozen for one evaluation point.
#[derive(Debug, Clone)]
pub struct SilhouetteLinearization {
    valid: usize,
    outside: Vec<(usize, usize)>,
    samples: Vec<Sample>,
    sample_to_mask: Vec<usize>,
    mask_to_sample: Vec<usize>,
}

fn project_all(points: &[Vec3], camera: &Camera) -> Result<Vec<Option<Vec2>>> {
    let projected: Vec<Option<Vec2>> = points
        .iter()
        .map(|p| (p.z > MIN_DEPTH).then(|| Vec2::new(camera.fx * p.x / p.z + camera.cx, camera.fy * p.y / p.z + camera.cy)))
        .collect();
    if !projected.iter().any(Option::is_some) {
        let (index, z) = points.iter().enumerate().map(|(i, p)| (i, p.z)).next().unwrap_or((0, 0.0));
        return Err(Error::BehindCamera { index, z });
    }
    Ok(projected)
}

fn visible_faces<'a>(faces: &'a [[u32; 3]], proj: &'a [Option<Vec2>]) -> impl Iterator<Item = &'a [u32; 3]> + 'a {
    faces.iter().filter(move |f| f.iter().all(|&i| proj[i as usize].is_some()))
}

/// Binary silhouette of a posed mesh; faces touching points behind the
/// camera are skipped.
pub fn render_silhouette(points: &[Vec3], faces: &[[u32; 3]], camera: &Camera) -> Result<BinaryMask> {
    let proj = project_all(points, camera)?;
    let flat: Vec<Vec2> = proj.iter().map(|p| p.unwrap_or_else(|| Vec2::repeat(f64::NAN))).collect();
    let kept: Vec<[u32; 3]> = visible_faces(faces, &proj).copied().collect();
    Ok(rasterize(&flat, &kept, camera.width, camera.height))
}

pub fn linearize_silhouette(
    points: &[Vec3],
    faces: &[[u32; 3]],
    camera: &Camera,
    target: &MaskTarget,
) -> Result<SilhouetteLinearization> {
    let proj = project_all(points, camera)?;
    let valid = proj.iter().filter(|p| p.is_some()).count();
    let mut outside = Vec::new();
    for (k, p) in proj.iter().enumerate() {
        if let Some(p) = p {
            if !target.mask.covers(p) {
                if let Some(j) = target.nearest(p) {
                    outside.push((k, j));
                }
            }
        }
    }

    // Contour edges: facing changes across the edge, or only one face uses it.
    let mut facing: BTreeMap<(u32, u32), (u8, u8)> = BTreeMap::new();
    for f in visible_faces(faces, &proj) {
        let [a, b, c] = f.map(|i| proj[i as usize].expect("visible"));
        let area = (b - a).perp(&(c - a));
        let bit = if area > 0.0 {
            1
        } else if area < 0.0 {
            2
        } else {
            0
        };
        for e in 0..3 {
            let (u, v) = (f[e], f[(e + 1) % 3]);
            let key = (u.min(v), u.max(v));
            let entry = facing.entry(key).or_insert((0, 0));
            entry.0 |= bit;
            entry.1 += 1;
        }
    }
    let flat: Vec<Vec2> = proj.iter().map(|p| p.unwrap_or_else(|| Vec2::repeat(f64::NAN))).collect();
    let kept: Vec<[u32; 3]> = visible_faces(faces, &proj).copied().collect();
    let silhouette = rasterize(&flat, &kept, camera.width, camera.height);
    let (w, h) = (camera.width as f64, camera.height as f64);
    let mut samples = Vec::new();
    for (&(a, b), &(bits, count)) in &facing {
        if !(bits == 3 || count == 1) {
            continue;
        }
        let n = ((2.0 * (flat[a as usize] - flat[b as usize]).norm()).ceil() as usize).clamp(MIN_EDGE_SAMPLES, 1 << 12);
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            let c = flat[a as usize] * (1.0 - t) + flat[b as usize] * t;
            if c.x >= 0.0 && c.y >= 0.0 && c.x < w && c.y < h && silhouette.near_boundary(&c) {
                samples.push(Sample { a, b, t });
            }
        }
    }
    if samples.is_empty() {
        samples = (0..proj.len() as u32).filter(|&k| proj[k as usize].is_some()).map(|k| Sample { a: k, b: k, t: 0.0 }).collect();
    }
    let positions: Vec<Vec2> = samples.iter().map(|s| flat[s.a as usize] * (1.0 - s.t) + flat[s.b as usize] * s.t).collect();
    let (sample_to_mask, mask_to_sample) = if target.boundary.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let tree = KdTree::from_points2(&positions);
        (
            positions.iter().map(|p| target.nearest(p).expect("boundary is non-empty")).collect(),
            target.boundary.iter().map(|q| tree.nearest2(q).expect("samples are non-empty").index).collect(),
        )
    };
    Ok(SilhouetteLinearization { valid, outside, samples, sample_to_mask, mask_to_sample })
}

fn unit_or_zero(d: Vec2) -> (f64, Vec2) {
    let n = d.norm();
    if n > 0.0 {
        (n, d / n)
    } else {
        (0.0, Vec2::zeros())
    }
}

/// Loss value with frozen correspondences, and optionally its gradient with
/// respect to every 3D point. Distances are in units of the image diagonal.
pub fn evaluate_silhouette(
    points: &[Vec3],
    camera: &Camera,
    target: &MaskTarget,
    lin: &SilhouetteLinearization,
    mut grad: Option<&mut [Vec3]>,
) -> f64 {
    let diag = camera.diagonal();
    let mut g2 = alloc::vec![Vec2::zeros(); points.len()];
    let project = |k: usize| {
        let p = points[k];
        Vec2::new(camera.fx * p.x / p.z + camera.cx, camera.fy * p.y / p.z + camera.cy)
    };
    let mut value = 0.0;
    let occ_w = 1.0 / (diag * lin.valid as f64);
    for &(k, j) in &lin.outside {
        let (d, u) = unit_or_zero(project(k) - target.boundary[j]);
        value += d * occ_w;
        g2[k] += u * occ_w;
    }
    if !lin.sample_to_mask.is_empty() {
        let pos: Vec<Vec2> = lin.samples.iter().map(|s| project(s.a as usize) * (1.0 - s.t) + project(s.b as usize) * s.t).collect();
        let mut spread = |s: &Sample, g: Vec2| {
            g2[s.a as usize] += g * (1.0 - s.t);
            g2[s.b as usize] += g * s.t;
        };
        let w = 1.0 / (diag * lin.samples.len() as f64);
        for (i, s) in lin.samples.iter().enumerate() {
            let (d, u) = unit_or_zero(pos[i] - target.boundary[lin.sample_to_mask[i]]);
            value += d * w;
            spread(s, u * w);
        }
        let w = 1.0 / (diag * target.boundary.len() as f64);
        for (j, &i) in lin.mask_to_sample.iter().enumerate() {
            let (d, u) = unit_or_zero(pos[i] - target.boundary[j]);
            value += d * w;
            spread(&lin.samples[i], u * w);
        }
    }
    if let Some(out) = grad.as_deref_mut() {
        for (k, g) in g2.iter().enumerate() {
            if g.x != 0.0 || g.y != 0.0 {
                let [ju, jv] = camera.projection_jacobian(&points[k]);
                out[k] += ju * g.x + jv * g.y;
            }
        }
    }
    value
}

