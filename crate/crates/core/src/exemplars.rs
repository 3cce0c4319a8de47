//! Shape descriptors, k-means++ clustering and representative exemplar
//! selection per object category.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::Camera;
use crate::error::{invalid, Result};
use crate::geometry::{canonicalize_mesh, Aabb, CanonicalScaling, PartLabeledMesh, SdfGrid, DEFAULT_TARGET_VERTICES};
use crate::math::Vec3;
use crate::priors::SizePrior;
use crate::scene::{init_object_pose, InitOutcome, MaskTarget, INIT_LR, INIT_STEPS};

pub const DESCRIPTOR_RESOLUTION: usize = 30;
pub const DESCRIPTOR_LEN: usize = DESCRIPTOR_RESOLUTION * DESCRIPTOR_RESOLUTION * DESCRIPTOR_RESOLUTION;
pub const DEFAULT_CLUSTERS: usize = 20;
pub const DEFAULT_TOP_N: usize = 5;
pub const KMEANS_MAX_ITERATIONS: usize = 300;
pub const KMEANS_TOLERANCE: f64 = 1e-6;

/// Signed distances of a unit-box mesh sampled on a 30³ grid whose corner
/// nodes are the corners of `[-0.5, 0.5]³`, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDescriptor {
    pub values: Vec<f64>,
}

impl ShapeDescriptor {
    pub fn distance(&self, other: &ShapeDescriptor) -> f64 {
        squared_distance(&self.values, &other.values).sqrt()
    }
}

impl AsRef<[f64]> for ShapeDescriptor {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// True when the bounding box is centered at the origin with its longest
/// side equal to one and no side longer.
pub fn is_canonical(mesh: &PartLabeledMesh) -> bool {
    let Some(b) = mesh.mesh.bounding_box() else { return false };
    let ext = b.extent();
    b.center().norm() < 1e-6 && (ext.max() - 1.0).abs() < 1e-6
}

pub fn shape_descriptor(mesh: &PartLabeledMesh) -> Result<ShapeDescriptor> {
    if !is_canonical(mesh) {
        return Err(invalid("shape descriptors need a mesh canonicalized to the unit box"));
    }
    let bounds = Aabb { min: Vec3::repeat(-0.5), max: Vec3::repeat(0.5) };
    let grid = SdfGrid::from_mesh_in_box(&mesh.mesh, [DESCRIPTOR_RESOLUTION; 3], bounds)?;
    Ok(ShapeDescriptor { values: grid.into_values() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Total squared distance after every assignment step.
    pub cost_history: Vec<f64>,
}

impl KMeans {
    pub fn cost(&self) -> f64 {
        *self.cost_history.last().expect("at least one assignment")
    }
}

fn nearest_center(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until no center moves by
/// more than 1e-6 or 300 iterations. Empty clusters are re-seeded at the
/// point farthest from its center.
pub fn kmeans_pp<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 || points.len() < k {
        return Err(invalid(alloc::format!("k-means needs 1 <= k <= {} points, got k = {k}", points.len())));
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim || p.as_ref().iter().any(|v| !v.is_finite())) {
        return Err(invalid("k-means points must share a dimension and be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = alloc::vec![rng.random_range(0..points.len())];
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p.as_ref(), points[chosen[0]].as_ref())).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if r < w {
                        break;
                    }
                    r -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Only duplicates remain; take any point not yet used.
            let free: Vec<usize> = (0..points.len()).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p.as_ref(), points[next].as_ref()));
        }
    }
    let mut centers: Vec<Vec<f64>> = chosen.iter().map(|&i| points[i].as_ref().to_vec()).collect();
    let mut assignment = alloc::vec![0usize; points.len()];
    let mut cost_history = Vec::new();
    for _ in 0..KMEANS_MAX_ITERATIONS {
        let mut cost = 0.0;
        let mut dist = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest_center(p.as_ref(), &centers);
            assignment[i] = c;
            dist.push(d);
            cost += d;
        }
        // An empty cluster takes the worst-fit point, which only lowers the cost.
        for c in 0..k {
            if assignment.contains(&c) {
                continue;
            }
            let mut far = (usize::MAX, -1.0);
            for (i, &d) in dist.iter().enumerate() {
                let shared = assignment.iter().filter(|&&a| a == assignment[i]).count() > 1;
                if shared && d > far.1 {
                    far = (i, d);
                }
            }
            cost -= far.1;
            dist[far.0] = 0.0;
            assignment[far.0] = c;
            centers[c] = points[far.0].as_ref().to_vec();
        }
        cost_history.push(cost);
        let mut moved: f64 = 0.0;
        for (c, center) in centers.iter_mut().enumerate() {
            let mut sum = alloc::vec![0.0; dim];
            let mut n = 0usize;
            for (p, _) in points.iter().zip(&assignment).filter(|(_, &a)| a == c) {
                for (s, v) in sum.iter_mut().zip(p.as_ref()) {
                    *s += v;
                }
                n += 1;
            }
            sum.iter_mut().for_each(|s| *s /= n as f64);
            moved = moved.max(squared_distance(&sum, center).sqrt());
            *center = sum;
        }
        if moved < KMEANS_TOLERANCE {
            break;
        }
    }
    Ok(KMeans { assignment, centers, cost_history })
}

#[derive(Debug, Clone)]
pub struct Exemplar {
    /// Index into the input mesh list.
    pub source: usize,
    /// Decimated mesh, centered with its longest side of length one.
    pub mesh: PartLabeledMesh,
    pub descriptor: ShapeDescriptor,
}

#[derive(Debug, Clone)]
pub struct ExemplarSet {
    pub category: String,
    pub k: usize,
    pub seed: u64,
    pub exemplars: Vec<Exemplar>,
}

/// Decimated and isotropically normalized mesh plus the descriptor of its
/// anisotropically normalized copy.
pub fn prepare_exemplar(mesh: &PartLabeledMesh) -> Result<(PartLabeledMesh, ShapeDescriptor)> {
    let iso = canonicalize_mesh(mesh, DEFAULT_TARGET_VERTICES, CanonicalScaling::Isotropic)?;
    let aniso = canonicalize_mesh(&iso, DEFAULT_TARGET_VERTICES, CanonicalScaling::Anisotropic)?;
    Ok((iso, shape_descriptor(&aniso)?))
}

/// Clusters prepared exemplars and keeps, per cluster, the member closest to
/// its center (lowest index on ties).
pub fn select_prepared(
    category: &str,
    prepared: Vec<(PartLabeledMesh, ShapeDescriptor)>,
    k: usize,
    seed: u64,
) -> Result<ExemplarSet> {
    let descriptors: Vec<&ShapeDescriptor> = prepared.iter().map(|(_, d)| d).collect();
    let clusters = kmeans_pp(&descriptors, k, seed)?;
    let mut picks = Vec::with_capacity(k);
    for (c, center) in clusters.centers.iter().enumerate() {
        let mut best = (usize::MAX, f64::INFINITY);
        for (i, d) in descriptors.iter().enumerate() {
            if clusters.assignment[i] == c {
                let dist = squared_distance(&d.values, center);
                if dist < best.1 {
                    best = (i, dist);
                }
            }
        }
        picks.push(best.0);
    }
    let exemplars = picks
        .into_iter()
        .map(|i| Exemplar { source: i, mesh: prepared[i].0.clone(), descriptor: prepared[i].1.clone() })
        .collect();
    Ok(ExemplarSet { category: category.into(), k, seed, exemplars })
}

pub fn select_representatives(category: &str, meshes: &[PartLabeledMesh], k: usize, seed: u64) -> Result<ExemplarSet> {
    if meshes.len() < k {
        return Err(invalid(alloc::format!("{} meshes cannot form {k} clusters", meshes.len())));
    }
    let prepared = meshes.iter().map(prepare_exemplar).collect::<Result<Vec<_>>>()?;
    select_prepared(category, prepared, k, seed)
}

/// One ranked exemplar with its initialized pose.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedExemplar {
    /// Index into the exemplar set.
    pub index: usize,
    pub iou: f64,
    pub init: InitOutcome,
}

/// Initializes every exemplar against the mask at the category's prior size
/// and returns the `top_n` best by silhouette IoU, ties by index.
pub fn rank_exemplars(
    set: &ExemplarSet,
    mask: &MaskTarget,
    camera: &Camera,
    size: &SizePrior,
    top_n: usize,
) -> Result<Vec<RankedExemplar>> {
    let mut ranked = set
        .exemplars
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let init = init_object_pose(&e.mesh, mask, camera, size, INIT_STEPS, INIT_LR)?;
            Ok(RankedExemplar { index, iou: init.iou, init })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.iou.total_cmp(&a.iou).then(a.index.cmp(&b.index)));
    ranked.truncate(top_n);
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{shapes, TriangleMesh};
    use proptest::prelude::*;
    use rand::Rng;

    // Box-Muller normal sample.
    fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random::<f64>().max(1e-300);
        let v: f64 = rng.random();
        (-2.0 * u.ln()).sqrt() * (2.0 * core::f64::consts::PI * v).cos()
    }

    fn cube(half: Vec3) -> PartLabeledMesh {
        let (v, f, _) = shapes::lattice_box(-half, half, [2, 2, 2]);
        PartLabeledMesh::single_part(TriangleMesh::new(v, f).unwrap(), "body").unwrap()
    }

    fn ball(r: f64) -> PartLabeledMesh {
        let (v, f) = shapes::sphere(Vec3::zeros(), r, 12, 16);
        PartLabeledMesh::single_part(TriangleMesh::new(v, f).unwrap(), "body").unwrap()
    }

    #[test]
    fn unit_cube_descriptor() {
        let d = shape_descriptor(&cube(Vec3::repeat(0.5))).unwrap();
        assert_eq!(d.values.len(), DESCRIPTOR_LEN);
        // Node 14 sits at -0.5 + 14/29 on every axis; distance to the nearest face.
        let idx = 14 + 30 * 14 + 900 * 14;
        let expected = -(0.5 - (0.5 - 14.0 / 29.0f64).abs());
        assert!((d.values[idx] - expected).abs() < 1e-12);
        assert!(d.values[idx] < -0.48);
        assert_eq!(d, shape_descriptor(&cube(Vec3::repeat(0.5))).unwrap());
    }

    #[test]
    fn descriptor_needs_canonical_mesh() {
        assert!(shape_descriptor(&cube(Vec3::repeat(1.0))).is_err());
        assert!(shape_descriptor(&ball(0.5)).is_ok());
    }

    #[test]
    fn cube_and_sphere_differ_symmetrically() {
        let a = shape_descriptor(&cube(Vec3::repeat(0.5))).unwrap();
        let (s, _) = prepare_exemplar(&ball(2.0)).unwrap();
        let b = shape_descriptor(&s).unwrap();
        assert!(a.distance(&b) > 0.0);
        assert_eq!(a.distance(&b), b.distance(&a));
    }

    fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for i in 0..40 {
            let c = if i % 2 == 0 { -5.0 } else { 5.0 };
            pts.push((0..50).map(|_| c + 0.3 * gaussian(&mut rng)).collect());
            truth.push(i % 2);
        }
        (pts, truth)
    }

    #[test]
    fn two_blobs_split_cleanly() {
        let (pts, truth) = blobs(7);
        let km = kmeans_pp(&pts, 2, 11).unwrap();
        let flip = km.assignment[0] != truth[0];
        for (a, t) in km.assignment.iter().zip(&truth) {
            assert_eq!(*a, if flip { 1 - t } else { *t });
        }
    }

    #[test]
    fn k_equals_n_has_zero_cost() {
        let (pts, _) = blobs(3);
        let km = kmeans_pp(&pts[..6], 6, 0).unwrap();
        assert_eq!(km.cost(), 0.0);
        let mut seen = km.assignment.clone();
        seen.sort();
        assert_eq!(seen, [0, 1, 2, 3, 4, 5]);
        assert!(kmeans_pp(&pts[..3], 4, 0).is_err());
    }

    #[test]
    fn duplicates_get_distinct_representatives() {
        let meshes = [cube(Vec3::repeat(0.3)), cube(Vec3::repeat(0.3)), ball(0.4), ball(0.4)];
        let set = select_representatives("thing", &meshes, 2, 5).unwrap();
        assert_eq!(set.exemplars.len(), 2);
        assert_ne!(set.exemplars[0].source, set.exemplars[1].source);
        let single = select_representatives("thing", &meshes[..3], 1, 5).unwrap();
        // Oracle: the descriptor closest to the mean of all three.
        let descs: Vec<ShapeDescriptor> = meshes[..3].iter().map(|m| prepare_exemplar(m).unwrap().1).collect();
        let mean: Vec<f64> = (0..DESCRIPTOR_LEN).map(|i| descs.iter().map(|d| d.values[i]).sum::<f64>() / 3.0).collect();
        let best = (0..3)
            .min_by(|&a, &b| squared_distance(&descs[a].values, &mean).total_cmp(&squared_distance(&descs[b].values, &mean)))
            .unwrap();
        assert_eq!(single.exemplars[0].source, best);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn lloyd_cost_never_increases(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let k = 1 + (seed % 6) as usize;
            let km = kmeans_pp(&pts, k, seed).unwrap();
            for w in km.cost_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
            }
            prop_assert_eq!(&km, &kmeans_pp(&pts, k, seed).unwrap());
        }
    }
}
