//! Action recognition by nearest-neighbor pose retrieval, and the admission
//! filter for building the pose database.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::body::POSE_DIM;
use crate::error::{invalid, Error, Result};
use crate::geometry::KdTree;
use crate::math::{rotation_angle_between, rotation_from_axis_angle, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct ActionLabel {
    pub verb: String,
    pub object_category: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseEntry {
    pub pose: Vec<f64>,
    pub label: ActionLabel,
    pub provenance: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoseDistance {
    /// Euclidean distance of the concatenated axis-angle values.
    #[default]
    Euclidean,
    /// Root of the summed squared per-joint rotation angles (linear scan).
    Geodesic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RetrievalConfig {
    /// Include the global root orientation (first three values).
    pub include_root: bool,
    pub distance: PoseDistance,
}

#[derive(Debug, Clone)]
struct Index {
    tree: KdTree,
    members: Vec<usize>,
}

/// Immutable pose database with exact nearest-neighbor indices, one over
/// all entries and one per object category.
#[derive(Debug, Clone)]
pub struct PoseDatabase {
    entries: Vec<PoseEntry>,
    config: RetrievalConfig,
    all: Index,
    by_category: BTreeMap<String, Index>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub label: ActionLabel,
    pub distance: f64,
    pub entry: usize,
    pub provenance: u64,
}

fn features(pose: &[f64], config: &RetrievalConfig) -> Vec<f64> {
    if config.include_root {
        pose.to_vec()
    } else {
        pose[3..].to_vec()
    }
}

fn build_index(entries: &[PoseEntry], members: Vec<usize>, config: &RetrievalConfig) -> Result<Index> {
    let dim = if config.include_root { POSE_DIM } else { POSE_DIM - 3 };
    let mut flat = Vec::with_capacity(members.len() * dim);
    let mut ranks = Vec::with_capacity(members.len());
    for &m in &members {
        flat.extend(features(&entries[m].pose, config));
        ranks.push(entries[m].provenance);
    }
    Ok(Index { tree: KdTree::with_ranks(dim, flat, ranks)?, members })
}

/// Builds the database; every pose must have 72 finite values and every
/// label a weight of at least 1.
pub fn build_pose_index(entries: Vec<PoseEntry>, config: RetrievalConfig) -> Result<PoseDatabase> {
    if entries.is_empty() {
        return Err(invalid("pose database needs at least one entry"));
    }
    for (i, e) in entries.iter().enumerate() {
        if e.pose.len() != POSE_DIM {
            return Err(invalid(alloc::format!("entry {i} has {} pose values, expected {POSE_DIM}", e.pose.len())));
        }
        if e.pose.iter().any(|v| !v.is_finite()) {
            return Err(invalid(alloc::format!("entry {i} has a non-finite pose value")));
        }
        if e.label.verb.is_empty() || e.label.object_category.is_empty() {
            return Err(invalid(alloc::format!("entry {i} is unlabeled")));
        }
        if !(e.label.weight >= 1.0) {
            return Err(invalid(alloc::format!("entry {i} has concept weight {} below 1", e.label.weight)));
        }
    }
    let all = build_index(&entries, (0..entries.len()).collect(), &config)?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        groups.entry(e.label.object_category.clone()).or_default().push(i);
    }
    let mut by_category = BTreeMap::new();
    for (c, members) in groups {
        by_category.insert(c, build_index(&entries, members, &config)?);
    }
    Ok(PoseDatabase { entries, config, all, by_category })
}

impl PoseDatabase {
    pub fn entries(&self) -> &[PoseEntry] {
        &self.entries
    }

    pub fn config(&self) -> RetrievalConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distance used for retrieval between two pose vectors.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let start = if self.config.include_root { 0 } else { 1 };
        match self.config.distance {
            PoseDistance::Euclidean => {
                (3 * start..POSE_DIM).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt()
            }
            PoseDistance::Geodesic => (start..POSE_DIM / 3)
                .map(|j| {
                    let ra = rotation_from_axis_angle(&Vec3::new(a[3 * j], a[3 * j + 1], a[3 * j + 2]));
                    let rb = rotation_from_axis_angle(&Vec3::new(b[3 * j], b[3 * j + 1], b[3 * j + 2]));
                    rotation_angle_between(&ra, &rb).powi(2)
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Label of the single nearest database pose; ties go to the lowest
/// provenance id.
pub fn retrieve_action(db: &PoseDatabase, query: &[f64], category: Option<&str>) -> Result<Retrieval> {
    if query.len() != POSE_DIM || query.iter().any(|v| !v.is_finite()) {
        return Err(invalid(alloc::format!("query must have {POSE_DIM} finite values")));
    }
    let index = match category {
        None => &db.all,
        Some(c) => db.by_category.get(c).ok_or_else(|| Error::NoCandidate(String::from(c)))?,
    };
    let entry = match db.config.distance {
        PoseDistance::Euclidean => {
            let n = index.tree.nearest(&features(query, &db.config)).expect("indices are never empty");
            index.members[n.index]
        }
        PoseDistance::Geodesic => {
            let mut best = (f64::INFINITY, u64::MAX, usize::MAX);
            for &m in &index.members {
                let d = db.distance(query, &db.entries[m].pose);
                let key = (d, db.entries[m].provenance);
                if key.0 < best.0 || (key.0 == best.0 && key.1 < best.1) {
                    best = (key.0, key.1, m);
                }
            }
            best.2
        }
    };
    let e = &db.entries[entry];
    Ok(Retrieval {
        label: e.label.clone(),
        distance: db.distance(query, &e.pose),
        entry,
        provenance: e.provenance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub class: String,
    /// `[x0, y0, x1, y1]` in pixels.
    pub bbox: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageMeta {
    pub width: usize,
    pub height: usize,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissionConfig {
    /// Both image sides must exceed this many pixels.
    pub min_side: usize,
    /// Accepted person/object box IoU, exclusive bounds.
    pub iou_band: (f64, f64),
    pub person_class: &'static str,
}

impl Default for AdmissionConfig {
    fn default() -> Self {
        AdmissionConfig { min_side: 300, iou_band: (0.01, 0.95), person_class: "person" }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Admission {
    pub accepted: bool,
    /// First failed predicate: `min-dimension`, `person-count`,
    /// `object-count` or `iou-band`.
    pub reason: Option<&'static str>,
}

fn box_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let w = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let h = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = w * h;
    let area = |r: &[f64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    let union = area(a) + area(b) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Accepts images larger than the minimum side with exactly one person,
/// exactly one object and a person/object box IoU inside the band.
pub fn admit_database_image(meta: &ImageMeta, config: &AdmissionConfig) -> Result<Admission> {
    for (i, d) in meta.detections.iter().enumerate() {
        let b = d.bbox;
        if d.class.is_empty() || b.iter().any(|v| !v.is_finite()) || b[2] < b[0] || b[3] < b[1] {
            return Err(invalid(alloc::format!("malformed detection {i}")));
        }
    }
    let reject = |r| Ok(Admission { accepted: false, reason: Some(r) });
    if meta.width <= config.min_side || meta.height <= config.min_side {
        return reject("min-dimension");
    }
    let persons: Vec<&Detection> = meta.detections.iter().filter(|d| d.class == config.person_class).collect();
    let objects: Vec<&Detection> = meta.detections.iter().filter(|d| d.class != config.person_class).collect();
    if persons.len() != 1 {
        return reject("person-count");
    }
    if objects.len() != 1 {
        return reject("object-count");
    }
    let iou = box_iou(&persons[0].bbox, &objects[0].bbox);
    if !(iou > config.iou_band.0 && iou < config.iou_band.1) {
        return reject("iou-band");
    }
    Ok(Admission { accepted: true, reason: None })
}
