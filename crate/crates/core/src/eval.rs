//! Reconstruction accuracy: the predicted human is aligned to the ground
//! truth with a similarity transform, the same transform is applied to the
//! objects, and Chamfer distances are reported in centimeters.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::geometry::{one_way_chamfer, procrustes_align, symmetric_chamfer, ChamferMode, RigidSimTransform};
use crate::math::Vec3;
use crate::scene::SceneState;

/// Which Chamfer terms enter the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChamferSides {
    /// Mean of the prediction-to-truth and truth-to-prediction terms.
    #[default]
    Symmetric,
    /// Prediction to truth only.
    OneWay,
}

impl ChamferSides {
    pub fn label(self) -> &'static str {
        match self {
            ChamferSides::Symmetric => "symmetric",
            ChamferSides::OneWay => "one-way",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanPoints {
    pub vertices: Vec<Vec3>,
    /// Used for alignment when vertex counts differ.
    pub joints: Vec<Vec3>,
}

/// World-frame points of one reconstructed (or ground-truth) scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reconstruction {
    pub humans: Vec<HumanPoints>,
    pub objects: Vec<Vec<Vec3>>,
}

impl Reconstruction {
    /// Scaled human vertices and posed object vertices of a scene state.
    pub fn from_state(state: &SceneState) -> Self {
        Reconstruction {
            humans: state.humans.iter().map(|h| HumanPoints { vertices: h.vertices(), joints: Vec::new() }).collect(),
            objects: state.objects.iter().map(|o| o.vertices()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub human_cm: f64,
    /// Mean over objects.
    pub object_cm: f64,
    pub per_object_cm: Vec<f64>,
    /// Prediction-to-truth alignment.
    pub alignment: RigidSimTransform,
}

fn chamfer(a: &[Vec3], b: &[Vec3], sides: ChamferSides) -> Result<f64> {
    match sides {
        ChamferSides::Symmetric => symmetric_chamfer(a, b, ChamferMode::Unsquared),
        ChamferSides::OneWay => one_way_chamfer(a, b),
    }
}

fn correspondences(pred: &[HumanPoints], gt: &[HumanPoints]) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let stacked = |hs: &[HumanPoints], f: fn(&HumanPoints) -> &Vec<Vec3>| -> Vec<Vec3> {
        hs.iter().flat_map(|h| f(h).iter().copied()).collect()
    };
    let vertex_counts_match = pred.iter().zip(gt).all(|(p, g)| p.vertices.len() == g.vertices.len() && !p.vertices.is_empty());
    if vertex_counts_match {
        return Ok((stacked(pred, |h| &h.vertices), stacked(gt, |h| &h.vertices)));
    }
    let joint_counts_match = pred.iter().zip(gt).all(|(p, g)| p.joints.len() == g.joints.len() && !p.joints.is_empty());
    if joint_counts_match {
        return Ok((stacked(pred, |h| &h.joints), stacked(gt, |h| &h.joints)));
    }
    Err(invalid("human vertices and joints both lack a one-to-one correspondence with the ground truth"))
}

pub fn evaluate_reconstruction(pred: &Reconstruction, gt: &Reconstruction, sides: ChamferSides) -> Result<Metrics> {
    if pred.humans.len() != gt.humans.len() || pred.objects.len() != gt.objects.len() {
        return Err(invalid(alloc::format!(
            "prediction has {} humans and {} objects, ground truth {} and {}",
            pred.humans.len(),
            pred.objects.len(),
            gt.humans.len(),
            gt.objects.len()
        )));
    }
    if pred.humans.is_empty() {
        return Err(invalid("evaluation needs at least one human"));
    }
    let (src, dst) = correspondences(&pred.humans, &gt.humans)?;
    let alignment = procrustes_align(&src, &dst)?;
    let mut human = 0.0;
    for (p, g) in pred.humans.iter().zip(&gt.humans) {
        human += chamfer(&alignment.apply_all(&p.vertices), &g.vertices, sides)?;
    }
    let per_object_cm = pred
        .objects
        .iter()
        .zip(&gt.objects)
        .map(|(p, g)| Ok(100.0 * chamfer(&alignment.apply_all(p), g, sides)?))
        .collect::<Result<Vec<_>>>()?;
    let object_cm =
        if per_object_cm.is_empty() { 0.0 } else { per_object_cm.iter().sum::<f64>() / per_object_cm.len() as f64 };
    Ok(Metrics { human_cm: 100.0 * human / pred.humans.len() as f64, object_cm, per_object_cm, alignment })
}

/// Mean and standard deviation of the metrics of one action label.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSummary {
    pub action: String,
    pub count: usize,
    pub human_mean: f64,
    pub human_std: f64,
    pub object_mean: f64,
    pub object_std: f64,
}

/// Mean and sample standard deviation (zero for a single frame).
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-action aggregates, sorted by action label.
pub fn aggregate_by_action<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Metrics)>) -> Vec<ActionSummary> {
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (action, m) in rows {
        let g = groups.entry(action).or_default();
        g.0.push(m.human_cm);
        g.1.push(m.object_cm);
    }
    groups
        .into_iter()
        .map(|(action, (h, o))| {
            let (human_mean, human_std) = mean_std(&h);
            let (object_mean, object_std) = mean_std(&o);
            ActionSummary { action: action.into(), count: h.len(), human_mean, human_std, object_mean, object_std }
        })
        .collect()
}
