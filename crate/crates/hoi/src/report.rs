//! Evaluation over a set of frames and its CSV reports.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hoi_core::eval::{aggregate_by_action, evaluate_reconstruction, ActionSummary, ChamferSides, Metrics};

use crate::error::Result;
use crate::pipeline::read_reconstruction;
use crate::schema::{read_json, resolve};

/// One frame of an evaluation manifest. Paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameEntry {
    pub name: String,
    pub action: String,
    pub prediction: PathBuf,
    pub ground_truth: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesManifest {
    pub frames: Vec<FrameEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub frame: String,
    pub action: String,
    pub human_cm: f64,
    pub object_cm: f64,
}

/// Per-frame metrics with a comment line naming the Chamfer variant.
pub fn frames_csv(rows: &[FrameRow], chamfer: &str) -> String {
    let mut s = format!("# chamfer: {chamfer}\nframe,action,human_cm,object_cm\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{}\n", r.frame, r.action, r.human_cm, r.object_cm));
    }
    s
}

pub fn actions_csv(summaries: &[ActionSummary], chamfer: &str) -> String {
    let mut s = format!("# chamfer: {chamfer}\naction,count,human_mean_cm,human_std_cm,object_mean_cm,object_std_cm\n");
    for a in summaries {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            a.action, a.count, a.human_mean, a.human_std, a.object_mean, a.object_std
        ));
    }
    s
}

pub fn evaluate_pair(prediction: &Path, ground_truth: &Path, sides: ChamferSides) -> Result<Metrics> {
    let (pred, _, _) = read_reconstruction(prediction)?;
    let (gt, _, _) = read_reconstruction(ground_truth)?;
    Ok(evaluate_reconstruction(&pred, &gt, sides)?)
}

/// Evaluates every frame of a manifest and aggregates by action.
pub fn evaluate_frames(manifest: &Path, sides: ChamferSides) -> Result<(Vec<FrameRow>, Vec<ActionSummary>)> {
    let m: FramesManifest = read_json(manifest)?;
    let mut metrics = Vec::new();
    for f in &m.frames {
        metrics.push(evaluate_pair(&resolve(manifest, &f.prediction), &resolve(manifest, &f.ground_truth), sides)?);
    }
    let rows = m
        .frames
        .iter()
        .zip(&metrics)
        .map(|(f, x)| FrameRow { frame: f.name.clone(), action: f.action.clone(), human_cm: x.human_cm, object_cm: x.object_cm })
        .collect();
    let summaries = aggregate_by_action(m.frames.iter().map(|f| f.action.as_str()).zip(&metrics));
    Ok((rows, summaries))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let rows = [FrameRow { frame: "f0".into(), action: "sit".into(), human_cm: 1.5, object_cm: 2.0 }];
        assert_eq!(frames_csv(&rows, "symmetric"), "# chamfer: symmetric\nframe,action,human_cm,object_cm\nf0,sit,1.5,2\n");
        let a = [ActionSummary {
            action: "sit".into(),
            count: 2,
            human_mean: 1.0,
            human_std: 0.5,
            object_mean: 2.0,
            object_std: 0.0,
        }];
        let csv = actions_csv(&a, "one-way");
        assert!(csv.starts_with("# chamfer: one-way\n"));
        assert!(csv.ends_with("sit,2,1,0.5,2,0\n"));
    }
}
