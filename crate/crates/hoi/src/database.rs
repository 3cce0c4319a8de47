//! Pose databases as JSON lines, one record per pose.

use std::path::Path;

use serde::{Deserialize, Serialize};

use hoi_core::retrieval::{build_pose_index, ActionLabel, PoseDatabase, PoseEntry, RetrievalConfig};

use crate::error::{format_error, io_error, HoiError, Result};
use crate::schema::parse_json;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    /// 72 axis-angle values.
    pub pose: Vec<f64>,
    pub action: String,
    pub category: String,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub provenance: u64,
}

fn unit_weight() -> f64 {
    1.0
}

impl PoseRecord {
    pub fn entry(&self) -> PoseEntry {
        PoseEntry {
            pose: self.pose.clone(),
            label: ActionLabel { verb: self.action.clone(), object_category: self.category.clone(), weight: self.weight },
            provenance: self.provenance,
        }
    }
}

pub fn read_pose_records(path: &Path) -> Result<Vec<PoseRecord>> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PoseRecord = parse_json(line, path).map_err(|e| match e {
            HoiError::Schema { file, field, message } => {
                HoiError::Schema { file, field: format!("line {}: {field}", n + 1), message }
            }
            e => e,
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Loads and indexes a database; records are validated by the index
/// builder and failures name the offending line.
pub fn read_pose_database(path: &Path, config: RetrievalConfig) -> Result<PoseDatabase> {
    let records = read_pose_records(path)?;
    let lines: Vec<usize> = {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(n, _)| n + 1).collect()
    };
    build_pose_index(records.iter().map(PoseRecord::entry).collect(), config).map_err(|e| {
        let msg = e.to_string();
        let line = msg
            .split_whitespace()
            .skip_while(|w| *w != "entry")
            .nth(1)
            .and_then(|i| i.parse::<usize>().ok())
            .and_then(|i| lines.get(i).copied())
            .unwrap_or(0);
        format_error(path, line, msg)
    })
}

pub fn write_pose_records(path: &Path, records: &[PoseRecord]) -> Result<()> {
    let text: String = records.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect();
    crate::mesh_io::write_file(path, &text)
}
