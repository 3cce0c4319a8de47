//! JSON documents read and written by the pipeline. Every reader reports
//! schema violations with the path of the offending field.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use hoi_core::body::{BodyParams, Camera, Keypoints2d, NUM_JOINTS, POSE_DIM, SHAPE_DIM};
use hoi_core::geometry::RigidSimTransform;
use hoi_core::scene::{LossBreakdown, LossWeights, SceneConfig};
use hoi_core::{Vec2, Vec3};

use crate::error::{io_error, HoiError, Result};

pub(crate) fn schema_error(file: &Path, field: &str, message: impl Into<String>) -> HoiError {
    HoiError::Schema { file: file.to_path_buf(), field: field.to_string(), message: message.into() }
}

/// Joins a serde path and a missing field name.
fn field_path(path: &str, message: &str) -> String {
    let missing = message
        .strip_prefix("missing field `")
        .and_then(|rest| rest.split('`').next());
    match (path, missing) {
        (".", Some(f)) => f.to_string(),
        (p, Some(f)) => format!("{p}.{f}"),
        (p, None) => p.to_string(),
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str, file: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let message = match message.find(" at line ") {
            Some(i) => message[..i].to_string(),
            None => message,
        };
        schema_error(file, &field_path(&path, &message), message)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_json(&text, path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    crate::mesh_io::write_file(path, &(text + "\n"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraDto {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraDto {
    pub fn to_camera(&self, file: &Path, field: &str) -> Result<Camera> {
        Camera::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            .map_err(|e| schema_error(file, field, e.to_string()))
    }
}

impl From<&Camera> for CameraDto {
    fn from(c: &Camera) -> Self {
        CameraDto { fx: c.fx, fy: c.fy, cx: c.cx, cy: c.cy, width: c.width, height: c.height }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDto {
    pub scale: f64,
    /// Axis-angle, radians.
    pub rotation: [f64; 3],
    pub translation: [f64; 3],
}

impl From<&RigidSimTransform> for TransformDto {
    fn from(t: &RigidSimTransform) -> Self {
        TransformDto { scale: t.scale, rotation: t.rotation.into(), translation: t.translation.into() }
    }
}

impl TransformDto {
    pub fn to_transform(&self, file: &Path, field: &str) -> Result<RigidSimTransform> {
        RigidSimTransform::new(self.scale, Vec3::from(self.rotation), Vec3::from(self.translation))
            .map_err(|e| schema_error(file, field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyParamsDto {
    pub betas: Vec<f64>,
    pub pose: Vec<f64>,
    pub translation: [f64; 3],
}

impl From<&BodyParams> for BodyParamsDto {
    fn from(p: &BodyParams) -> Self {
        BodyParamsDto { betas: p.betas.to_vec(), pose: p.pose.to_vec(), translation: p.translation.into() }
    }
}

impl BodyParamsDto {
    pub fn to_params(&self, file: &Path) -> Result<BodyParams> {
        if self.betas.len() != SHAPE_DIM {
            return Err(schema_error(file, "betas", format!("expected {SHAPE_DIM} values, got {}", self.betas.len())));
        }
        if self.pose.len() != POSE_DIM {
            return Err(schema_error(file, "pose", format!("expected {POSE_DIM} values, got {}", self.pose.len())));
        }
        let mut p = BodyParams { translation: Vec3::from(self.translation), ..BodyParams::default() };
        p.betas.copy_from_slice(&self.betas);
        p.pose.copy_from_slice(&self.pose);
        p.validate().map_err(|e| schema_error(file, "pose", e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypointsDto {
    /// Name of the detector skeleton, for the record.
    #[serde(default = "default_convention")]
    pub convention: String,
    pub points: Vec<[f64; 2]>,
    pub confidences: Vec<f64>,
}

fn default_convention() -> String {
    "smpl24".into()
}

impl KeypointsDto {
    /// Keypoints in body-joint order. `joint_map[j]` is the detector index
    /// of body joint `j`; joints without a detection get confidence zero.
    /// Without a map the detector order must match the body joints.
    pub fn to_keypoints(&self, joint_map: Option<&[Option<usize>]>, file: &Path) -> Result<Keypoints2d> {
        if self.points.len() != self.confidences.len() {
            return Err(schema_error(file, "confidences", "must have one value per point"));
        }
        let (points, conf) = match joint_map {
            None => {
                if self.points.len() != NUM_JOINTS {
                    return Err(schema_error(
                        file,
                        "points",
                        format!("expected {NUM_JOINTS} points without a joint map, got {}", self.points.len()),
                    ));
                }
                (self.points.iter().map(|p| Vec2::new(p[0], p[1])).collect(), self.confidences.clone())
            }
            Some(map) => {
                if map.len() != NUM_JOINTS {
                    return Err(schema_error(file, "joint_map", format!("expected {NUM_JOINTS} entries")));
                }
                let mut pts = Vec::with_capacity(NUM_JOINTS);
                let mut conf = Vec::with_capacity(NUM_JOINTS);
                for m in map {
                    match m {
                        Some(i) if *i < self.points.len() => {
                            pts.push(Vec2::new(self.points[*i][0], self.points[*i][1]));
                            conf.push(self.confidences[*i]);
                        }
                        Some(i) => return Err(schema_error(file, "joint_map", format!("index {i} out of range"))),
                        None => {
                            pts.push(Vec2::zeros());
                            conf.push(0.0);
                        }
                    }
                }
                (pts, conf)
            }
        };
        Keypoints2d::new(points, conf).map_err(|e| schema_error(file, "points", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanDto {
    /// Initial body parameters from the regressor.
    pub body: PathBuf,
    pub keypoints: PathBuf,
    /// Body model; only `builtin` is available.
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub joint_map: Option<Vec<Option<usize>>>,
    /// Scale prior of the body.
    #[serde(default = "one")]
    pub size_prior: f64,
}

fn default_model() -> String {
    "builtin".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDto {
    pub category: String,
    /// Exemplar set directory.
    pub exemplars: PathBuf,
    pub mask: PathBuf,
    /// Index of the interacting human.
    #[serde(default)]
    pub human: usize,
    /// Skips retrieval for this object.
    #[serde(default)]
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerDto {
    pub steps: usize,
    pub lr: f64,
    /// Weights of the normal, penetration, scale and reprojection terms.
    pub lambda: [f64; 4],
    pub contact_weight: f64,
    pub contact_normal_cos_max: f64,
    pub optimize_human_scale: bool,
    pub refine_iterations: usize,
    /// Exemplar candidates optimized per object.
    pub top_n: usize,
    pub seed: u64,
}

impl Default for OptimizerDto {
    fn default() -> Self {
        let c = SceneConfig::default();
        let w = c.weights;
        OptimizerDto {
            steps: c.steps,
            lr: c.lr,
            lambda: [w.normal, w.penetration, w.scale, w.reprojection],
            contact_weight: w.contact,
            contact_normal_cos_max: c.contact_normal_cos_max,
            optimize_human_scale: c.optimize_human_scale,
            refine_iterations: hoi_core::body::RefineConfig::default().iterations,
            top_n: hoi_core::exemplars::DEFAULT_TOP_N,
            seed: 0,
        }
    }
}

impl OptimizerDto {
    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            steps: self.steps,
            lr: self.lr,
            weights: LossWeights {
                contact: self.contact_weight,
                normal: self.lambda[0],
                penetration: self.lambda[1],
                scale: self.lambda[2],
                reprojection: self.lambda[3],
            },
            contact_normal_cos_max: self.contact_normal_cos_max,
            optimize_human_scale: self.optimize_human_scale,
            ..SceneConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalDto {
    pub include_root: bool,
    pub geodesic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDto {
    pub camera: CameraDto,
    pub humans: Vec<HumanDto>,
    pub objects: Vec<ObjectDto>,
    pub priors_cache: PathBuf,
    /// Needed unless every object has an action.
    #[serde(default)]
    pub pose_database: Option<PathBuf>,
    #[serde(default)]
    pub retrieval: RetrievalDto,
    /// Model id of the completion service.
    #[serde(default = "default_llm")]
    pub llm_model: String,
    #[serde(default)]
    pub optimizer: OptimizerDto,
    /// Reconstruction file of the true scene, for evaluation.
    #[serde(default)]
    pub ground_truth: Option<PathBuf>,
}

pub fn default_llm() -> String {
    "text-davinci-002".into()
}

/// A reconstructed scene on disk: world-frame meshes plus optional joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionDto {
    #[serde(default)]
    pub camera: Option<CameraDto>,
    pub humans: Vec<HumanMeshDto>,
    pub objects: Vec<ObjectMeshDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanMeshDto {
    pub mesh: PathBuf,
    #[serde(default)]
    pub joints: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectMeshDto {
    pub mesh: PathBuf,
    #[serde(default)]
    pub category: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossDto {
    pub contact: f64,
    pub normal: f64,
    pub penetration: f64,
    pub scale: f64,
    pub reprojection: f64,
    pub total: f64,
}

impl From<&LossBreakdown> for LossDto {
    fn from(l: &LossBreakdown) -> Self {
        LossDto {
            contact: l.contact,
            normal: l.normal,
            penetration: l.penetration,
            scale: l.scale,
            reprojection: l.reprojection,
            total: l.total,
        }
    }
}

/// Resolves `p` against the directory of `file` unless it is absolute.
pub fn resolve(file: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        file.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene(json: &str) -> Result<SceneDto> {
        parse_json(json, Path::new("scene.json"))
    }

    const GOOD: &str = r#"{
        "camera": {"fx": 600, "fy": 600, "cx": 320, "cy": 240, "width": 640, "height": 480},
        "humans": [{"body": "b.json", "keypoints": "k.json"}],
        "objects": [{"category": "chair", "exemplars": "ex", "mask": "m.png"}],
        "priors_cache": "p.jsonl"
    }"#;

    #[test]
    fn defaults_follow_the_optimizer_settings() {
        let s = scene(GOOD).unwrap();
        assert_eq!(s.optimizer.steps, 500);
        assert_eq!(s.optimizer.lr, 2e-3);
        assert_eq!(s.optimizer.lambda, [0.01, 0.01, 0.01, 0.0005]);
        assert_eq!(s.humans[0].model, "builtin");
        assert_eq!(s.optimizer.scene_config(), SceneConfig::default());
    }

    #[test]
    fn missing_field_is_named_with_its_path() {
        let err = scene(&GOOD.replace(r#", "mask": "m.png""#, "")).unwrap_err();
        match err {
            HoiError::Schema { field, .. } => assert_eq!(field, "objects[0].mask"),
            e => panic!("{e}"),
        }
        let err = scene(&GOOD.replace(r#""priors_cache": "p.jsonl""#, r#""priors_cache": 3"#)).unwrap_err();
        assert!(matches!(err, HoiError::Schema { ref field, .. } if field == "priors_cache"), "{err}");
        let err = scene(&GOOD.replace("\"humans\"", "\"humanz\"")).unwrap_err();
        assert!(err.to_string().contains("humanz"), "{err}");
    }

    #[test]
    fn body_lengths_are_checked() {
        let dto = BodyParamsDto { betas: vec![0.0; 10], pose: vec![0.0; 71], translation: [0.0; 3] };
        let err = dto.to_params(Path::new("b.json")).unwrap_err();
        assert!(matches!(err, HoiError::Schema { ref field, .. } if field == "pose"));
    }

    #[test]
    fn joint_map_fills_missing_joints_with_zero_confidence() {
        let dto = KeypointsDto { convention: "coco".into(), points: vec![[1.0, 2.0], [3.0, 4.0]], confidences: vec![0.5, 0.9] };
        let mut map = vec![None; NUM_JOINTS];
        map[15] = Some(1);
        let kp = dto.to_keypoints(Some(&map), Path::new("k.json")).unwrap();
        assert_eq!(kp.points[15], Vec2::new(3.0, 4.0));
        assert_eq!(kp.confidences[15], 0.9);
        assert_eq!(kp.confidences.iter().filter(|&&c| c == 0.0).count(), NUM_JOINTS - 1);
        assert!(dto.to_keypoints(None, Path::new("k.json")).is_err());
    }
}
