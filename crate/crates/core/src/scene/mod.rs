//! Joint scene fitting: object pose initialization from masks and the
//! weighted contact, normal, penetration, scale and reprojection objective
//! over per-object similarity transforms and per-human scales.

mod init;
mod losses;
mod silhouette;

use alloc::string::String;
use alloc::vec::Vec;

pub use init::{init_object_pose, InitOutcome, INIT_LR, INIT_STEPS, MIN_RELIABLE_MASK_PIXELS};
pub use losses::{
    linearize, loss_contact, loss_normal, loss_penetration, loss_reprojection, loss_scale, total_loss, evaluate_term,
    evaluate_frozen, Linearization, LossTerm,
};
pub use silhouette::{render_silhouette, MaskTarget, MIN_DEPTH};

use crate::body::Camera;
use crate::error::{invalid, Error, Result};
use crate::geometry::{Aabb, PartLabeledMesh, RigidSimTransform, SdfGrid};
use crate::math::{axis_angle_from_rotation, rotation_from_axis_angle, Vec3};
use crate::optim::Adam;
use crate::priors::InteractionMap;

pub const BODY_SDF_RESOLUTION: usize = 8;
/// Body SDF box padding as a fraction of the body extent on each side.
pub const BODY_SDF_PADDING: f64 = 0.1;
/// Parameters per object: rotation increment (3), scale, translation (3).
pub const OBJECT_PARAMS: usize = 7;
const MIN_SCALE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct HumanInstance {
    /// Posed body mesh in the camera frame at scale one.
    pub mesh: PartLabeledMesh,
    /// Center of the body scale (the root joint).
    pub root: Vec3,
    pub scale: f64,
    sdf: SdfGrid,
}

impl HumanInstance {
    pub fn new(mesh: PartLabeledMesh, root: Vec3) -> Result<Self> {
        let bounds = mesh.mesh.bounding_box().ok_or_else(|| invalid("empty body mesh"))?;
        let pad = bounds.extent() * BODY_SDF_PADDING;
        let padded = Aabb { min: bounds.min - pad, max: bounds.max + pad };
        let sdf = SdfGrid::from_mesh_in_box(&mesh.mesh, [BODY_SDF_RESOLUTION; 3], padded)?;
        Ok(HumanInstance { mesh, root, scale: 1.0, sdf })
    }

    pub fn sdf(&self) -> &SdfGrid {
        &self.sdf
    }

    pub fn scale_point(&self, p: &Vec3) -> Vec3 {
        self.root + (p - self.root) * self.scale
    }

    pub fn vertices(&self) -> Vec<Vec3> {
        self.mesh.mesh.vertices().iter().map(|p| self.scale_point(p)).collect()
    }

    /// Signed distance to the scaled body, `s F(r + (x - r) / s)` with `F`
    /// the unscaled body field.
    pub fn signed_distance(&self, x: &Vec3) -> f64 {
        self.scale * self.sdf.sample(&(self.root + (x - self.root) / self.scale))
    }
}

#[derive(Debug, Clone)]
pub struct ObjectInstance {
    pub category: String,
    /// Exemplar mesh in its canonical frame.
    pub mesh: PartLabeledMesh,
    pub transform: RigidSimTransform,
    target: MaskTarget,
}

impl ObjectInstance {
    pub fn new(category: &str, mesh: PartLabeledMesh, transform: RigidSimTransform, target: MaskTarget) -> Result<Self> {
        transform.validate()?;
        Ok(ObjectInstance { category: category.into(), mesh, transform, target })
    }

    pub fn target(&self) -> &MaskTarget {
        &self.target
    }

    pub fn vertices(&self) -> Vec<Vec3> {
        self.transform.apply_all(self.mesh.mesh.vertices())
    }

    pub fn posed_mesh(&self) -> PartLabeledMesh {
        self.mesh.transformed(&self.transform)
    }
}

/// Contact pairs between one human and one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub human: usize,
    pub object: usize,
    pub map: InteractionMap,
}

#[derive(Debug, Clone)]
pub struct SceneState {
    pub camera: Camera,
    pub humans: Vec<HumanInstance>,
    pub objects: Vec<ObjectInstance>,
    pub interactions: Vec<Interaction>,
}

impl SceneState {
    pub fn new(
        camera: Camera,
        humans: Vec<HumanInstance>,
        objects: Vec<ObjectInstance>,
        interactions: Vec<Interaction>,
    ) -> Result<Self> {
        camera.validate()?;
        for (i, it) in interactions.iter().enumerate() {
            if it.human >= humans.len() || it.object >= objects.len() {
                return Err(invalid(alloc::format!("interaction {i} refers to a missing instance")));
            }
        }
        let s = SceneState { camera, humans, objects, interactions };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for o in &self.objects {
            o.transform.validate()?;
        }
        if self.humans.iter().any(|h| !(h.scale > 0.0) || !h.scale.is_finite()) {
            return Err(invalid("human scales must be positive"));
        }
        Ok(())
    }

    pub fn param_len(&self) -> usize {
        OBJECT_PARAMS * self.objects.len() + self.humans.len()
    }

    /// Applies a parameter step: rotation increments compose on the left of
    /// the current rotation, scales and translations add. Scales are kept
    /// positive.
    pub fn apply_delta(&mut self, delta: &[f64]) {
        assert_eq!(delta.len(), self.param_len(), "parameter dimension mismatch");
        for (o, d) in self.objects.iter_mut().zip(delta.chunks_exact(OBJECT_PARAMS)) {
            let inc = rotation_from_axis_angle(&Vec3::new(d[0], d[1], d[2]));
            o.transform.rotation = axis_angle_from_rotation(&(inc * o.transform.rotation_matrix()));
            o.transform.scale = (o.transform.scale + d[3]).max(MIN_SCALE);
            o.transform.translation += Vec3::new(d[4], d[5], d[6]);
        }
        let base = OBJECT_PARAMS * self.objects.len();
        for (h, d) in self.humans.iter_mut().zip(&delta[base..]) {
            h.scale = (h.scale + d).max(MIN_SCALE);
        }
    }
}

/// Target scales for every instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalePriors {
    pub humans: Vec<f64>,
    pub objects: Vec<f64>,
}

impl ScalePriors {
    /// Unit human scale and the given object sizes.
    pub fn new(humans: usize, objects: Vec<f64>) -> Self {
        ScalePriors { humans: alloc::vec![1.0; humans], objects }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub contact: f64,
    pub normal: f64,
    pub penetration: f64,
    pub scale: f64,
    pub reprojection: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { contact: 1.0, normal: 0.01, penetration: 0.01, scale: 0.01, reprojection: 0.0005 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub steps: usize,
    pub lr: f64,
    pub weights: LossWeights,
    /// A pair may be in contact when the cosine between its part normals is
    /// below this value.
    pub contact_normal_cos_max: f64,
    pub optimize_human_scale: bool,
    pub contact_target: ContactTarget,
}

/// What an object contact vertex is pulled toward on its body part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContactTarget {
    /// The nearest body part vertex.
    Vertex,
    /// The nearest point on the body part's triangles. Matches `Vertex` on
    /// dense body meshes and avoids lattice-sized local minima on coarse ones.
    #[default]
    Surface,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            steps: 500,
            lr: 2e-3,
            weights: LossWeights::default(),
            contact_normal_cos_max: 0.0,
            optimize_human_scale: true,
            contact_target: ContactTarget::Surface,
        }
    }
}

/// Unweighted loss terms and their weighted total.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub contact: f64,
    pub normal: f64,
    pub penetration: f64,
    pub scale: f64,
    pub reprojection: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(contact: f64, normal: f64, penetration: f64, scale: f64, reprojection: f64, w: &LossWeights) -> Self {
        let total = w.contact * contact
            + w.normal * normal
            + w.penetration * penetration
            + w.scale * scale
            + w.reprojection * reprojection;
        LossBreakdown { contact, normal, penetration, scale, reprojection, total }
    }

    pub fn is_finite(&self) -> bool {
        [self.contact, self.normal, self.penetration, self.scale, self.reprojection, self.total]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub state: SceneState,
    /// Loss before the first step and after every step.
    pub trace: Vec<LossBreakdown>,
    /// Set when the run stopped early on a non-finite loss; `state` is then
    /// the best state seen.
    pub diagnostic: Option<String>,
}

/// ADAM over object similarity transforms and human scales. Correspondences
/// and active sets are recomputed before every step.
pub fn optimize_scene(state: &SceneState, priors: &ScalePriors, config: &SceneConfig) -> Result<OptimizeOutcome> {
    if !(config.lr > 0.0) {
        return Err(invalid("learning rate must be positive"));
    }
    state.validate()?;
    let mut current = state.clone();
    let mut adam = Adam::new(current.param_len(), config.lr);
    let mut trace = Vec::with_capacity(config.steps + 1);
    let mut best: Option<(f64, SceneState)> = None;
    let human_base = OBJECT_PARAMS * current.objects.len();
    for step in 0..=config.steps {
        let lin = linearize(&current, config)?;
        let (loss, mut grad) = evaluate_frozen(&current, priors, &lin, config)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            let (_, state) = best.unwrap_or((f64::NAN, current));
            return Ok(OptimizeOutcome {
                state,
                trace,
                diagnostic: Some(alloc::format!("non-finite loss at step {step}; returning the best state seen")),
            });
        }
        trace.push(loss);
        if best.as_ref().is_none_or(|(b, _)| loss.total < *b) {
            best = Some((loss.total, current.clone()));
        }
        if step == config.steps {
            break;
        }
        if !config.optimize_human_scale {
            grad[human_base..].iter_mut().for_each(|g| *g = 0.0);
        }
        let delta = adam.update(&grad);
        current.apply_delta(&delta);
    }
    Ok(OptimizeOutcome { state: current, trace, diagnostic: None })
}

pub(crate) fn missing_prior(what: &str, i: usize) -> Error {
    Error::MissingPrior(alloc::format!("{what} {i}"))
}
