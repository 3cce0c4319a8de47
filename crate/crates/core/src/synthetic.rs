//! A procedurally built "sit on chair" scene with known ground truth, used
//! for tests, fixtures and demos.

use alloc::string::ToString;
use core::f64::consts::PI;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[allow(unused_imports)]
use num_traits::Float;

use crate::body::{BodyModelEvaluator, BodyParams, BuiltinBody, Camera};
use crate::error::Result;
use crate::geometry::shapes::lattice_box;
use crate::geometry::{PartLabeledMesh, PartMeshBuilder, RigidSimTransform};
use crate::math::{axis_angle_from_rotation, rotation_from_axis_angle, Vec3};
use crate::priors::InteractionMap;
use crate::scene::{render_silhouette, HumanInstance, Interaction, MaskTarget, ObjectInstance, ScalePriors, SceneState};

/// Chair height in meters, equal to the chair size prior.
pub const CHAIR_HEIGHT: f64 = 0.85;

/// Hips flexed, knees bent, arms down.
pub fn sitting_pose() -> BodyParams {
    let mut p = BodyParams::default();
    let a = 100f64.to_radians();
    let mut set = |j: usize, v: [f64; 3]| p.pose[3 * j..3 * j + 3].copy_from_slice(&v);
    set(1, [-a, 0.0, 0.0]);
    set(2, [-a, 0.0, 0.0]);
    set(4, [a, 0.0, 0.0]);
    set(5, [a, 0.0, 0.0]);
    set(16, [0.0, 0.0, -1.2]);
    set(17, [0.0, 0.0, 1.2]);
    p
}

/// Chair in the seated body's root frame: the seat top matches the hips
/// patch and the backrest front matches the lower back patch.
fn chair_in_body_frame() -> Result<PartLabeledMesh> {
    let mut b = PartMeshBuilder::new();
    let seat = b.part("chair seat");
    let back = b.part("chair back");
    let base = b.part("chair base");
    let (v, f, l) = lattice_box(Vec3::new(-0.17, -0.20, -0.15), Vec3::new(0.17, -0.16, 0.15), [16, 2, 14]);
    b.add(&v, &f, |i| if l[i][1] == 2 { seat } else { base });
    let (v, f, l) = lattice_box(Vec3::new(-0.15, 0.13, -0.18), Vec3::new(0.15, 0.26, -0.15), [14, 6, 1]);
    b.add(&v, &f, |i| if l[i][2] == 1 { back } else { base });
    for (x, z) in [(0.13, 0.11), (-0.16, 0.11), (0.13, -0.14), (-0.16, -0.14)] {
        let (v, f, _) = lattice_box(Vec3::new(x, -0.55, z), Vec3::new(x + 0.03, -0.20, z + 0.03), [1, 4, 1]);
        b.add(&v, &f, |_| base);
    }
    for x in [0.12, -0.15] {
        let (v, f, _) = lattice_box(Vec3::new(x, -0.55, -0.21), Vec3::new(x + 0.03, 0.30, -0.18), [1, 10, 1]);
        b.add(&v, &f, |_| base);
    }
    b.build()
}

/// Canonical chair exemplar (centered, longest side one) and the transform
/// that places it under the seated body's root frame.
pub fn chair_exemplar() -> Result<(PartLabeledMesh, RigidSimTransform)> {
    let chair = chair_in_body_frame()?;
    let bounds = chair.mesh.bounding_box().expect("non-empty");
    let center = bounds.center();
    let longest = bounds.extent().max();
    let canonical = chair.transformed(&RigidSimTransform { scale: 1.0 / longest, rotation: Vec3::zeros(), translation: -center / longest });
    Ok((canonical, RigidSimTransform { scale: longest, rotation: Vec3::zeros(), translation: center }))
}

pub fn default_camera() -> Camera {
    Camera { fx: 600.0, fy: 600.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    /// Ground-truth state.
    pub state: SceneState,
    pub body: BodyParams,
    pub priors: ScalePriors,
    pub ground_truth: RigidSimTransform,
}

/// Sit and stand interaction maps with normalized labels.
pub fn sit_map() -> InteractionMap {
    InteractionMap::new(
        "sit",
        "chair",
        alloc::vec![("chair seat".to_string(), "hips".to_string()), ("chair back".to_string(), "spine".to_string())],
    )
}

pub fn stand_map() -> InteractionMap {
    InteractionMap::new(
        "stand",
        "chair",
        alloc::vec![
            ("chair seat".to_string(), "leftFoot".to_string()),
            ("chair seat".to_string(), "rightFoot".to_string())
        ],
    )
}

/// Body seated on the chair, turned 30 degrees from the camera, about
/// 2.8 m away.
pub fn sit_on_chair(camera: Camera) -> Result<SyntheticScene> {
    let root = rotation_from_axis_angle(&Vec3::new(PI, 0.0, 0.0)) * rotation_from_axis_angle(&Vec3::new(0.0, PI / 6.0, 0.0));
    let mut body = sitting_pose();
    body.pose[..3].copy_from_slice(axis_angle_from_rotation(&root).as_slice());
    body.translation = Vec3::new(0.0, 0.1, 2.8);
    let out = BuiltinBody::default().evaluate(&body)?;
    let mesh = out.mesh.transformed(&RigidSimTransform { scale: 1.0, rotation: Vec3::zeros(), translation: body.translation });
    let human = HumanInstance::new(mesh, out.joints[0] + body.translation)?;
    let (exemplar, local) = chair_exemplar()?;
    let placement = RigidSimTransform::from_matrix(1.0, &root, body.translation);
    let ground_truth = placement.compose(&local);
    let mask = render_silhouette(&ground_truth.apply_all(exemplar.mesh.vertices()), exemplar.mesh.faces(), &camera)?;
    let object = ObjectInstance::new("chair", exemplar, ground_truth, MaskTarget::new(mask)?)?;
    let state = SceneState::new(camera, alloc::vec![human], alloc::vec![object], alloc::vec![Interaction {
        human: 0,
        object: 0,
        map: sit_map(),
    }])?;
    Ok(SyntheticScene { state, body, priors: ScalePriors::new(1, alloc::vec![CHAIR_HEIGHT]), ground_truth })
}

/// Random perturbation of exactly the given magnitudes: translation by
/// `translation` meters, rotation about the object center by `angle`
/// radians, scale by a factor of `1 +- scale`.
pub fn perturb(t: &RigidSimTransform, seed: u64, translation: f64, angle: f64, scale: f64) -> RigidSimTransform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = || loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            break v / n;
        }
    };
    let dt = unit() * translation;
    let axis = unit();
    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let r = rotation_from_axis_angle(&(axis * angle)) * t.rotation_matrix();
    RigidSimTransform::from_matrix(t.scale * (1.0 + sign * scale), &r, t.translation + dt)
}
