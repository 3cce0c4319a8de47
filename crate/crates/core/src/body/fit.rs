#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::ToString;
use alloc::vec::Vec;

use super::camera::Camera;
use super::model::{BodyModelEvaluator, BodyParams, PARAM_DIM, POSE_DIM, SHAPE_DIM};
use crate::error::{invalid, Error, Result};
use crate::math::{Vec2, Vec3};
use crate::optim::Adam;

/// Detected 2D joints in pixels with per-joint confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct Keypoints2d {
    pub points: Vec<Vec2>,
    pub confidences: Vec<f64>,
}

impl Keypoints2d {
    pub fn new(points: Vec<Vec2>, confidences: Vec<f64>) -> Result<Self> {
        if points.len() != confidences.len() {
            return Err(invalid("one confidence per keypoint required"));
        }
        if confidences.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(invalid("confidences must be finite and non-negative"));
        }
        if points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(invalid("non-finite keypoint"));
        }
        Ok(Keypoints2d { points, confidences })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gradient of an energy with respect to the body parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyGradient {
    pub betas: [f64; SHAPE_DIM],
    pub pose: [f64; POSE_DIM],
    pub translation: Vec3,
}

fn residuals(
    joints: &[Vec3],
    translation: &Vec3,
    keypoints: &Keypoints2d,
    camera: &Camera,
) -> Result<(f64, Vec<Vec3>)> {
    if joints.len() != keypoints.len() {
        return Err(invalid(alloc::format!(
            "{} keypoints for a model with {} joints",
            keypoints.len(),
            joints.len()
        )));
    }
    let mut energy = 0.0;
    let mut grads = Vec::with_capacity(joints.len());
    for (i, j) in joints.iter().enumerate() {
        let x = j + translation;
        let u = camera.project(&x).map_err(|_| Error::BehindCamera { index: i, z: x.z })?;
        let r = u - keypoints.points[i];
        let c = keypoints.confidences[i];
        energy += c * r.norm_squared();
        let [du, dv] = camera.projection_jacobian(&x);
        grads.push((du * r.x + dv * r.y) * (2.0 * c));
    }
    Ok((energy, grads))
}

/// Confidence-weighted sum of squared pixel residuals between projected
/// model joints and detected keypoints.
pub fn keypoint_energy<M: BodyModelEvaluator + ?Sized>(
    params: &BodyParams,
    model: &M,
    keypoints: &Keypoints2d,
    camera: &Camera,
) -> Result<f64> {
    let joints = model.joints(params)?;
    Ok(residuals(&joints, &params.translation, keypoints, camera)?.0)
}

pub fn keypoint_energy_and_gradient<M: BodyModelEvaluator + ?Sized>(
    params: &BodyParams,
    model: &M,
    keypoints: &Keypoints2d,
    camera: &Camera,
) -> Result<(f64, BodyGradient)> {
    let joints = model.joints(params)?;
    let (energy, dx) = residuals(&joints, &params.translation, keypoints, camera)?;
    let jac = model.joint_jacobian(params)?;
    let mut packed = [0.0; PARAM_DIM];
    for (q, slot) in packed.iter_mut().enumerate() {
        *slot = dx.iter().enumerate().map(|(j, g)| g.dot(&jac.get(j, q))).sum();
    }
    let mut grad = BodyGradient {
        betas: [0.0; SHAPE_DIM],
        pose: [0.0; POSE_DIM],
        translation: dx.iter().sum(),
    };
    grad.betas.copy_from_slice(&packed[..SHAPE_DIM]);
    grad.pose.copy_from_slice(&packed[SHAPE_DIM..]);
    Ok((energy, grad))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub iterations: usize,
    pub lr: f64,
    pub pose_prior_weight: f64,
    pub shape_prior_weight: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { iterations: 200, lr: 1e-2, pose_prior_weight: 1e-3, shape_prior_weight: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub params: BodyParams,
    /// Energy before the first iteration and after each iteration.
    pub energy_trace: Vec<f64>,
    pub rejected_steps: usize,
}

const DIM: usize = PARAM_DIM + 3;

fn pack(p: &BodyParams) -> [f64; DIM] {
    let mut v = [0.0; DIM];
    v[..PARAM_DIM].copy_from_slice(&p.shape_pose());
    v[PARAM_DIM..].copy_from_slice(p.translation.as_slice());
    v
}

fn unpack(v: &[f64]) -> BodyParams {
    let mut p = BodyParams::default();
    p.set_shape_pose(&v[..PARAM_DIM]);
    p.translation = Vec3::new(v[PARAM_DIM], v[PARAM_DIM + 1], v[PARAM_DIM + 2]);
    p
}

/// Keypoint energy plus quadratic pulls toward the initial pose and shape.
fn objective<M: BodyModelEvaluator + ?Sized>(
    x: &[f64],
    init: &[f64; DIM],
    model: &M,
    keypoints: &Keypoints2d,
    camera: &Camera,
    config: &RefineConfig,
    with_gradient: bool,
) -> Result<(f64, [f64; DIM])> {
    let params = unpack(x);
    let weight = |q: usize| if q < SHAPE_DIM { config.shape_prior_weight } else { config.pose_prior_weight };
    let prior: f64 = (0..PARAM_DIM).map(|q| weight(q) * (x[q] - init[q]).powi(2)).sum();
    let mut grad = [0.0; DIM];
    let energy = if with_gradient {
        let (e, g) = keypoint_energy_and_gradient(&params, model, keypoints, camera)?;
        grad[..SHAPE_DIM].copy_from_slice(&g.betas);
        grad[SHAPE_DIM..PARAM_DIM].copy_from_slice(&g.pose);
        grad[PARAM_DIM..].copy_from_slice(g.translation.as_slice());
        for q in 0..PARAM_DIM {
            grad[q] += 2.0 * weight(q) * (x[q] - init[q]);
        }
        e
    } else {
        keypoint_energy(&params, model, keypoints, camera)?
    };
    Ok((energy + prior, grad))
}

/// Why refinement could not start, with the last parameters known to be
/// valid.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineFailure {
    pub error: Error,
    pub last_valid: BodyParams,
}

/// ADAM on keypoint energy plus priors. Steps that do not lower the energy
/// are rejected and halve the learning rate, so the trace never increases.
pub fn refine_body<M: BodyModelEvaluator + ?Sized>(
    init: &BodyParams,
    model: &M,
    keypoints: &Keypoints2d,
    camera: &Camera,
    config: &RefineConfig,
) -> core::result::Result<RefineOutcome, RefineFailure> {
    let fail = |error: Error| RefineFailure { error, last_valid: *init };
    init.validate().map_err(fail)?;
    let x0 = pack(init);
    let mut x = x0;
    let (mut energy, mut grad) = objective(&x, &x0, model, keypoints, camera, config, true).map_err(fail)?;
    if !energy.is_finite() {
        return Err(fail(Error::OptimizationFailure("initial energy is not finite".to_string())));
    }
    let mut adam = Adam::new(DIM, config.lr);
    let mut trace = alloc::vec![energy];
    let mut rejected = 0;
    for _ in 0..config.iterations {
        let delta = adam.update(&grad);
        let mut cand = x;
        for (c, d) in cand.iter_mut().zip(&delta) {
            *c += d;
        }
        match objective(&cand, &x0, model, keypoints, camera, config, true) {
            Ok((e, g)) if e.is_finite() && e <= energy => {
                x = cand;
                energy = e;
                grad = g;
                adam.lr = (adam.lr * 1.25).min(config.lr);
            }
            _ => {
                rejected += 1;
                adam.lr *= 0.5;
            }
        }
        trace.push(energy);
    }
    Ok(RefineOutcome { params: unpack(&x), energy_trace: trace, rejected_steps: rejected })
}
