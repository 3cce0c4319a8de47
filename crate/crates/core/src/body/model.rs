use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::geometry::PartLabeledMesh;
use crate::math::Vec3;

pub const NUM_JOINTS: usize = 24;
pub const POSE_DIM: usize = 3 * NUM_JOINTS;
pub const SHAPE_DIM: usize = 10;
/// Shape coefficients followed by pose components.
pub const PARAM_DIM: usize = SHAPE_DIM + POSE_DIM;

/// Joint-rotation vector: 24 axis-angle triples, root first.
pub type PoseVector = [f64; POSE_DIM];

/// Kinematic tree of the 24-joint skeleton; `-1` marks the root.
pub const SMPL_PARENTS: [i32; NUM_JOINTS] =
    [-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21];

/// Part names, indexed by joint.
pub const SMPL_PARTS: [&str; NUM_JOINTS] = [
    "hips",
    "leftUpLeg",
    "rightUpLeg",
    "spine",
    "leftLeg",
    "rightLeg",
    "spine1",
    "leftFoot",
    "rightFoot",
    "spine2",
    "leftToeBase",
    "rightToeBase",
    "neck",
    "leftShoulder",
    "rightShoulder",
    "head",
    "leftArm",
    "rightArm",
    "leftForeArm",
    "rightForeArm",
    "leftHand",
    "rightHand",
    "leftHandIndex1",
    "rightHandIndex1",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    pub betas: [f64; SHAPE_DIM],
    pub pose: PoseVector,
    /// Camera-frame position of the root joint, meters.
    pub translation: Vec3,
}

impl Default for BodyParams {
    fn default() -> Self {
        BodyParams { betas: [0.0; SHAPE_DIM], pose: [0.0; POSE_DIM], translation: Vec3::zeros() }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<()> {
        if self.betas.iter().chain(&self.pose).chain(self.translation.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(invalid("non-finite body parameter"))
        }
    }

    /// Shape and pose packed as `[betas, pose]`.
    pub fn shape_pose(&self) -> [f64; PARAM_DIM] {
        let mut out = [0.0; PARAM_DIM];
        out[..SHAPE_DIM].copy_from_slice(&self.betas);
        out[SHAPE_DIM..].copy_from_slice(&self.pose);
        out
    }

    pub fn set_shape_pose(&mut self, packed: &[f64]) {
        self.betas.copy_from_slice(&packed[..SHAPE_DIM]);
        self.pose.copy_from_slice(&packed[SHAPE_DIM..PARAM_DIM]);
    }

    pub fn joint_rotation(&self, j: usize) -> Vec3 {
        Vec3::new(self.pose[3 * j], self.pose[3 * j + 1], self.pose[3 * j + 2])
    }
}

/// Posed mesh and joints in the body frame (root joint at the origin,
/// before translation).
#[derive(Debug, Clone, PartialEq)]
pub struct BodyOutput {
    pub mesh: PartLabeledMesh,
    pub joints: Vec<Vec3>,
}

/// Derivatives of every joint position with respect to `[betas, pose]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointJacobian {
    data: Vec<Vec3>,
    joints: usize,
}

impl JointJacobian {
    pub fn zeros(joints: usize) -> Self {
        JointJacobian { data: alloc::vec![Vec3::zeros(); joints * PARAM_DIM], joints }
    }

    pub fn joints(&self) -> usize {
        self.joints
    }

    pub fn get(&self, joint: usize, param: usize) -> Vec3 {
        self.data[joint * PARAM_DIM + param]
    }

    pub fn get_mut(&mut self, joint: usize, param: usize) -> &mut Vec3 {
        &mut self.data[joint * PARAM_DIM + param]
    }
}

/// A body model: `(betas, pose) -> (part-labeled mesh, joints)`.
///
/// Implementations must be deterministic. The joint Jacobian defaults to
/// central finite differences; analytic implementations should override it.
pub trait BodyModelEvaluator {
    fn num_joints(&self) -> usize {
        NUM_JOINTS
    }

    fn evaluate(&self, params: &BodyParams) -> Result<BodyOutput>;

    fn joints(&self, params: &BodyParams) -> Result<Vec<Vec3>> {
        Ok(self.evaluate(params)?.joints)
    }

    fn joint_jacobian(&self, params: &BodyParams) -> Result<JointJacobian> {
        let h = 1e-6;
        let mut jac = JointJacobian::zeros(self.num_joints());
        let base = params.shape_pose();
        for p in 0..PARAM_DIM {
            let mut plus = *params;
            let mut minus = *params;
            let mut v = base;
            v[p] += h;
            plus.set_shape_pose(&v);
            v[p] -= 2.0 * h;
            minus.set_shape_pose(&v);
            let (jp, jm) = (self.joints(&plus)?, self.joints(&minus)?);
            for j in 0..jac.joints() {
                *jac.get_mut(j, p) = (jp[j] - jm[j]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}
