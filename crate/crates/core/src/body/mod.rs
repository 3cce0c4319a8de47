//! Perspective projection, the 2D keypoint energy and keypoint-driven body
//! refinement over a pluggable body model.

mod builtin;
mod camera;
mod fit;
mod model;

pub use builtin::BuiltinBody;
pub use camera::{project_perspective, Camera};
pub use fit::{
    keypoint_energy, keypoint_energy_and_gradient, refine_body, BodyGradient, Keypoints2d, RefineConfig,
    RefineFailure, RefineOutcome,
};
pub use model::{
    BodyModelEvaluator, BodyOutput, BodyParams, JointJacobian, PoseVector, NUM_JOINTS, PARAM_DIM, POSE_DIM,
    SHAPE_DIM, SMPL_PARENTS, SMPL_PARTS,
};
