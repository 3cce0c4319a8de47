use alloc::vec::Vec;

use super::model::{
    BodyModelEvaluator, BodyOutput, BodyParams, JointJacobian, NUM_JOINTS, SHAPE_DIM, SMPL_PARENTS, SMPL_PARTS,
};
use crate::error::Result;
use crate::geometry::shapes::{capsule, lattice_box, sphere};
use crate::geometry::{PartLabeledMesh, PartMeshBuilder};
use crate::math::{rotation_derivatives, rotation_from_axis_angle, Mat3, Vec3};

/// Rest offset of each joint from its parent (meters; y up, +x to the
/// body's left, facing +z).
const REST_OFFSETS: [[f64; 3]; NUM_JOINTS] = [
    [0.0, 0.0, 0.0],
    [0.09, -0.08, 0.0],
    [-0.09, -0.08, 0.0],
    [0.0, 0.12, -0.02],
    [0.0, -0.40, 0.0],
    [0.0, -0.40, 0.0],
    [0.0, 0.14, 0.0],
    [0.0, -0.42, -0.02],
    [0.0, -0.42, -0.02],
    [0.0, 0.12, 0.02],
    [0.0, -0.05, 0.13],
    [0.0, -0.05, 0.13],
    [0.0, 0.16, -0.02],
    [0.07, 0.10, -0.01],
    [-0.07, 0.10, -0.01],
    [0.0, 0.10, 0.04],
    [0.11, 0.03, -0.01],
    [-0.11, 0.03, -0.01],
    [0.26, 0.0, 0.0],
    [-0.26, 0.0, 0.0],
    [0.25, 0.0, 0.0],
    [-0.25, 0.0, 0.0],
    [0.09, 0.0, 0.0],
    [-0.09, 0.0, 0.0],
];

/// Shape coefficient that stretches each joint's offset besides the global
/// length coefficient: 2 legs, 3 arms, 4 torso, 0 none.
const LENGTH_GROUP: [usize; NUM_JOINTS] = [0, 0, 0, 4, 2, 2, 4, 2, 2, 4, 2, 2, 4, 4, 4, 4, 3, 3, 3, 3, 3, 3, 3, 3];

const LENGTH_RATE: f64 = 0.06;
const GIRTH_RATE: f64 = 0.05;

/// Simplified articulated body: boxes for pelvis and torso, capsules for
/// limbs, 24 joints with SMPL part names.
///
/// Shape coefficients: 0 overall length, 1 girth (mesh only), 2 legs,
/// 3 arms, 4 torso; the remaining five have no effect. Part labels follow
/// the parent joint of each bone, except that only the bottom face of the
/// pelvis is `hips` and only the back face of the lower torso is `spine`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinBody {
    pub slices: usize,
    pub cap_rings: usize,
}

impl Default for BuiltinBody {
    fn default() -> Self {
        BuiltinBody { slices: 12, cap_rings: 3 }
    }
}

struct Kinematics {
    joints: [Vec3; NUM_JOINTS],
    global: [Mat3; NUM_JOINTS],
    offsets: [Vec3; NUM_JOINTS],
    lengths: [f64; NUM_JOINTS],
}

fn length_factor(j: usize, betas: &[f64; SHAPE_DIM]) -> f64 {
    let g = LENGTH_GROUP[j];
    let group = if g == 0 { 1.0 } else { 1.0 + LENGTH_RATE * betas[g] };
    (1.0 + LENGTH_RATE * betas[0]) * group
}

fn parent(j: usize) -> Option<usize> {
    (SMPL_PARENTS[j] >= 0).then(|| SMPL_PARENTS[j] as usize)
}

fn is_ancestor(a: usize, mut j: usize) -> bool {
    while let Some(p) = parent(j) {
        if p == a {
            return true;
        }
        j = p;
    }
    false
}

impl BuiltinBody {
    fn kinematics(&self, params: &BodyParams) -> Kinematics {
        let mut k = Kinematics {
            joints: [Vec3::zeros(); NUM_JOINTS],
            global: [Mat3::identity(); NUM_JOINTS],
            offsets: [Vec3::zeros(); NUM_JOINTS],
            lengths: [1.0; NUM_JOINTS],
        };
        for j in 0..NUM_JOINTS {
            k.lengths[j] = length_factor(j, &params.betas);
            k.offsets[j] = Vec3::from(REST_OFFSETS[j]) * k.lengths[j];
            let local = rotation_from_axis_angle(&params.joint_rotation(j));
            match parent(j) {
                None => k.global[j] = local,
                Some(p) => {
                    k.joints[j] = k.joints[p] + k.global[p] * k.offsets[j];
                    k.global[j] = k.global[p] * local;
                }
            }
        }
        k
    }

    fn mesh(&self, params: &BodyParams, k: &Kinematics) -> Result<PartLabeledMesh> {
        let girth = 1.0 + GIRTH_RATE * params.betas[1];
        let torso = length_factor(3, &params.betas);
        let mut b = PartMeshBuilder::new();
        let ids: Vec<u32> = SMPL_PARTS.iter().map(|n| b.part(n)).collect();
        let place = |j: usize, pts: &[Vec3]| -> Vec<Vec3> { pts.iter().map(|p| k.joints[j] + k.global[j] * p).collect() };

        // Pelvis: flat seat-facing bottom.
        let (v, f, l) = lattice_box(
            Vec3::new(-0.17 * girth, -0.16 * torso, -0.15 * girth),
            Vec3::new(0.17 * girth, 0.11 * torso, 0.15 * girth),
            [16, 9, 14],
        );
        b.add(&place(0, &v), &f, |i| match l[i] {
            [_, 0, _] => ids[0],
            [x, _, _] if x >= 8 => ids[1],
            _ => ids[2],
        });
        // Lower torso with a flat back.
        let (v, f, l) = lattice_box(
            Vec3::new(-0.15 * girth, 0.01 * torso, -0.13 * girth),
            Vec3::new(0.15 * girth, 0.14 * torso, 0.11 * girth),
            [14, 6, 11],
        );
        b.add(&place(3, &v), &f, |i| if l[i][2] == 0 { ids[3] } else { ids[6] });
        let (v, f, _) = lattice_box(
            Vec3::new(-0.17 * girth, 0.01 * torso, -0.12 * girth),
            Vec3::new(0.17 * girth, 0.26 * torso, 0.12 * girth),
            [8, 8, 6],
        );
        b.add(&place(6, &v), &f, |_| ids[9]);

        let bones: [(usize, usize, f64); 17] = [
            (9, 13, 0.045),
            (9, 14, 0.045),
            (12, 15, 0.05),
            (13, 16, 0.05),
            (14, 17, 0.05),
            (16, 18, 0.045),
            (17, 19, 0.045),
            (18, 20, 0.04),
            (19, 21, 0.04),
            (20, 22, 0.035),
            (21, 23, 0.035),
            (1, 4, 0.065),
            (2, 5, 0.065),
            (4, 7, 0.05),
            (5, 8, 0.05),
            (7, 10, 0.04),
            (8, 11, 0.04),
        ];
        for (p, c, r) in bones {
            let (v, f) = capsule(Vec3::zeros(), k.offsets[c], r * girth, self.slices, self.cap_rings);
            b.add(&place(p, &v), &f, |_| ids[p]);
        }
        let ends: [(usize, Vec3, f64); 5] = [
            (15, Vec3::new(0.0, 0.06, 0.0), 0.1),
            (22, Vec3::new(0.03, 0.0, 0.0), 0.025),
            (23, Vec3::new(-0.03, 0.0, 0.0), 0.025),
            (10, Vec3::new(0.0, 0.0, 0.03), 0.035),
            (11, Vec3::new(0.0, 0.0, 0.03), 0.035),
        ];
        for (j, c, r) in ends {
            let (v, f) = sphere(c * k.lengths[j], r * girth, 6, self.slices);
            b.add(&place(j, &v), &f, |_| ids[j]);
        }
        b.build()
    }
}

impl BodyModelEvaluator for BuiltinBody {
    fn evaluate(&self, params: &BodyParams) -> Result<BodyOutput> {
        params.validate()?;
        let k = self.kinematics(params);
        Ok(BodyOutput { mesh: self.mesh(params, &k)?, joints: k.joints.to_vec() })
    }

    fn joints(&self, params: &BodyParams) -> Result<Vec<Vec3>> {
        params.validate()?;
        Ok(self.kinematics(params).joints.to_vec())
    }

    fn joint_jacobian(&self, params: &BodyParams) -> Result<JointJacobian> {
        params.validate()?;
        let k = self.kinematics(params);
        let mut jac = JointJacobian::zeros(NUM_JOINTS);
        for a in 0..NUM_JOINTS {
            let parent_rot = parent(a).map_or(Mat3::identity(), |p| k.global[p]);
            let d = rotation_derivatives(&params.joint_rotation(a));
            for (i, di) in d.iter().enumerate() {
                let m = parent_rot * di * k.global[a].transpose();
                for j in 0..NUM_JOINTS {
                    if is_ancestor(a, j) {
                        *jac.get_mut(j, SHAPE_DIM + 3 * a + i) = m * (k.joints[j] - k.joints[a]);
                    }
                }
            }
        }
        for j in 0..NUM_JOINTS {
            let mut node = j;
            while let Some(p) = parent(node) {
                let base = Vec3::from(REST_OFFSETS[node]);
                let g = LENGTH_GROUP[node];
                let group = if g == 0 { 1.0 } else { 1.0 + LENGTH_RATE * params.betas[g] };
                *jac.get_mut(j, 0) += k.global[p] * base * (LENGTH_RATE * group);
                if g != 0 {
                    *jac.get_mut(j, g) += k.global[p] * base * (LENGTH_RATE * (1.0 + LENGTH_RATE * params.betas[0]));
                }
                node = p;
            }
        }
        Ok(jac)
    }
}
