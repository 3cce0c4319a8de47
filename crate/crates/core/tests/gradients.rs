//! Analytic gradients against central finite differences, with the
//! correspondences and active sets held at the base state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hoi_core::body::{
    keypoint_energy, keypoint_energy_and_gradient, BodyModelEvaluator, BodyParams, BuiltinBody, Keypoints2d, PARAM_DIM,
    SHAPE_DIM,
};
use hoi_core::geometry::closest_point_on_triangle;
use hoi_core::scene::*;
use hoi_core::synthetic::{default_camera, perturb, sit_on_chair, SyntheticScene};
use hoi_core::{Vec2, Vec3};

const STATES: usize = 20;
const TOLERANCE: f64 = 1e-4;
const H: f64 = 1e-6;

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

fn random_state(base: &SyntheticScene, rng: &mut ChaCha8Rng) -> SceneState {
    let mut s = base.state.clone();
    let seed = rng.random();
    s.objects[0].transform = perturb(
        &base.ground_truth,
        seed,
        rng.random_range(0.02..0.2),
        rng.random_range(1.0f64..15.0).to_radians(),
        rng.random_range(0.02..0.2),
    );
    s.humans[0].scale = rng.random_range(0.85..1.15);
    s
}

fn numeric_gradient(state: &SceneState, priors: &ScalePriors, lin: &Linearization, term: LossTerm) -> Vec<f64> {
    (0..state.param_len())
        .map(|i| {
            let eval = |h: f64| {
                let mut s = state.clone();
                let mut d = vec![0.0; state.param_len()];
                d[i] = h;
                s.apply_delta(&d);
                evaluate_term(&s, priors, lin, term).unwrap().0
            };
            (eval(H) - eval(-H)) / (2.0 * H)
        })
        .collect()
}

/// Smallest distance from a contact vertex to its body part's triangles.
/// The distance has a kink at zero, so finite differences need room.
fn min_contact_distance(state: &SceneState) -> f64 {
    let mut best = f64::INFINITY;
    for it in &state.interactions {
        let (h, o) = (&state.humans[it.human], &state.objects[it.object]);
        let body = h.vertices();
        let posed = o.vertices();
        for (op, bp) in &it.map.pairs {
            let part = h.mesh.part_id(bp).unwrap();
            let labels = h.mesh.part_of_vertex();
            let faces: Vec<_> = h.mesh.mesh.faces().iter().filter(|f| f.iter().all(|&i| labels[i as usize] == part)).collect();
            for k in o.mesh.vertex_indices_of(o.mesh.part_id(op).unwrap()) {
                for f in &faces {
                    let [a, b, c] = f.map(|i| body[i as usize]);
                    best = best.min((closest_point_on_triangle(&posed[k], &a, &b, &c) - posed[k]).norm());
                }
            }
        }
    }
    best
}

/// Whether `term` is non-trivially active at the linearization.
fn engaged(state: &SceneState, lin: &Linearization, term: LossTerm) -> bool {
    match term {
        LossTerm::Contact => lin.active_pairs() > 0 && min_contact_distance(state) > 1e-3,
        LossTerm::Normal => lin.active_pairs() > 0,
        LossTerm::Penetration => lin.penetrating_vertices() > 0,
        LossTerm::Scale | LossTerm::Reprojection => true,
    }
}

fn check_term(term: LossTerm) {
    let base = sit_on_chair(default_camera()).unwrap();
    let config = SceneConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for _ in 0..500 {
        if checked == STATES {
            break;
        }
        let state = random_state(&base, &mut rng);
        let lin = linearize(&state, &config).unwrap();
        if !engaged(&state, &lin, term) {
            continue;
        }
        let (value, analytic) = evaluate_term(&state, &base.priors, &lin, term).unwrap();
        assert!(value.is_finite());
        let numeric = numeric_gradient(&state, &base.priors, &lin, term);
        let err = relative_error(&analytic, &numeric);
        assert!(err < TOLERANCE, "{term:?} state {checked}: relative error {err}\n{analytic:?}\n{numeric:?}");
        checked += 1;
    }
    assert_eq!(checked, STATES, "{term:?}: not enough engaged states");
}

#[test]
fn contact_gradient() {
    check_term(LossTerm::Contact);
}

#[test]
fn normal_gradient() {
    check_term(LossTerm::Normal);
}

#[test]
fn penetration_gradient() {
    check_term(LossTerm::Penetration);
}

#[test]
fn scale_gradient() {
    check_term(LossTerm::Scale);
}

#[test]
fn reprojection_gradient() {
    check_term(LossTerm::Reprojection);
}

#[test]
fn vertex_contact_gradient() {
    let base = sit_on_chair(default_camera()).unwrap();
    let config = SceneConfig { contact_target: ContactTarget::Vertex, ..SceneConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..STATES {
        let state = random_state(&base, &mut rng);
        let lin = linearize(&state, &config).unwrap();
        let (_, analytic) = evaluate_term(&state, &base.priors, &lin, LossTerm::Contact).unwrap();
        let numeric = numeric_gradient(&state, &base.priors, &lin, LossTerm::Contact);
        assert!(relative_error(&analytic, &numeric) < TOLERANCE);
    }
}

fn packed_gradient(p: &BodyParams, body: &BuiltinBody, kp: &Keypoints2d) -> (Vec<f64>, Vec<f64>) {
    let cam = default_camera();
    let (_, g) = keypoint_energy_and_gradient(p, body, kp, &cam).unwrap();
    let mut analytic: Vec<f64> = g.betas.iter().chain(g.pose.iter()).copied().collect();
    analytic.extend(g.translation.iter());
    let energy = |q: &BodyParams| keypoint_energy(q, body, kp, &cam).unwrap();
    let numeric = (0..PARAM_DIM + 3)
        .map(|i| {
            let shifted = |h: f64| {
                let mut q = p.clone();
                if i < PARAM_DIM {
                    let mut packed = q.shape_pose();
                    packed[i] += h;
                    q.set_shape_pose(&packed);
                } else {
                    q.translation[i - PARAM_DIM] += h;
                }
                energy(&q)
            };
            (shifted(H) - shifted(-H)) / (2.0 * H)
        })
        .collect();
    (analytic, numeric)
}

#[test]
fn keypoint_energy_gradient() {
    let body = BuiltinBody::default();
    let cam = default_camera();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for state in 0..STATES {
        let mut p = BodyParams::default();
        for b in p.betas.iter_mut().take(SHAPE_DIM) {
            *b = rng.random_range(-1.0..1.0);
        }
        for (k, v) in p.pose.iter_mut().enumerate() {
            *v = if k < 3 { 0.0 } else { rng.random_range(-0.4..0.4) };
        }
        p.pose[0] = std::f64::consts::PI;
        p.translation = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(2.5..4.0));
        let joints = body.joints(&p).unwrap();
        let points = joints
            .iter()
            .map(|j| cam.project(&(j + p.translation)).unwrap() + Vec2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)))
            .collect();
        let conf = (0..joints.len()).map(|_| rng.random_range(0.1..1.0)).collect();
        let kp = Keypoints2d::new(points, conf).unwrap();
        let (analytic, numeric) = packed_gradient(&p, &body, &kp);
        let err = relative_error(&analytic, &numeric);
        assert!(err < TOLERANCE, "state {state}: relative error {err}");
    }
}
