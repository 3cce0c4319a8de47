use std::f64::consts::PI;

use hoi_core::body::Camera;
use hoi_core::geometry::shapes::{lattice_box, sphere};
use hoi_core::geometry::{symmetric_chamfer, ChamferMode, PartLabeledMesh, PartMeshBuilder, RigidSimTransform, TriangleMesh};
use hoi_core::image::BinaryMask;
use hoi_core::math::{rotation_from_axis_angle, rotation_angle_between};
use hoi_core::priors::{InteractionMap, SizePrior};
use hoi_core::scene::*;
use hoi_core::synthetic::{default_camera, sit_on_chair};
use hoi_core::{Error, Vec3};

const DEPTH: f64 = 3.0;

fn camera() -> Camera {
    default_camera()
}

fn map(pairs: &[(&str, &str)]) -> InteractionMap {
    InteractionMap::new("test", "box", pairs.iter().map(|(o, b)| (o.to_string(), b.to_string())).collect())
}

/// Flat slab whose top face is the "top" part.
fn pad() -> HumanInstance {
    let mut b = PartMeshBuilder::new();
    let top = b.part("top");
    let rest = b.part("body");
    let c = Vec3::new(0.0, 0.0, DEPTH);
    let (v, f, l) = lattice_box(c + Vec3::new(-0.5, -0.1, -0.5), c + Vec3::new(0.5, 0.0, 0.5), [4, 1, 4]);
    b.add(&v, &f, |i| if l[i][1] == 1 { top } else { rest });
    HumanInstance::new(b.build().unwrap(), c + Vec3::new(0.0, -0.05, 0.0)).unwrap()
}

/// Canonical 0.4 x 0.1 x 0.4 box, bottom face labeled "bottom".
fn block() -> PartLabeledMesh {
    let mut b = PartMeshBuilder::new();
    let bottom = b.part("bottom");
    let rest = b.part("rest");
    let (v, f, l) = lattice_box(Vec3::new(-0.2, -0.05, -0.2), Vec3::new(0.2, 0.05, 0.2), [2, 1, 2]);
    b.add(&v, &f, |i| if l[i][1] == 0 { bottom } else { rest });
    b.build().unwrap()
}

fn object_at(mesh: PartLabeledMesh, transform: RigidSimTransform, cam: &Camera) -> ObjectInstance {
    let mask = render_silhouette(&transform.apply_all(mesh.mesh.vertices()), mesh.mesh.faces(), cam).unwrap();
    ObjectInstance::new("box", mesh, transform, MaskTarget::new(mask).unwrap()).unwrap()
}

/// Block resting `gap` above the pad, rotated by `rot` about its center.
fn plate_scene(gap: f64, rot: Vec3, pairs: &[(&str, &str)]) -> SceneState {
    let cam = camera();
    let t = RigidSimTransform::new(1.0, rot, Vec3::new(0.0, 0.05 + gap, DEPTH)).unwrap();
    let object = object_at(block(), t, &cam);
    SceneState::new(cam, vec![pad()], vec![object], vec![Interaction { human: 0, object: 0, map: map(pairs) }]).unwrap()
}

fn touching() -> Vec<(&'static str, &'static str)> {
    vec![("bottom", "top")]
}

#[test]
fn coincident_parts_have_zero_contact() {
    let s = plate_scene(0.0, Vec3::zeros(), &touching());
    let (v, _) = loss_contact(&s, &SceneConfig::default()).unwrap();
    assert!(v.abs() < 1e-12);
}

#[test]
fn ten_centimeter_gap_gives_ten_centimeters() {
    for target in [ContactTarget::Vertex, ContactTarget::Surface] {
        let s = plate_scene(0.10, Vec3::zeros(), &touching());
        let config = SceneConfig { contact_target: target, ..SceneConfig::default() };
        let (v, g) = loss_contact(&s, &config).unwrap();
        let expected = match target {
            ContactTarget::Surface => 0.10,
            ContactTarget::Vertex => brute_force_vertex_contact(&s),
        };
        assert!((v - expected).abs() < 1e-12, "{target:?}: {v} vs {expected}");
        if target == ContactTarget::Surface {
            // Pulling straight down: unit gradient on the vertical translation.
            assert!((g[5] - 1.0).abs() < 1e-9, "{g:?}");
        }
    }
}

/// Mean distance from each "bottom" vertex to its nearest "top" vertex.
fn brute_force_vertex_contact(s: &SceneState) -> f64 {
    let (h, o) = (&s.humans[0], &s.objects[0]);
    let top: Vec<Vec3> = h.mesh.vertex_indices_of(h.mesh.part_id("top").unwrap()).iter().map(|&i| h.mesh.mesh.vertices()[i]).collect();
    let posed = o.vertices();
    let bottom = o.mesh.vertex_indices_of(o.mesh.part_id("bottom").unwrap());
    let sum: f64 = bottom.iter().map(|&k| top.iter().map(|t| (posed[k] - t).norm()).fold(f64::INFINITY, f64::min)).sum();
    sum / bottom.len() as f64
}

#[test]
fn inactive_indicator_gates_contact_and_normal() {
    // Bottom face turned to point up, same way as the pad's top.
    let s = plate_scene(0.3, Vec3::new(0.0, 0.0, PI), &touching());
    let config = SceneConfig::default();
    assert_eq!(loss_contact(&s, &config).unwrap().0, 0.0);
    assert_eq!(loss_normal(&s, &config).unwrap().0, 0.0);
    assert_eq!(linearize(&s, &config).unwrap().active_pairs(), 0);
}

#[test]
fn normal_term_examples() {
    let config = SceneConfig::default();
    let opposing = plate_scene(0.0, Vec3::zeros(), &touching());
    assert!(loss_normal(&opposing, &config).unwrap().0.abs() < 1e-12);

    // Part normals 120 degrees apart: 1 + cos(120) = 0.5.
    let tilted = plate_scene(0.3, Vec3::new(0.0, 0.0, PI / 3.0), &touching());
    assert!((loss_normal(&tilted, &config).unwrap().0 - 0.5).abs() < 1e-12);

    let same = plate_scene(0.3, Vec3::new(0.0, 0.0, PI), &touching());
    let forced = SceneConfig { contact_normal_cos_max: 2.0, ..config };
    assert!((loss_normal(&same, &forced).unwrap().0 - 2.0).abs() < 1e-12);
}

#[test]
fn empty_map_gives_zero_contact_and_normal() {
    let s = plate_scene(0.2, Vec3::new(0.1, 0.2, 0.3), &[]);
    let config = SceneConfig::default();
    assert_eq!(loss_contact(&s, &config).unwrap().0, 0.0);
    assert_eq!(loss_normal(&s, &config).unwrap().0, 0.0);
}

#[test]
fn missing_part_names_the_pair() {
    let s = plate_scene(0.0, Vec3::zeros(), &[("bottom", "hand")]);
    match loss_contact(&s, &SceneConfig::default()) {
        Err(Error::MissingPart { object_part, body_part }) => {
            assert_eq!((object_part.as_str(), body_part.as_str()), ("bottom", "hand"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn scale_loss_examples() {
    let mut s = plate_scene(0.0, Vec3::zeros(), &touching());
    s.objects[0].transform.scale = 1.0;
    let priors = ScalePriors::new(1, vec![0.85]);
    let (v, g) = loss_scale(&s, &priors).unwrap();
    assert!((v - 0.0225).abs() < 1e-12);
    assert!((g[3] - 0.3).abs() < 1e-12);

    let at_prior = ScalePriors::new(1, vec![1.0]);
    assert_eq!(loss_scale(&s, &at_prior).unwrap().0, 0.0);

    s.humans[0].scale = 1.0 + 0.03;
    let (_, g) = loss_scale(&s, &at_prior).unwrap();
    assert!((g[OBJECT_PARAMS] - 0.06).abs() < 1e-12);

    let missing = ScalePriors { humans: vec![1.0], objects: vec![] };
    assert!(matches!(loss_scale(&s, &missing), Err(Error::MissingPrior(_))));
}

#[test]
fn weighted_total_examples() {
    let w = LossWeights::default();
    assert_eq!(LossBreakdown::new(0.0, 0.0, 0.0, 0.0, 0.0, &w).total, 0.0);
    assert_eq!(LossBreakdown::new(1.0, 0.0, 0.0, 0.0, 0.0, &w).total, 1.0);
    assert!((LossBreakdown::new(0.0, 0.0, 0.0, 2.0, 0.0, &w).total - 0.02).abs() < 1e-15);

    let s = plate_scene(0.05, Vec3::new(0.0, 0.3, 0.2), &touching());
    let priors = ScalePriors::new(1, vec![0.7]);
    let b = total_loss(&s, &priors, &SceneConfig::default()).unwrap();
    let manual = b.contact + 0.01 * b.normal + 0.01 * b.penetration + 0.01 * b.scale + 0.0005 * b.reprojection;
    assert!((b.total - manual).abs() < 1e-9);
}

fn sphere_body(radius: f64) -> HumanInstance {
    let (v, f) = sphere(Vec3::new(0.0, 0.0, DEPTH), radius, 12, 24);
    let mesh = PartLabeledMesh::single_part(TriangleMesh::new(v, f).unwrap(), "body").unwrap();
    HumanInstance::new(mesh, Vec3::new(0.0, 0.0, DEPTH)).unwrap()
}

/// Trilinear value at the sphere center from exact sphere distances at the
/// surrounding nodes. The grid has an even node count, so the center sits
/// in the middle of a cell and every corner weighs 1/8.
fn coarse_center_value(body: &HumanInstance, radius: f64) -> f64 {
    let half = body.sdf().cell_size() * 0.5;
    half.norm() - radius
}

/// A few loose points, no faces.
fn probe(points: Vec<Vec3>, at: Vec3) -> ObjectInstance {
    let mesh = PartLabeledMesh::single_part(TriangleMesh::new(points, vec![]).unwrap(), "probe").unwrap();
    let t = RigidSimTransform::new(1.0, Vec3::zeros(), at).unwrap();
    let mask = BinaryMask::from_fn(640, 480, |x, y| (310..330).contains(&x) && (230..250).contains(&y));
    ObjectInstance::new("probe", mesh, t, MaskTarget::new(mask).unwrap()).unwrap()
}

#[test]
fn penetration_at_body_center_is_the_sampled_depth() {
    let body = sphere_body(0.3);
    let center = Vec3::new(0.0, 0.0, DEPTH);
    let f = body.sdf().sample(&center);
    assert!((f - coarse_center_value(&body, 0.3)).abs() < 0.01, "{f}");
    let s = SceneState::new(camera(), vec![body], vec![probe(vec![Vec3::zeros()], center)], vec![]).unwrap();
    let (v, _) = loss_penetration(&s, &SceneConfig::default()).unwrap();
    assert!((v - f.abs()).abs() < 1e-12);
}

#[test]
fn penetration_is_zero_outside_and_falls_along_an_exit_path() {
    let config = SceneConfig::default();
    let cluster = vec![Vec3::zeros(), Vec3::new(0.02, 0.0, 0.0), Vec3::new(0.0, 0.02, 0.0), Vec3::new(0.0, 0.0, 0.02)];
    let mut previous = f64::INFINITY;
    for i in 0..=60 {
        let at = Vec3::new(0.01 * i as f64, 0.0, DEPTH);
        let s = SceneState::new(camera(), vec![sphere_body(0.3)], vec![probe(cluster.clone(), at)], vec![]).unwrap();
        let lin = linearize(&s, &config).unwrap();
        let (v, _) = loss_penetration(&s, &config).unwrap();
        assert!(v <= previous + 1e-12, "step {i}: {v} > {previous}");
        assert_eq!(v == 0.0, lin.penetrating_vertices() == 0);
        previous = v;
    }
    assert_eq!(previous, 0.0);
}

#[test]
fn reprojection_of_self_rendered_mask_is_small() {
    let scene = sit_on_chair(default_camera()).unwrap();
    let (v, _) = loss_reprojection(&scene.state, &SceneConfig::default()).unwrap();
    assert!(v < 1e-3, "{v}");
}

#[test]
fn reprojection_far_from_mask_exceeds_distance_bound() {
    let cam = camera();
    let placed = RigidSimTransform::new(1.0, Vec3::new(0.3, 0.4, 0.0), Vec3::new(-0.6, -0.3, DEPTH)).unwrap();
    let mut s = plate_scene(0.0, Vec3::zeros(), &[]);
    s.objects[0] = object_at(block(), placed, &cam);
    // Move the object to the opposite corner of the image.
    s.objects[0].transform.translation = Vec3::new(0.6, 0.35, DEPTH);
    let (lo, hi) = s.objects[0].target().mask().bounding_box().unwrap();
    let points = s.objects[0].vertices();
    let gap = points
        .iter()
        .map(|p| {
            let q = cam.project(p).unwrap();
            let dx = (lo.x - q.x).max(q.x - hi.x).max(0.0);
            let dy = (lo.y - q.y).max(q.y - hi.y).max(0.0);
            dx.hypot(dy)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(gap > 50.0);
    let (v, _) = loss_reprojection(&s, &SceneConfig::default()).unwrap();
    assert!(v >= gap / cam.diagonal(), "{v} < {}", gap / cam.diagonal());
}

#[test]
fn reprojection_is_invariant_to_image_translation() {
    let s = plate_scene(0.0, Vec3::new(0.2, 0.5, 0.1), &[]);
    let config = SceneConfig::default();
    let (v0, _) = loss_reprojection(&s, &config).unwrap();
    // Object pose off the mask so every term contributes.
    let mut moved = s.clone();
    moved.objects[0].transform.translation += Vec3::new(0.05, -0.03, 0.1);
    let (base, _) = loss_reprojection(&moved, &config).unwrap();
    assert!(base > v0);
    for (dx, dy) in [(7i64, -4i64), (-13, 9), (25, 20)] {
        let mut shifted = moved.clone();
        shifted.camera.cx += dx as f64;
        shifted.camera.cy += dy as f64;
        let mask = shifted.objects[0].target().mask().shifted(dx, dy);
        let o = &moved.objects[0];
        shifted.objects[0] = ObjectInstance::new("box", o.mesh.clone(), o.transform, MaskTarget::new(mask).unwrap()).unwrap();
        let (v, _) = loss_reprojection(&shifted, &config).unwrap();
        assert!((v - base).abs() < 1e-6, "({dx}, {dy}): {v} vs {base}");
    }
}

#[test]
fn object_behind_camera_is_an_error() {
    let mut s = plate_scene(0.0, Vec3::zeros(), &[]);
    s.objects[0].transform.translation.z = -2.0;
    assert!(matches!(loss_reprojection(&s, &SceneConfig::default()), Err(Error::BehindCamera { .. })));
}

#[test]
fn trace_has_one_entry_per_step_plus_the_start() {
    let s = plate_scene(0.05, Vec3::new(0.0, 0.1, 0.0), &touching());
    let priors = ScalePriors::new(1, vec![1.0]);
    for steps in [0, 1, 7] {
        let out = optimize_scene(&s, &priors, &SceneConfig { steps, ..SceneConfig::default() }).unwrap();
        assert_eq!(out.trace.len(), steps + 1);
        assert!(out.diagnostic.is_none());
    }
}

#[test]
fn zero_gradient_state_is_a_fixed_point() {
    // No contacts, no penetration, scales at their priors and no mask term:
    // every gradient is exactly zero.
    let mut s = plate_scene(0.4, Vec3::new(0.1, 0.2, 0.3), &[]);
    s.interactions.clear();
    let priors = ScalePriors::new(1, vec![1.0]);
    let mut config = SceneConfig { steps: 100, ..SceneConfig::default() };
    config.weights.reprojection = 0.0;
    let out = optimize_scene(&s, &priors, &config).unwrap();
    let (a, b) = (out.state.objects[0].transform, s.objects[0].transform);
    // Only the axis-angle round trip touches the rotation.
    assert!((a.rotation - b.rotation).norm() < 1e-12);
    assert_eq!((a.scale, a.translation), (b.scale, b.translation));
    assert_eq!(out.state.humans[0].scale, 1.0);
}

#[test]
fn ground_truth_stays_put() {
    // ADAM rescales tiny gradients, so at the kinks of the distance terms
    // it wanders on the order of the learning rate but no further.
    let scene = sit_on_chair(default_camera()).unwrap();
    let config = SceneConfig { steps: 200, optimize_human_scale: false, ..SceneConfig::default() };
    let out = optimize_scene(&scene.state, &scene.priors, &config).unwrap();
    let truth = scene.ground_truth.apply_all(scene.state.objects[0].mesh.mesh.vertices());
    let moved = symmetric_chamfer(&out.state.objects[0].vertices(), &truth, ChamferMode::Unsquared).unwrap();
    assert!(moved < 5e-3, "{moved}");
}

#[test]
fn non_finite_loss_returns_best_state_with_diagnostic() {
    let s = plate_scene(0.05, Vec3::zeros(), &touching());
    let priors = ScalePriors::new(1, vec![f64::NAN]);
    let out = optimize_scene(&s, &priors, &SceneConfig { steps: 5, ..SceneConfig::default() }).unwrap();
    assert!(out.diagnostic.unwrap().contains("non-finite"));
    assert!(out.trace.is_empty());
    assert_eq!(out.state.objects[0].transform, s.objects[0].transform);
}

#[test]
fn frozen_human_scale_stays_put() {
    let s = plate_scene(0.05, Vec3::zeros(), &touching());
    let priors = ScalePriors::new(1, vec![1.0]);
    let config = SceneConfig { steps: 20, optimize_human_scale: false, ..SceneConfig::default() };
    let out = optimize_scene(&s, &priors, &config).unwrap();
    assert_eq!(out.state.humans[0].scale, 1.0);
    assert!(out.trace.last().unwrap().contact < out.trace[0].contact);
}

#[test]
fn scaled_body_distance_is_the_scaled_field() {
    // s F(r + (x - r) / s) is the distance to the body scaled by s about r.
    let mut body = sphere_body(0.3);
    body.scale = 1.5;
    let c = Vec3::new(0.0, 0.0, DEPTH);
    let f = body.signed_distance(&c);
    assert!((f - 1.5 * body.sdf().sample(&c)).abs() < 1e-12);
    assert!((f - 1.5 * coarse_center_value(&body, 0.3)).abs() < 0.015, "{f}");
}

fn canonical_cube() -> PartLabeledMesh {
    let (v, f, _) = lattice_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), [1, 1, 1]);
    PartLabeledMesh::single_part(TriangleMesh::new(v, f).unwrap(), "cube").unwrap()
}

fn centered_square(half: usize) -> MaskTarget {
    let (cx, cy) = (320usize, 240usize);
    MaskTarget::new(BinaryMask::from_fn(640, 480, |x, y| x + half >= cx && x < cx + half && y + half >= cy && y < cy + half))
        .unwrap()
}

#[test]
fn init_centroid_on_principal_point_lands_on_the_optical_axis() {
    let out = init_object_pose(&canonical_cube(), &centered_square(40), &camera(), &SizePrior::new("box", 0.5).unwrap(), 0, INIT_LR)
        .unwrap();
    let t = out.initial.translation;
    assert!(t.x.abs() < 1e-9 && t.y.abs() < 1e-9, "{t:?}");
    // 0.5 m cube covering 80 px at f = 600.
    assert!((t.z - 600.0 * 0.5 / 80.0).abs() < 1e-9);
    assert!(!out.unreliable);
}

#[test]
fn init_doubling_the_size_prior_doubles_the_depth() {
    let mask = centered_square(30);
    let z = |size: f64| {
        init_object_pose(&canonical_cube(), &mask, &camera(), &SizePrior::new("box", size).unwrap(), 0, INIT_LR)
            .unwrap()
            .initial
            .translation
            .z
    };
    assert!((z(1.6) / z(0.8) - 2.0).abs() < 1e-12);
}

#[test]
fn init_recovers_a_rendered_pose() {
    let cam = camera();
    let (chair, _) = hoi_core::synthetic::chair_exemplar().unwrap();
    let rot = rotation_from_axis_angle(&Vec3::new(0.0, 0.08, 0.0)) * rotation_from_axis_angle(&Vec3::new(PI, 0.0, 0.0));
    let truth = RigidSimTransform::from_matrix(0.85, &rot, Vec3::new(0.15, -0.1, 3.2));
    let mask = render_silhouette(&truth.apply_all(chair.mesh.vertices()), chair.mesh.faces(), &cam).unwrap();
    let target = MaskTarget::new(mask).unwrap();
    let out = init_object_pose(&chair, &target, &cam, &SizePrior::new("chair", 0.85).unwrap(), INIT_STEPS, INIT_LR).unwrap();
    let t = out.transform;
    assert!((t.translation - truth.translation).norm() < 0.05 * truth.translation.z, "{:?}", t.translation);
    assert!(rotation_angle_between(&t.rotation_matrix(), &rot) < 10f64.to_radians());
    assert!(out.iou > 0.6, "{}", out.iou);
}

#[test]
fn init_flags_small_masks_and_rejects_empty_ones() {
    let size = SizePrior::new("box", 0.5).unwrap();
    let out = init_object_pose(&canonical_cube(), &centered_square(3), &camera(), &size, 0, INIT_LR).unwrap();
    assert!(out.unreliable);
    assert!(MaskTarget::new(BinaryMask::new(640, 480)).is_err());
}
