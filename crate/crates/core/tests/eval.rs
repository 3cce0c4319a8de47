use proptest::prelude::*;

use hoi_core::eval::*;
use hoi_core::geometry::RigidSimTransform;
use hoi_core::synthetic::{default_camera, sit_on_chair};
use hoi_core::Vec3;

fn truth() -> Reconstruction {
    Reconstruction::from_state(&sit_on_chair(default_camera()).unwrap().state)
}

fn moved(r: &Reconstruction, t: &RigidSimTransform) -> Reconstruction {
    Reconstruction {
        humans: r.humans.iter().map(|h| HumanPoints { vertices: t.apply_all(&h.vertices), joints: t.apply_all(&h.joints) }).collect(),
        objects: r.objects.iter().map(|o| t.apply_all(o)).collect(),
    }
}

#[test]
fn identical_scenes_score_zero() {
    let gt = truth();
    for sides in [ChamferSides::Symmetric, ChamferSides::OneWay] {
        let m = evaluate_reconstruction(&gt, &gt, sides).unwrap();
        assert!(m.human_cm < 1e-9 && m.object_cm < 1e-9, "{m:?}");
    }
}

#[test]
fn object_offset_after_alignment_is_reported_in_centimeters() {
    let gt = truth();
    let mut pred = gt.clone();
    // Shift along the depth axis by 10 cm: far more than the vertex
    // spacing, so every nearest neighbor is the shifted twin.
    let offset = Vec3::new(0.0, 0.0, 0.10);
    let shifted: Vec<Vec3> = pred.objects[0].iter().map(|p| p + offset).collect();
    pred.objects[0] = shifted;
    let m = evaluate_reconstruction(&pred, &gt, ChamferSides::OneWay).unwrap();
    assert!(m.human_cm < 1e-9);
    // Independent oracle: brute-force mean nearest distance.
    let brute: f64 = pred.objects[0]
        .iter()
        .map(|p| gt.objects[0].iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .sum::<f64>()
        / pred.objects[0].len() as f64;
    assert!((m.object_cm - 100.0 * brute).abs() < 1e-9);
    assert!(m.object_cm > 0.0 && m.object_cm <= 10.0 + 1e-9);
}

#[test]
fn separated_object_gives_the_offset() {
    // Two single-point "objects" make the constructed offset exact.
    let gt = truth();
    let mut a = gt.clone();
    a.objects = vec![vec![Vec3::new(0.0, 0.0, 3.0)]];
    let mut b = gt.clone();
    b.objects = vec![vec![Vec3::new(0.0, 0.1, 3.0)]];
    let m = evaluate_reconstruction(&b, &a, ChamferSides::Symmetric).unwrap();
    assert!(m.human_cm < 1e-9);
    assert!((m.object_cm - 10.0).abs() < 1e-9);
}

#[test]
fn mismatched_instances_are_rejected() {
    let gt = truth();
    let mut pred = gt.clone();
    pred.objects.push(vec![Vec3::zeros()]);
    assert!(evaluate_reconstruction(&pred, &gt, ChamferSides::Symmetric).is_err());
    let mut pred = gt.clone();
    pred.humans[0].vertices.pop();
    assert!(evaluate_reconstruction(&pred, &gt, ChamferSides::Symmetric).is_err());
}

#[test]
fn joints_align_when_vertex_counts_differ() {
    let gt = truth();
    let mut gt_j = gt.clone();
    gt_j.humans[0].joints = gt.humans[0].vertices.iter().step_by(50).copied().collect();
    let t = RigidSimTransform::new(1.3, Vec3::new(0.2, -0.4, 0.1), Vec3::new(1.0, 2.0, -0.5)).unwrap();
    let mut pred = moved(&gt_j, &t);
    pred.humans[0].vertices.pop();
    let m = evaluate_reconstruction(&pred, &gt_j, ChamferSides::Symmetric).unwrap();
    assert!(m.object_cm < 1e-6, "{m:?}");
}

#[test]
fn aggregate_groups_by_action() {
    let row = |h: f64, o: f64| Metrics { human_cm: h, object_cm: o, per_object_cm: vec![o], alignment: RigidSimTransform::identity() };
    let rows = [("sit", row(1.0, 10.0)), ("lift", row(4.0, 7.0)), ("sit", row(3.0, 20.0))];
    let summary = aggregate_by_action(rows.iter().map(|(a, m)| (*a, m)));
    assert_eq!(summary.len(), 2);
    assert_eq!((summary[0].action.as_str(), summary[0].count, summary[0].human_std), ("lift", 1, 0.0));
    let sit = &summary[1];
    assert_eq!((sit.human_mean, sit.object_mean), (2.0, 15.0));
    assert!((sit.human_std - 2f64.sqrt()).abs() < 1e-12);
    assert!((sit.object_std - 50f64.sqrt()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn invariant_to_a_joint_similarity(
        s in 0.5f64..2.0,
        r in prop::array::uniform3(-2.0f64..2.0),
        t in prop::array::uniform3(-3.0f64..3.0),
        dz in 0.0f64..0.2,
    ) {
        let gt = truth();
        let mut pred = gt.clone();
        pred.objects[0] = pred.objects[0].iter().map(|p| p + Vec3::new(0.0, 0.0, dz)).collect();
        let base = evaluate_reconstruction(&pred, &gt, ChamferSides::Symmetric).unwrap();
        let g = RigidSimTransform::new(s, Vec3::from(r), Vec3::from(t)).unwrap();
        let m = evaluate_reconstruction(&moved(&pred, &g), &gt, ChamferSides::Symmetric).unwrap();
        prop_assert!((m.human_cm - base.human_cm).abs() < 1e-6);
        prop_assert!((m.object_cm - base.object_cm).abs() < 1e-6);
        prop_assert!(m.object_cm >= 0.0);
    }
}
