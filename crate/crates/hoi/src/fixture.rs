//! Writes a complete input directory for the synthetic sit-on-chair scene:
//! scene file, noisy body estimate, exact keypoints, object mask, a small
//! chair exemplar set, a pose database, a prompt cache and the ground truth.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hoi_core::body::{BodyModelEvaluator, BuiltinBody, Camera, NUM_JOINTS, POSE_DIM};
use hoi_core::exemplars::{prepare_exemplar, Exemplar, ExemplarSet};
use hoi_core::geometry::{PartLabeledMesh, RigidSimTransform};
use hoi_core::priors::{render_contact_prompt, render_size_prompt, CONTACT_TEMPLATE_ID, SIZE_TEMPLATE_ID};
use hoi_core::scene::render_silhouette;
use hoi_core::synthetic::{chair_exemplar, default_camera, sit_on_chair, sitting_pose};
use hoi_core::Vec3;

use crate::cache::{cache_key, PromptRecord};
use crate::database::{write_pose_records, PoseRecord};
use crate::error::Result;
use crate::exemplar_store::{stored_descriptor, write_exemplar_set};
use crate::mask_io::write_mask;
use crate::mesh_io::{write_file, write_part_mesh};
use crate::schema::{
    default_llm, write_json, BodyParamsDto, CameraDto, HumanDto, HumanMeshDto, KeypointsDto, ObjectDto, ObjectMeshDto,
    OptimizerDto, ReconstructionDto, RetrievalDto, SceneDto,
};

/// Typical object sizes in meters.
pub const SIZE_TABLE: [(&str, f64); 20] = [
    ("backpack", 0.5),
    ("bag", 0.5),
    ("bed", 2.0),
    ("bottle", 0.3),
    ("bowl", 0.15),
    ("chair", 0.85),
    ("clock", 0.3),
    ("couch", 0.91),
    ("cup", 0.1),
    ("desk", 0.75),
    ("door", 2.1),
    ("handbag", 0.3),
    ("hat", 0.3),
    ("keyboard", 0.61),
    ("knife", 0.22),
    ("microwave", 0.5),
    ("mug", 0.12),
    ("scissors", 0.2),
    ("suitcase", 0.81),
    ("table", 0.75),
];

/// `(category, action, [(object part, body part)])`.
pub type ContactRow = (&'static str, &'static str, &'static [(&'static str, &'static str)]);

/// Contact answers per category and action.
pub const CONTACT_TABLE: [ContactRow; 28] = [
    ("chair", "sit", &[("chair seat", "butt"), ("chair back", "back")]),
    ("chair", "carry", &[("chair arms", "hands"), ("chair back", "hands"), ("chair seat", "hands")]),
    ("chair", "rest", &[("chair seat", "butt"), ("chair back", "back")]),
    ("chair", "stand on", &[("chair seat", "feet")]),
    ("chair", "stand next to", &[("chair back", "hands")]),
    ("chair", "sleep", &[("chair seat", "butt"), ("chair back", "back")]),
    ("table", "sit", &[("tabletop", "butt"), ("tabletop", "left leg"), ("tabletop", "right leg")]),
    ("table", "work", &[("tabletop", "hands")]),
    ("table", "arrange", &[("tabletop", "hands")]),
    ("table", "lay", &[("tabletop", "body")]),
    ("table", "place", &[("tabletop", "hands")]),
    ("backpack", "carry", &[("shoulder strap", "hands"), ("support", "hands")]),
    ("backpack", "backpack", &[("shoulder strap", "shoulders"), ("support", "shoulders"), ("bag body", "back")]),
    (
        "backpack",
        "mount",
        &[("shoulder strap", "hands"), ("shoulder strap", "waist"), ("support", "hands"), ("support", "waist")],
    ),
    ("suitcase", "carry", &[("handle", "hands")]),
    ("suitcase", "pack", &[("zipper", "hands")]),
    ("suitcase", "lug", &[("handle", "hands")]),
    ("suitcase", "throw", &[("handle", "hands")]),
    ("scissors", "cut", &[("blade handle", "hands"), ("handle", "hands")]),
    (
        "scissors",
        "pass",
        &[("blade", "hands"), ("blade handle", "hands"), ("handle", "hands"), ("securing clip", "hands")],
    ),
    ("keyboard", "type", &[("key", "hands")]),
    ("keyboard", "play", &[("key", "hands")]),
    ("keyboard", "control", &[("key", "hands")]),
    ("keyboard", "enter", &[("key", "hands")]),
    ("bowl", "hold", &[("bowl", "hands")]),
    ("bowl", "serve", &[("bowl", "hands")]),
    ("bowl", "eat", &[("bowl", "mouth")]),
    ("bowl", "wash", &[("bowl", "hands")]),
];

/// Completion text in the style of the prompt examples, e.g. ` 0.85m`.
pub fn size_response(size: f64) -> String {
    format!(" {size}m")
}

/// Completion text such as ` chair seat/butt, chair back/back`.
pub fn contact_response(pairs: &[(&str, &str)]) -> String {
    let items: Vec<String> = pairs.iter().map(|(o, b)| format!("{o}/{b}")).collect();
    format!(" {}", items.join(", "))
}

fn record(template_id: &str, prompt: String, response: String, model: &str) -> PromptRecord {
    PromptRecord { key: cache_key(&prompt, model), template_id: template_id.into(), prompt, response, model: model.into(), timestamp: 0 }
}

/// Cache records answering every size and contact prompt of the tables.
pub fn table_cache_records(model: &str) -> Vec<PromptRecord> {
    let sizes = SIZE_TABLE
        .iter()
        .map(|(c, s)| record(SIZE_TEMPLATE_ID, render_size_prompt(c), size_response(*s), model));
    let contacts = CONTACT_TABLE
        .iter()
        .map(|(c, a, p)| record(CONTACT_TEMPLATE_ID, render_contact_prompt(a, c), contact_response(p), model));
    sizes.chain(contacts).collect()
}

pub fn write_cache_records(path: &Path, records: &[PromptRecord]) -> Result<()> {
    let text: String = records.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect();
    write_file(path, &text)
}

/// Noise of the initial body estimate and of the pose database.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureOptions {
    pub seed: u64,
    /// Standard deviation of the per-angle noise of the body estimate.
    pub pose_noise: f64,
    /// Offset of the body estimate's translation, meters.
    pub translation_noise: f64,
    /// Poses per action cluster in the database.
    pub database_poses: usize,
}

impl Default for FixtureOptions {
    fn default() -> Self {
        FixtureOptions { seed: 7, pose_noise: 0.03, translation_noise: 0.05, database_poses: 20 }
    }
}

fn noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    // Box-Muller.
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    sigma * (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

fn stretched(chair: &PartLabeledMesh, factors: [f64; 3]) -> Result<PartLabeledMesh> {
    let v = chair
        .mesh
        .vertices()
        .iter()
        .map(|p| Vec3::new(p.x * factors[0], p.y * factors[1], p.z * factors[2]))
        .collect();
    let moved = chair.with_mesh(chair.mesh.with_vertices(v)?)?;
    Ok(prepare_exemplar(&moved)?.0)
}

/// True chair, kept bit-identical to the ground truth, plus a wide and a
/// tall variant.
pub fn chair_exemplar_set() -> Result<ExemplarSet> {
    let chair = chair_exemplar()?.0;
    let mut exemplars = Vec::new();
    for (source, mesh) in [chair.clone(), stretched(&chair, [1.6, 1.0, 1.3])?, stretched(&chair, [0.8, 1.5, 0.8])?]
        .into_iter()
        .enumerate()
    {
        let descriptor = stored_descriptor(&mesh)?;
        exemplars.push(Exemplar { source, mesh, descriptor });
    }
    Ok(ExemplarSet { category: "chair".into(), k: 3, seed: 0, exemplars })
}

/// Sitting and standing clusters for chairs, plus a few unrelated poses.
pub fn pose_records(opts: &FixtureOptions) -> Vec<PoseRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let sit = sitting_pose().pose;
    let stand = [0.0; POSE_DIM];
    let mut out = Vec::new();
    let mut id = 0;
    for (action, category, base) in [("sit", "chair", sit), ("stand", "chair", stand), ("sit", "couch", sit), ("carry", "suitcase", stand)] {
        for _ in 0..opts.database_poses {
            let pose = base.iter().map(|a| a + noise(&mut rng, 0.05)).collect();
            out.push(PoseRecord { pose, action: action.into(), category: category.into(), weight: 1.0, provenance: id });
            id += 1;
        }
    }
    out
}

/// Paths of a written fixture.
#[derive(Debug, Clone, PartialEq)]
pub struct FixturePaths {
    pub scene: PathBuf,
    pub ground_truth: PathBuf,
}

pub fn write_sit_fixture(dir: &Path, opts: &FixtureOptions) -> Result<FixturePaths> {
    let camera: Camera = default_camera();
    let scene = sit_on_chair(camera)?;
    let model = BuiltinBody::default();
    let truth = model.evaluate(&scene.body)?;
    let joints: Vec<Vec3> = truth.joints.iter().map(|j| j + scene.body.translation).collect();

    // Exact keypoints and a noisy initial estimate.
    let points = joints.iter().map(|j| camera.project(j).map(|p| [p.x, p.y])).collect::<hoi_core::Result<Vec<_>>>()?;
    write_json(
        &dir.join("keypoints.json"),
        &KeypointsDto { convention: "smpl24".into(), points, confidences: vec![1.0; NUM_JOINTS] },
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut init = scene.body;
    for a in init.pose.iter_mut() {
        *a += noise(&mut rng, opts.pose_noise);
    }
    init.translation += Vec3::new(noise(&mut rng, 1.0), noise(&mut rng, 1.0), noise(&mut rng, 1.0)).normalize()
        * opts.translation_noise;
    write_json(&dir.join("body.json"), &BodyParamsDto::from(&init))?;

    // Object mask and exemplars.
    let object = &scene.state.objects[0];
    let mask = render_silhouette(&object.vertices(), object.mesh.mesh.faces(), &camera)?;
    write_mask(&dir.join("mask.png"), &mask)?;
    write_exemplar_set(&dir.join("exemplars"), &chair_exemplar_set()?)?;

    write_pose_records(&dir.join("poses.jsonl"), &pose_records(opts))?;
    write_cache_records(&dir.join("priors_cache.jsonl"), &table_cache_records(&default_llm()))?;

    // Ground truth.
    let gt_dir = dir.join("ground_truth");
    write_part_mesh(&gt_dir.join("human.obj"), &scene.state.humans[0].mesh)?;
    write_part_mesh(&gt_dir.join("object.obj"), &object.posed_mesh())?;
    let ground_truth = gt_dir.join("reconstruction.json");
    write_json(
        &ground_truth,
        &ReconstructionDto {
            camera: Some(CameraDto::from(&camera)),
            humans: vec![HumanMeshDto { mesh: "human.obj".into(), joints: joints.iter().map(|j| (*j).into()).collect() }],
            objects: vec![ObjectMeshDto { mesh: "object.obj".into(), category: Some("chair".into()) }],
        },
    )?;
    write_json(&gt_dir.join("transform.json"), &crate::schema::TransformDto::from(&scene.ground_truth))?;

    let scene_path = dir.join("scene.json");
    write_json(
        &scene_path,
        &SceneDto {
            camera: CameraDto::from(&camera),
            humans: vec![HumanDto {
                body: "body.json".into(),
                keypoints: "keypoints.json".into(),
                model: "builtin".into(),
                joint_map: None,
                size_prior: 1.0,
            }],
            objects: vec![ObjectDto {
                category: "chair".into(),
                exemplars: "exemplars".into(),
                mask: "mask.png".into(),
                human: 0,
                action: None,
            }],
            priors_cache: "priors_cache.jsonl".into(),
            pose_database: Some("poses.jsonl".into()),
            retrieval: RetrievalDto::default(),
            llm_model: default_llm(),
            optimizer: OptimizerDto::default(),
            ground_truth: Some("ground_truth/reconstruction.json".into()),
        },
    )?;
    Ok(FixturePaths { scene: scene_path, ground_truth })
}

/// Ground-truth object placement of the synthetic scene.
pub fn true_chair_transform() -> Result<RigidSimTransform> {
    Ok(sit_on_chair(default_camera())?.ground_truth)
}
