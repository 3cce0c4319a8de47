//! End-to-end fitting of one scene file: body refinement, action retrieval,
//! priors, exemplar ranking and pose initialization, joint optimization and
//! optional evaluation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use hoi_core::body::{refine_body, BodyModelEvaluator, BodyParams, BuiltinBody, Camera, Keypoints2d, RefineConfig};
use hoi_core::eval::{evaluate_reconstruction, ChamferSides, HumanPoints, Metrics, Reconstruction};
use hoi_core::exemplars::{rank_exemplars, ExemplarSet};
use hoi_core::image::BinaryMask;
use hoi_core::priors::{
    normalize_part_labels, query_contacts, query_object_size, CompletionClient, InteractionMap, SynonymTable,
};
use hoi_core::retrieval::{retrieve_action, PoseDatabase, PoseDistance, RetrievalConfig};
use hoi_core::scene::{
    optimize_scene, HumanInstance, Interaction, MaskTarget, ObjectInstance, OptimizeOutcome, ScalePriors,
    SceneConfig, SceneState,
};
use hoi_core::Vec3;

use crate::cache::{PriorClient, PromptCache};
use crate::database::read_pose_database;
use crate::error::HoiError;
use crate::exemplar_store::read_exemplar_set;
use crate::live::{LiveClient, LiveConfig};
use crate::mask_io::read_mask;
use crate::mesh_io::{read_mesh, write_file, write_part_mesh};
use crate::render::{overlay, write_png};
use crate::schema::{
    read_json, resolve, schema_error, write_json, BodyParamsDto, CameraDto, HumanMeshDto, KeypointsDto, LossDto,
    ObjectMeshDto, ReconstructionDto, SceneDto, TransformDto,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    LoadInputs,
    RefineBody,
    RetrieveAction,
    Priors,
    InitObjectPose,
    OptimizeScene,
    Evaluate,
    WriteOutputs,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::LoadInputs => "load_inputs",
            Stage::RefineBody => "refine_body",
            Stage::RetrieveAction => "retrieve_action",
            Stage::Priors => "priors",
            Stage::InitObjectPose => "init_object_pose",
            Stage::OptimizeScene => "optimize_scene",
            Stage::Evaluate => "evaluate",
            Stage::WriteOutputs => "write_outputs",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Schema(HoiError),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    /// 2 for schema violations, 3 for stage failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            PipelineError::Schema(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

fn stage(stage: Stage) -> impl Fn(HoiError) -> PipelineError {
    move |e| match e {
        HoiError::Schema { .. } => PipelineError::Schema(e),
        e => PipelineError::Stage { stage, message: e.to_string() },
    }
}

fn core_stage(stage: Stage) -> impl Fn(hoi_core::Error) -> PipelineError {
    move |e| PipelineError::Stage { stage, message: e.to_string() }
}

/// Command-line overrides of the scene file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOptions {
    pub steps: Option<usize>,
    pub lr: Option<f64>,
    /// Overrides of the normal, penetration, scale and reprojection weights.
    pub lambda: [Option<f64>; 4],
    /// Action for every object; skips retrieval.
    pub action: Option<String>,
    pub no_network: bool,
    pub seed: Option<u64>,
    pub freeze_human_scale: bool,
    pub one_way_chamfer: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanReport {
    pub body: BodyParamsDto,
    pub scale: f64,
    pub size_prior: f64,
    /// Body energy before and after refinement.
    pub refine_energy: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub exemplar: usize,
    pub iou: f64,
    /// `None` when the candidate could not be optimized.
    pub final_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub category: String,
    pub human: usize,
    pub action: String,
    /// `override`, `scene` or `retrieval`.
    pub action_source: String,
    pub retrieval_distance: Option<f64>,
    pub retrieval_provenance: Option<u64>,
    pub size_prior: f64,
    /// Raw `(object part, body part)` pairs from the prompt.
    pub raw_contacts: Vec<(String, String)>,
    pub contacts: Vec<(String, String)>,
    pub dropped_contacts: Vec<(String, String)>,
    pub exemplar: usize,
    pub candidates: Vec<CandidateReport>,
    pub init_transform: TransformDto,
    pub transform: TransformDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub chamfer: String,
    pub human_cm: f64,
    pub object_cm: f64,
    pub per_object_cm: Vec<f64>,
}

impl MetricsReport {
    pub fn new(m: &Metrics, sides: ChamferSides) -> Self {
        MetricsReport {
            chamfer: sides.label().into(),
            human_cm: m.human_cm,
            object_cm: m.object_cm,
            per_object_cm: m.per_object_cm.clone(),
        }
    }
}

/// Contents of `transforms.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub seed: u64,
    pub steps: usize,
    pub lr: f64,
    pub weights: [f64; 5],
    pub humans: Vec<HumanReport>,
    pub objects: Vec<ObjectReport>,
    pub initial_loss: LossDto,
    pub final_loss: LossDto,
    pub diagnostics: Vec<String>,
    pub metrics: Option<MetricsReport>,
}

/// Everything read from disk before any computation.
struct Inputs {
    scene: SceneDto,
    camera: Camera,
    bodies: Vec<(BodyParams, Keypoints2d)>,
    objects: Vec<(ExemplarSet, BinaryMask)>,
    database: Option<PoseDatabase>,
    ground_truth: Option<Reconstruction>,
}

fn load_inputs(scene_path: &Path, opts: &FitOptions) -> Result<Inputs, PipelineError> {
    let load = stage(Stage::LoadInputs);
    let scene: SceneDto = read_json(scene_path).map_err(&load)?;
    let camera = scene.camera.to_camera(scene_path, "camera").map_err(&load)?;
    if scene.humans.is_empty() {
        return Err(load(schema_error(scene_path, "humans", "at least one human is required")));
    }
    let mut bodies = Vec::new();
    for (i, h) in scene.humans.iter().enumerate() {
        if h.model != "builtin" {
            return Err(load(schema_error(scene_path, &format!("humans[{i}].model"), "only `builtin` is available")));
        }
        if h.size_prior.is_nan() || h.size_prior <= 0.0 {
            return Err(load(schema_error(scene_path, &format!("humans[{i}].size_prior"), "must be positive")));
        }
        let body_path = resolve(scene_path, &h.body);
        let params = read_json::<BodyParamsDto>(&body_path).and_then(|b| b.to_params(&body_path)).map_err(&load)?;
        let kp_path = resolve(scene_path, &h.keypoints);
        let kp = read_json::<KeypointsDto>(&kp_path)
            .and_then(|k| k.to_keypoints(h.joint_map.as_deref(), &kp_path))
            .map_err(&load)?;
        bodies.push((params, kp));
    }
    let mut objects = Vec::new();
    for (i, o) in scene.objects.iter().enumerate() {
        if o.human >= scene.humans.len() {
            return Err(load(schema_error(scene_path, &format!("objects[{i}].human"), "no such human")));
        }
        let set = read_exemplar_set(&resolve(scene_path, &o.exemplars), false).map_err(&load)?;
        let mask = read_mask(&resolve(scene_path, &o.mask)).map_err(&load)?;
        if (mask.width(), mask.height()) != (camera.width, camera.height) {
            return Err(load(schema_error(
                scene_path,
                &format!("objects[{i}].mask"),
                format!("mask is {}x{}, camera {}x{}", mask.width(), mask.height(), camera.width, camera.height),
            )));
        }
        objects.push((set, mask));
    }
    let needs_retrieval = opts.action.is_none() && scene.objects.iter().any(|o| o.action.is_none());
    let database = match (&scene.pose_database, needs_retrieval) {
        (Some(p), true) => {
            let config = RetrievalConfig {
                include_root: scene.retrieval.include_root,
                distance: if scene.retrieval.geodesic { PoseDistance::Geodesic } else { PoseDistance::Euclidean },
            };
            Some(read_pose_database(&resolve(scene_path, p), config).map_err(&load)?)
        }
        (None, true) => {
            return Err(load(schema_error(scene_path, "pose_database", "required when an object has no action")));
        }
        (_, false) => None,
    };
    let ground_truth = match &scene.ground_truth {
        Some(p) => {
            let path = resolve(scene_path, p);
            Some(read_reconstruction(&path).map_err(&load)?.0)
        }
        None => None,
    };
    Ok(Inputs { scene, camera, bodies, objects, database, ground_truth })
}

/// Reads a reconstruction file and its meshes.
pub fn read_reconstruction(path: &Path) -> crate::error::Result<(Reconstruction, Option<Camera>, Vec<hoi_core::geometry::TriangleMesh>)> {
    let dto: ReconstructionDto = read_json(path)?;
    let camera = dto.camera.map(|c| c.to_camera(path, "camera")).transpose()?;
    let mut meshes = Vec::new();
    let mut humans = Vec::new();
    for h in &dto.humans {
        let mesh = read_mesh(&resolve(path, &h.mesh))?;
        humans.push(HumanPoints {
            vertices: mesh.vertices().to_vec(),
            joints: h.joints.iter().map(|j| Vec3::from(*j)).collect(),
        });
        meshes.push(mesh);
    }
    let mut objects = Vec::new();
    for o in &dto.objects {
        let mesh = read_mesh(&resolve(path, &o.mesh))?;
        objects.push(mesh.vertices().to_vec());
        meshes.push(mesh);
    }
    Ok((Reconstruction { humans, objects }, camera, meshes))
}

/// Label prompts answer empty instead of failing, so unmappable parts are
/// dropped rather than aborting the stage.
struct LenientLabels<'a>(&'a dyn CompletionClient);

impl CompletionClient for LenientLabels<'_> {
    fn model_id(&self) -> &str {
        self.0.model_id()
    }

    fn complete(&self, template_id: &str, prompt: &str) -> hoi_core::Result<String> {
        Ok(self.0.complete(template_id, prompt).unwrap_or_default())
    }
}

fn client(scene_path: &Path, scene: &SceneDto, opts: &FitOptions) -> Result<PriorClient, PipelineError> {
    let cache = PromptCache::open(&resolve(scene_path, &scene.priors_cache)).map_err(stage(Stage::Priors))?;
    Ok(if opts.no_network {
        PriorClient::offline(cache, &scene.llm_model)
    } else {
        PriorClient::with_live(cache, &scene.llm_model, Box::new(LiveClient::new(LiveConfig::from_env(&scene.llm_model))))
    })
}

/// Pairs of `map` whose parts exist on both meshes.
fn restrict(map: &InteractionMap, human: &HumanInstance, object: &hoi_core::geometry::PartLabeledMesh) -> InteractionMap {
    let pairs = map
        .pairs
        .iter()
        .filter(|(o, h)| object.part_id(o).is_some() && human.mesh.part_id(h).is_some())
        .cloned()
        .collect();
    InteractionMap::new(&map.action, &map.object_category, pairs)
}

pub fn scene_config(scene: &SceneDto, opts: &FitOptions) -> SceneConfig {
    let mut c = scene.optimizer.scene_config();
    if let Some(s) = opts.steps {
        c.steps = s;
    }
    if let Some(lr) = opts.lr {
        c.lr = lr;
    }
    let w = &mut c.weights;
    for (slot, v) in [&mut w.normal, &mut w.penetration, &mut w.scale, &mut w.reprojection].into_iter().zip(opts.lambda) {
        if let Some(v) = v {
            *slot = v;
        }
    }
    if opts.freeze_human_scale {
        c.optimize_human_scale = false;
    }
    c
}

struct Prepared {
    action: String,
    source: &'static str,
    retrieval: Option<(f64, u64)>,
    size: f64,
    raw: InteractionMap,
    map: InteractionMap,
    dropped: Vec<(String, String)>,
}

/// Runs the whole pipeline and writes its outputs into `out`.
pub fn run_pipeline(scene_path: &Path, out: &Path, opts: &FitOptions) -> Result<FitReport, PipelineError> {
    let inputs = load_inputs(scene_path, opts)?;
    let scene = &inputs.scene;
    let config = scene_config(scene, opts);
    let seed = opts.seed.unwrap_or(scene.optimizer.seed);
    let model = BuiltinBody::default();
    let mut diagnostics = Vec::new();

    // Body refinement.
    let refine_config = RefineConfig { iterations: scene.optimizer.refine_iterations, ..RefineConfig::default() };
    let mut humans = Vec::new();
    let mut human_reports = Vec::new();
    for (i, (init, kp)) in inputs.bodies.iter().enumerate() {
        let refined = refine_body(init, &model, kp, &inputs.camera, &refine_config).map_err(|f| PipelineError::Stage {
            stage: Stage::RefineBody,
            message: format!("human {i}: {}", f.error),
        })?;
        let p = refined.params;
        let body = model.evaluate(&p).map_err(core_stage(Stage::RefineBody))?;
        let t = hoi_core::geometry::RigidSimTransform { scale: 1.0, rotation: Vec3::zeros(), translation: p.translation };
        let human = HumanInstance::new(body.mesh.transformed(&t), body.joints[0] + p.translation)
            .map_err(core_stage(Stage::RefineBody))?;
        humans.push((human, body.joints.iter().map(|j| j + p.translation).collect::<Vec<_>>()));
        human_reports.push(HumanReport {
            body: BodyParamsDto::from(&p),
            scale: 1.0,
            size_prior: scene.humans[i].size_prior,
            refine_energy: [refined.energy_trace[0], *refined.energy_trace.last().expect("non-empty trace")],
        });
    }

    // Action per object.
    let mut actions = Vec::new();
    for (i, o) in scene.objects.iter().enumerate() {
        let (action, source, retrieval) = if let Some(a) = &opts.action {
            (a.clone(), "override", None)
        } else if let Some(a) = &o.action {
            (a.clone(), "scene", None)
        } else {
            let db = inputs.database.as_ref().expect("checked while loading");
            let pose = human_reports[o.human].body.pose.clone();
            let r = retrieve_action(db, &pose, Some(&o.category)).map_err(|e| PipelineError::Stage {
                stage: Stage::RetrieveAction,
                message: format!("object {i}: {e}"),
            })?;
            (r.label.verb, "retrieval", Some((r.distance, r.provenance)))
        };
        actions.push((action, source, retrieval));
    }

    // Priors.
    let client = client(scene_path, scene, opts)?;
    let synonyms = SynonymTable::builtin();
    let mut prepared = Vec::new();
    for (i, (o, (action, source, retrieval))) in scene.objects.iter().zip(actions).enumerate() {
        let fail = |e: hoi_core::Error| PipelineError::Stage { stage: Stage::Priors, message: format!("object {i}: {e}") };
        let size = query_object_size(&o.category, &client).map_err(fail)?;
        let raw = query_contacts(&action, &o.category, &client).map_err(fail)?;
        let set = &inputs.objects[i].0;
        let mut object_vocab: Vec<String> = set.exemplars.iter().flat_map(|e| e.mesh.vocabulary()).collect();
        object_vocab.sort();
        object_vocab.dedup();
        let body_vocab = humans[o.human].0.mesh.vocabulary();
        let normalized =
            normalize_part_labels(&raw, &object_vocab, &body_vocab, &synonyms, Some(&LenientLabels(&client)))
                .map_err(fail)?;
        for d in &normalized.dropped {
            diagnostics.push(format!("object {i}: dropped contact ({}, {}): {}", d.object_part, d.body_part, d.reason));
        }
        prepared.push(Prepared {
            action,
            source,
            retrieval,
            size: size.size,
            dropped: normalized.dropped.iter().map(|d| (d.object_part.clone(), d.body_part.clone())).collect(),
            raw,
            map: normalized.map,
        });
    }

    // Pose initialization and exemplar ranking.
    let top_n = scene.optimizer.top_n.max(1);
    let mut ranked = Vec::new();
    for (i, ((set, mask), p)) in inputs.objects.iter().zip(&prepared).enumerate() {
        let fail = |e: hoi_core::Error| PipelineError::Stage { stage: Stage::InitObjectPose, message: format!("object {i}: {e}") };
        let target = MaskTarget::new(mask.clone()).map_err(fail)?;
        let size = hoi_core::priors::SizePrior::new(&scene.objects[i].category, p.size).map_err(fail)?;
        let r = rank_exemplars(set, &target, &inputs.camera, &size, top_n).map_err(fail)?;
        if r.iter().any(|c| c.init.unreliable) {
            diagnostics.push(format!("object {i}: mask is small, initialization may be unreliable"));
        }
        ranked.push((target, r));
    }

    // Joint optimization. Each object tries its ranked candidates in turn
    // with the other objects at their current choice; the candidate with
    // the lowest final loss is kept.
    let priors = ScalePriors {
        humans: scene.humans.iter().map(|h| h.size_prior).collect(),
        objects: prepared.iter().map(|p| p.size).collect(),
    };
    let build = |choice: &[usize]| -> Result<SceneState, hoi_core::Error> {
        let mut objects = Vec::new();
        let mut interactions = Vec::new();
        for (i, (target, r)) in ranked.iter().enumerate() {
            let cand = &r[choice[i]];
            let mesh = inputs.objects[i].0.exemplars[cand.index].mesh.clone();
            let human = scene.objects[i].human;
            let map = restrict(&prepared[i].map, &humans[human].0, &mesh);
            if map.pairs.is_empty() {
                return Err(hoi_core::Error::MissingPart {
                    object_part: prepared[i].map.pairs.first().map(|p| p.0.clone()).unwrap_or_default(),
                    body_part: prepared[i].map.pairs.first().map(|p| p.1.clone()).unwrap_or_default(),
                });
            }
            objects.push(ObjectInstance::new(&scene.objects[i].category, mesh, cand.init.transform, target.clone())?);
            interactions.push(Interaction { human, object: i, map });
        }
        SceneState::new(inputs.camera, humans.iter().map(|h| h.0.clone()).collect(), objects, interactions)
    };
    let mut choice = vec![0usize; ranked.len()];
    let mut best: Option<OptimizeOutcome> = None;
    let mut candidate_reports: Vec<Vec<CandidateReport>> = Vec::new();
    for i in 0..ranked.len() {
        let mut reports = Vec::new();
        let mut best_here: Option<(usize, OptimizeOutcome)> = None;
        for c in 0..ranked[i].1.len() {
            let mut trial = choice.clone();
            trial[i] = c;
            let cand = &ranked[i].1[c];
            let outcome = build(&trial).and_then(|s| optimize_scene(&s, &priors, &config));
            match outcome {
                Ok(o) => {
                    let total = o.trace.last().map(|l| l.total).unwrap_or(f64::INFINITY);
                    if let Some(d) = &o.diagnostic {
                        diagnostics.push(format!("object {i}, exemplar {}: {d}", cand.index));
                    }
                    reports.push(CandidateReport { exemplar: cand.index, iou: cand.iou, final_total: Some(total), skipped: None });
                    let better = best_here.as_ref().is_none_or(|(_, b)| total < b.trace.last().map(|l| l.total).unwrap_or(f64::INFINITY));
                    if better {
                        best_here = Some((c, o));
                    }
                }
                Err(e) => reports.push(CandidateReport {
                    exemplar: cand.index,
                    iou: cand.iou,
                    final_total: None,
                    skipped: Some(e.to_string()),
                }),
            }
        }
        let (c, o) = best_here.ok_or_else(|| PipelineError::Stage {
            stage: Stage::OptimizeScene,
            message: format!("object {i}: no exemplar candidate could be optimized: {:?}", reports.iter().filter_map(|r| r.skipped.clone()).collect::<Vec<_>>()),
        })?;
        choice[i] = c;
        best = Some(o);
        candidate_reports.push(reports);
    }
    let outcome = match best {
        Some(o) => o,
        None => {
            // No objects: nothing to optimize beyond the humans.
            let s = build(&choice).map_err(core_stage(Stage::OptimizeScene))?;
            optimize_scene(&s, &priors, &config).map_err(core_stage(Stage::OptimizeScene))?
        }
    };
    let state = &outcome.state;

    // Evaluation.
    let sides = if opts.one_way_chamfer { ChamferSides::OneWay } else { ChamferSides::Symmetric };
    let prediction = Reconstruction {
        humans: state
            .humans
            .iter()
            .zip(&humans)
            .map(|(h, (_, joints))| HumanPoints { vertices: h.vertices(), joints: joints.iter().map(|j| h.scale_point(j)).collect() })
            .collect(),
        objects: state.objects.iter().map(|o| o.vertices()).collect(),
    };
    let metrics = match &inputs.ground_truth {
        Some(gt) => Some(
            evaluate_reconstruction(&prediction, gt, sides)
                .map(|m| MetricsReport::new(&m, sides))
                .map_err(core_stage(Stage::Evaluate))?,
        ),
        None => None,
    };

    for (r, h) in human_reports.iter_mut().zip(&state.humans) {
        r.scale = h.scale;
    }
    let objects = state
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let p = &prepared[i];
            let cand = &ranked[i].1[choice[i]];
            ObjectReport {
                category: o.category.clone(),
                human: scene.objects[i].human,
                action: p.action.clone(),
                action_source: p.source.into(),
                retrieval_distance: p.retrieval.map(|r| r.0),
                retrieval_provenance: p.retrieval.map(|r| r.1),
                size_prior: p.size,
                raw_contacts: p.raw.pairs.clone(),
                contacts: state.interactions[i].map.pairs.clone(),
                dropped_contacts: p.dropped.clone(),
                exemplar: cand.index,
                candidates: candidate_reports[i].clone(),
                init_transform: TransformDto::from(&cand.init.transform),
                transform: TransformDto::from(&o.transform),
            }
        })
        .collect();
    let w = config.weights;
    let report = FitReport {
        seed,
        steps: config.steps,
        lr: config.lr,
        weights: [w.contact, w.normal, w.penetration, w.scale, w.reprojection],
        humans: human_reports,
        objects,
        initial_loss: LossDto::from(&outcome.trace[0]),
        final_loss: LossDto::from(outcome.trace.last().expect("non-empty trace")),
        diagnostics,
        metrics,
    };
    write_outputs(scene_path, out, &report, &outcome, &prediction, &inputs).map_err(stage(Stage::WriteOutputs))?;
    Ok(report)
}

pub fn loss_trace_csv(trace: &[hoi_core::scene::LossBreakdown]) -> String {
    let mut s = String::from("step,contact,normal,penetration,scale,reprojection,total\n");
    for (i, l) in trace.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            l.contact, l.normal, l.penetration, l.scale, l.reprojection, l.total
        ));
    }
    s
}

fn write_outputs(
    scene_path: &Path,
    out: &Path,
    report: &FitReport,
    outcome: &OptimizeOutcome,
    prediction: &Reconstruction,
    inputs: &Inputs,
) -> crate::error::Result<()> {
    let state = &outcome.state;
    std::fs::create_dir_all(out).map_err(crate::error::io_error(out))?;
    write_json(&out.join("transforms.json"), report)?;
    write_file(&out.join("loss_trace.csv"), &loss_trace_csv(&outcome.trace))?;
    let mut humans = Vec::new();
    let mut human_meshes = Vec::new();
    for (i, h) in state.humans.iter().enumerate() {
        let name = format!("human_{i}.obj");
        let mesh = h.mesh.with_mesh(h.mesh.mesh.with_vertices(h.vertices())?)?;
        write_part_mesh(&out.join(&name), &mesh)?;
        humans.push(HumanMeshDto { mesh: name.into(), joints: prediction.humans[i].joints.iter().map(|j| (*j).into()).collect() });
        human_meshes.push(mesh.mesh);
    }
    let mut objects = Vec::new();
    let mut object_meshes = Vec::new();
    for (i, o) in state.objects.iter().enumerate() {
        let name = format!("object_{i}.obj");
        let mesh = o.posed_mesh();
        write_part_mesh(&out.join(&name), &mesh)?;
        objects.push(ObjectMeshDto { mesh: name.into(), category: Some(o.category.clone()) });
        object_meshes.push(mesh.mesh);
    }
    let recon = ReconstructionDto { camera: Some(CameraDto::from(&inputs.camera)), humans, objects };
    write_json(&out.join("reconstruction.json"), &recon)?;
    let masks: Vec<BinaryMask> = inputs.objects.iter().map(|(_, m)| m.clone()).collect();
    let img = overlay(&inputs.camera, &masks, &human_meshes, &object_meshes)?;
    write_png(&out.join("overlay.png"), &img)?;
    if let Some(m) = &report.metrics {
        let row = crate::report::FrameRow {
            frame: scene_path.file_stem().unwrap_or_default().to_string_lossy().into_owned(),
            action: report.objects.first().map(|o| o.action.clone()).unwrap_or_default(),
            human_cm: m.human_cm,
            object_cm: m.object_cm,
        };
        write_file(&out.join("eval.csv"), &crate::report::frames_csv(&[row], &m.chamfer))?;
    }
    Ok(())
}
