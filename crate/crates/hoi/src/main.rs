use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use hoi::cache::{PriorClient, PromptCache};
use hoi::database::read_pose_database;
use hoi::error::HoiError;
use hoi::exemplar_store::write_exemplar_set;
use hoi::fixture::{write_sit_fixture, FixtureOptions};
use hoi::live::{LiveClient, LiveConfig};
use hoi::mask_io::read_mask;
use hoi::mesh_io::read_part_mesh;
use hoi::pipeline::{read_reconstruction, run_pipeline, FitOptions, PipelineError};
use hoi::render::{overlay, write_png};
use hoi::report::{actions_csv, evaluate_frames, evaluate_pair, frames_csv, FrameRow};
use hoi::schema::{default_llm, read_json, BodyParamsDto};
use hoi_core::eval::ChamferSides;
use hoi_core::exemplars::select_representatives;
use hoi_core::priors::{classify_votes, query_contacts, query_object_size, CompletionClient};
use hoi_core::retrieval::{retrieve_action, PoseDistance, RetrievalConfig};

#[derive(Parser)]
#[command(name = "hoi", version, about = "Fit 3D humans and the objects they interact with from a single image")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one or more scene files.
    Fit(FitArgs),
    /// Look up the action label of a body pose.
    Retrieve {
        #[arg(long)]
        database: PathBuf,
        /// Body parameter file whose pose is the query.
        #[arg(long)]
        pose: PathBuf,
        #[arg(long)]
        category: Option<String>,
        #[arg(long)]
        include_root: bool,
        #[arg(long)]
        geodesic: bool,
    },
    /// Query or classify commonsense priors.
    Prior {
        #[command(subcommand)]
        command: PriorCommand,
    },
    /// Pick representative exemplars from a collection of part-labeled meshes.
    Cluster {
        #[arg(long)]
        category: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        meshes: Vec<PathBuf>,
    },
    /// Reconstruction error against ground truth.
    Eval {
        /// JSON manifest listing frames with prediction and ground truth.
        #[arg(long, conflicts_with_all = ["pred", "gt"])]
        frames: Option<PathBuf>,
        #[arg(long, requires = "gt")]
        pred: Option<PathBuf>,
        #[arg(long, requires = "pred")]
        gt: Option<PathBuf>,
        /// Prediction-to-truth Chamfer only.
        #[arg(long)]
        one_way: bool,
        /// Directory for the CSV reports; printed to stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a reconstruction over the object masks.
    Render {
        #[arg(long)]
        reconstruction: PathBuf,
        #[arg(long)]
        mask: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the synthetic sit-on-chair scene and its inputs.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = FixtureOptions::default().seed)]
        seed: u64,
    },
}

#[derive(Args)]
struct FitArgs {
    #[arg(long = "scene", required = true)]
    scenes: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Weight of the normal term.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Weight of the penetration term.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Weight of the scale term.
    #[arg(long)]
    lambda3: Option<f64>,
    /// Weight of the reprojection term.
    #[arg(long)]
    lambda4: Option<f64>,
    /// Action for every object, skipping pose retrieval.
    #[arg(long)]
    action: Option<String>,
    /// Replay cached prompts only.
    #[arg(long)]
    no_network: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    freeze_human_scale: bool,
    #[arg(long)]
    one_way: bool,
}

#[derive(Subcommand)]
enum PriorCommand {
    /// Typical size of an object category in meters.
    Size(PriorArgs),
    /// Contact pairs for an action and object category.
    Contacts {
        #[command(flatten)]
        common: PriorArgs,
        #[arg(long)]
        action: String,
    },
    /// Class of a user-study vote count out of ten.
    Votes { votes: i64 },
}

#[derive(Args)]
struct PriorArgs {
    #[arg(long)]
    category: String,
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, default_value_t = default_llm())]
    model: String,
    #[arg(long)]
    no_network: bool,
}

/// Exit code plus message.
struct Failure(u8, String);

impl From<HoiError> for Failure {
    fn from(e: HoiError) -> Self {
        let code = if matches!(e, HoiError::Schema { .. }) { 2 } else { 3 };
        Failure(code, e.to_string())
    }
}

impl From<hoi_core::Error> for Failure {
    fn from(e: hoi_core::Error) -> Self {
        Failure(3, e.to_string())
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure(e.exit_code(), e.to_string())
    }
}

fn prior_client(a: &PriorArgs) -> Result<PriorClient, Failure> {
    let cache = PromptCache::open(&a.cache)?;
    Ok(if a.no_network {
        PriorClient::offline(cache, &a.model)
    } else {
        PriorClient::with_live(cache, &a.model, Box::new(LiveClient::new(LiveConfig::from_env(&a.model))))
    })
}

fn fit(a: FitArgs) -> Result<(), Failure> {
    let opts = FitOptions {
        steps: a.steps,
        lr: a.lr,
        lambda: [a.lambda1, a.lambda2, a.lambda3, a.lambda4],
        action: a.action,
        no_network: a.no_network,
        seed: a.seed,
        freeze_human_scale: a.freeze_human_scale,
        one_way_chamfer: a.one_way,
    };
    let out_dir = |scene: &Path| {
        if a.scenes.len() == 1 {
            a.out.clone()
        } else {
            a.out.join(scene.file_stem().unwrap_or_default())
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| Failure(3, e.to_string()))?;
    let results: Vec<_> =
        pool.install(|| a.scenes.par_iter().map(|s| (s, run_pipeline(s, &out_dir(s), &opts))).collect());
    let mut worst: Option<Failure> = None;
    for (scene, r) in results {
        match r {
            Ok(report) => {
                let f = &report.final_loss;
                println!("{}: initial loss {:.6}, final loss {:.6}", scene.display(), report.initial_loss.total, f.total);
                if let Some(m) = &report.metrics {
                    println!("{}: human {:.3} cm, object {:.3} cm ({})", scene.display(), m.human_cm, m.object_cm, m.chamfer);
                }
            }
            Err(e) => {
                let f = Failure::from(e);
                eprintln!("{}: {}", scene.display(), f.1);
                if worst.as_ref().is_none_or(|w| f.0 > w.0) {
                    worst = Some(f);
                }
            }
        }
    }
    match worst {
        Some(Failure(code, _)) => Err(Failure(code, String::new())),
        None => Ok(()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Retrieve { database, pose, category, include_root, geodesic } => {
            let config = RetrievalConfig {
                include_root,
                distance: if geodesic { PoseDistance::Geodesic } else { PoseDistance::Euclidean },
            };
            let db = read_pose_database(&database, config)?;
            let body = read_json::<BodyParamsDto>(&pose)?.to_params(&pose)?;
            let r = retrieve_action(&db, &body.pose, category.as_deref())?;
            println!(
                "{}",
                serde_json::json!({
                    "action": r.label.verb,
                    "category": r.label.object_category,
                    "distance": r.distance,
                    "entry": r.entry,
                    "provenance": r.provenance,
                })
            );
            Ok(())
        }
        Command::Prior { command } => {
            match command {
                PriorCommand::Size(a) => {
                    let client = prior_client(&a)?;
                    let s = query_object_size(&a.category, &client)?;
                    println!("{}", serde_json::json!({ "category": s.category, "size": s.size, "model": client.model_id() }));
                }
                PriorCommand::Contacts { common, action } => {
                    let client = prior_client(&common)?;
                    let m = query_contacts(&action, &common.category, &client)?;
                    println!("{}", serde_json::json!({ "action": m.action, "category": m.object_category, "pairs": m.pairs }));
                }
                PriorCommand::Votes { votes } => println!("{:?}", classify_votes(votes)?),
            }
            Ok(())
        }
        Command::Cluster { category, k, seed, out, meshes } => {
            let meshes = meshes.iter().map(|p| read_part_mesh(p)).collect::<Result<Vec<_>, _>>()?;
            let set = select_representatives(&category, &meshes, k, seed)?;
            write_exemplar_set(&out, &set)?;
            for e in &set.exemplars {
                println!("{}", e.source);
            }
            Ok(())
        }
        Command::Eval { frames, pred, gt, one_way, out } => {
            let sides = if one_way { ChamferSides::OneWay } else { ChamferSides::Symmetric };
            let (frames_text, actions_text) = match (frames, pred, gt) {
                (Some(manifest), _, _) => {
                    let (rows, summaries) = evaluate_frames(&manifest, sides)?;
                    (frames_csv(&rows, sides.label()), Some(actions_csv(&summaries, sides.label())))
                }
                (None, Some(p), Some(g)) => {
                    let m = evaluate_pair(&p, &g, sides)?;
                    let row = FrameRow { frame: p.display().to_string(), action: String::new(), human_cm: m.human_cm, object_cm: m.object_cm };
                    (frames_csv(&[row], sides.label()), None)
                }
                _ => return Err(Failure(2, "either --frames or --pred with --gt is required".into())),
            };
            match out {
                Some(dir) => {
                    hoi::mesh_io::write_file(&dir.join("eval_frames.csv"), &frames_text)?;
                    if let Some(t) = &actions_text {
                        hoi::mesh_io::write_file(&dir.join("eval_actions.csv"), t)?;
                    }
                }
                None => {
                    print!("{frames_text}");
                    if let Some(t) = actions_text {
                        print!("\n{t}");
                    }
                }
            }
            Ok(())
        }
        Command::Render { reconstruction, mask, out } => {
            let (recon, camera, meshes) = read_reconstruction(&reconstruction)?;
            let camera = camera.ok_or_else(|| Failure(2, format!("{}: no camera", reconstruction.display())))?;
            let masks = mask.iter().map(|p| read_mask(p)).collect::<Result<Vec<_>, _>>()?;
            let (humans, objects) = meshes.split_at(recon.humans.len());
            write_png(&out, &overlay(&camera, &masks, humans, objects)?)?;
            Ok(())
        }
        Command::Synth { out, seed } => {
            let paths = write_sit_fixture(&out, &FixtureOptions { seed, ..FixtureOptions::default() })?;
            println!("{}", paths.scene.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}
