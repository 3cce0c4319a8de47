//! End-to-end runs of the `hoi` binary on the shipped fixture.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hoi::pipeline::FitReport;
use serde_json::Value;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sit_chair")
}

fn hoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoi")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            std::fs::copy(e.path(), target).unwrap();
        }
    }
}

/// Copy of the fixture with `edit` applied to its scene JSON.
fn edited_fixture(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    copy_dir(&fixture(), dir);
    let path = dir.join("scene.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut v);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn fit(scene: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["fit", "--no-network", "--steps", "150", "--scene", scene.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    hoi(&args)
}

fn report(out: &Path) -> FitReport {
    serde_json::from_str(&std::fs::read_to_string(out.join("transforms.json")).unwrap()).unwrap()
}

#[test]
fn fit_writes_outputs_and_lowers_the_loss() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = fit(&fixture().join("scene.json"), &out, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["transforms.json", "loss_trace.csv", "human_0.obj", "human_0.parts", "object_0.obj", "object_0.parts", "reconstruction.json", "overlay.png", "eval.csv"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let r = report(&out);
    assert!(r.final_loss.total < r.initial_loss.total);
    assert_eq!(r.steps, 150);
    let obj = &r.objects[0];
    assert_eq!((obj.action.as_str(), obj.action_source.as_str()), ("sit", "retrieval"));
    assert!(obj.retrieval_distance.is_some());
    assert_eq!(obj.size_prior, 0.85);
    let pairs: Vec<(&str, &str)> = obj.contacts.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    assert_eq!(pairs, [("chair seat", "hips"), ("chair back", "spine")]);
    assert_eq!(obj.candidates.len(), 3);
    let trace = std::fs::read_to_string(out.join("loss_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 151);
    assert!(r.metrics.is_some());
}

#[test]
fn action_override_skips_retrieval() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = edited_fixture(&tmp.path().join("in"), |v| v["pose_database"] = "does_not_exist.jsonl".into());
    let without = fit(&scene, &tmp.path().join("a"), &[]);
    assert_eq!(code(&without), 3, "{}", stderr(&without));
    assert!(stderr(&without).contains("load_inputs"));

    let out = tmp.path().join("b");
    let with = fit(&scene, &out, &["--action", "sit"]);
    assert_eq!(code(&with), 0, "{}", stderr(&with));
    let obj = &report(&out).objects[0];
    assert_eq!((obj.action.as_str(), obj.action_source.as_str()), ("sit", "override"));
    assert_eq!(obj.retrieval_distance, None);
}

#[test]
fn schema_violations_exit_2_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = edited_fixture(&tmp.path().join("m"), |v| {
        v["objects"][0].as_object_mut().unwrap().remove("mask");
    });
    let o = fit(&scene, &tmp.path().join("o"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("objects[0].mask"), "{}", stderr(&o));

    let scene = edited_fixture(&tmp.path().join("u"), |v| v["humans"][0]["bogus"] = 1.into());
    let o = fit(&scene, &tmp.path().join("o"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("humans[0]"), "{}", stderr(&o));

    let scene = edited_fixture(&tmp.path().join("p"), |v| v["optimizer"]["steps"] = "many".into());
    let o = fit(&scene, &tmp.path().join("o"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("optimizer.steps"), "{}", stderr(&o));
}

#[test]
fn stage_failures_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = edited_fixture(&tmp.path().join("m"), |v| v["objects"][0]["mask"] = "missing.png".into());
    let o = fit(&scene, &tmp.path().join("o"), &[]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("load_inputs") && stderr(&o).contains("missing.png"), "{}", stderr(&o));

    // No cached answer for this action and the network is off.
    let o = fit(&fixture().join("scene.json"), &tmp.path().join("o"), &["--action", "juggle"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("stage priors") && stderr(&o).contains("network access is disabled"), "{}", stderr(&o));
    assert!(!tmp.path().join("o/transforms.json").exists());
}

#[test]
fn several_scenes_go_to_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let second = edited_fixture(&tmp.path().join("second"), |v| v["objects"][0]["action"] = "sit".into());
    let renamed = second.with_file_name("other.json");
    std::fs::rename(&second, &renamed).unwrap();
    let out = tmp.path().join("out");
    let scene = fixture().join("scene.json");
    let o = hoi(&[
        "fit", "--no-network", "--steps", "50", "--jobs", "2",
        "--scene", scene.to_str().unwrap(), "--scene", renamed.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(report(&out.join("scene")).objects[0].action_source, "retrieval");
    assert_eq!(report(&out.join("other")).objects[0].action_source, "scene");
}

#[test]
fn prior_and_retrieve_subcommands() {
    let cache = fixture().join("priors_cache.jsonl");
    let cache = cache.to_str().unwrap();
    let o = hoi(&["prior", "size", "--category", "bed", "--cache", cache, "--no-network"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["size"], 2.0);

    let o = hoi(&["prior", "contacts", "--category", "chair", "--action", "stand on", "--cache", cache, "--no-network"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pairs"], serde_json::json!([["chair seat", "feet"]]));

    let o = hoi(&["prior", "votes", "5"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "Uncertain");
    assert_eq!(code(&hoi(&["prior", "votes", "11"])), 3);

    let db = fixture().join("poses.jsonl");
    let body = fixture().join("body.json");
    let o = hoi(&["retrieve", "--database", db.to_str().unwrap(), "--pose", body.to_str().unwrap(), "--category", "chair"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["action"], "sit");
}

#[test]
fn eval_cluster_render_and_synth() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = fixture().join("ground_truth/reconstruction.json");
    let o = hoi(&["eval", "--pred", gt.to_str().unwrap(), "--gt", gt.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert!(row[2].parse::<f64>().unwrap() < 1e-6 && row[3].parse::<f64>().unwrap() < 1e-6, "{text}");

    let manifest = tmp.path().join("frames.json");
    let frames = serde_json::json!({ "frames": [
        { "name": "a", "action": "sit", "prediction": gt, "ground_truth": gt },
        { "name": "b", "action": "sit", "prediction": gt, "ground_truth": gt },
    ]});
    std::fs::write(&manifest, frames.to_string()).unwrap();
    let out = tmp.path().join("eval");
    let o = hoi(&["eval", "--frames", manifest.to_str().unwrap(), "--one-way", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let actions = std::fs::read_to_string(out.join("eval_actions.csv")).unwrap();
    assert!(actions.starts_with("# chamfer: one-way\n"));
    assert!(actions.lines().nth(2).unwrap().starts_with("sit,2,"));

    let ex = fixture().join("exemplars");
    let meshes: Vec<String> = (0..3).map(|i| ex.join(format!("exemplar_{i:02}.obj")).display().to_string()).collect();
    let cl = tmp.path().join("cluster");
    let mut args = vec!["cluster", "--category", "chair", "--k", "2", "--out", cl.to_str().unwrap()];
    args.extend(meshes.iter().map(String::as_str));
    let o = hoi(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 2);
    assert!(cl.join("manifest.json").is_file());

    let png = tmp.path().join("overlay.png");
    let mask = fixture().join("mask.png");
    let o = hoi(&["render", "--reconstruction", gt.to_str().unwrap(), "--mask", mask.to_str().unwrap(), "--out", png.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(png.is_file());

    let synth = tmp.path().join("synth");
    let o = hoi(&["synth", "--out", synth.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["priors_cache.jsonl", "poses.jsonl", "body.json", "keypoints.json"] {
        assert_eq!(std::fs::read(synth.join(f)).unwrap(), std::fs::read(fixture().join(f)).unwrap(), "{f}");
    }
}
