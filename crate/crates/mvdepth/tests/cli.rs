use std::path::Path;
use std::process::Command;

use mvdepth::manifest::{self, ManifestDoc};
use mvdepth::pfm;
use mvdepth_core::synth::{plane_scene, render};
use serde_json::Value;

fn mvdepth(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mvdepth"))
        .args(args)
        .env_remove("MVDEPTH_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = mvdepth(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn estimate_writes_two_maps_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let (data, est) = (dir.path().join("data"), dir.path().join("est"));
    ok(&["synth", "--out", s(&data), "--samples", "3", "--size", "24", "--views", "1"]);
    ok(&["estimate", "--manifest", s(&data.join("manifest.json")), "--out", s(&est), "--hyps", "16"]);
    let pfms = std::fs::read_dir(&est)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "pfm"))
        .count();
    assert_eq!(pfms, 6);
    let index = json(&est.join("index.json"));
    assert_eq!(index["samples"].as_array().unwrap().len(), 3);
    assert_eq!(index["settings"]["hyps"], 16);

    let default = dir.path().join("est_default");
    ok(&[
        "estimate", "--manifest", s(&data.join("manifest.json")), "--out", s(&default), "--hyps", "16", "--range",
        "default",
    ]);
    assert_eq!(json(&default.join("index.json"))["samples"][0]["range"], serde_json::json!([0.2, 100.0]));
}

/// A one-view plane sample plus predictions whose depth is `factor * gt`.
fn plane_with_predictions(dir: &Path, factor: f32) -> (String, String) {
    let sample = render(&plane_scene(2.0, 16, 16.0, &[[0.1, 0.0, 0.0]])).unwrap();
    let entry = manifest::write_sample(dir, "p", &sample).unwrap();
    manifest::write_doc(&dir.join("manifest.json"), &ManifestDoc { samples: vec![entry] }).unwrap();
    let pred = dir.join("pred");
    std::fs::create_dir_all(&pred).unwrap();
    let inv: Vec<f32> = sample.gt_depth().data().iter().map(|d| 1.0 / (d * factor)).collect();
    pfm::write(&pred.join("p_invdepth.pfm"), 16, 16, &inv).unwrap();
    (s(&dir.join("manifest.json")).to_string(), s(&pred).to_string())
}

#[test]
fn eval_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let (m, pred) = plane_with_predictions(dir.path(), 1.0);
    let out = dir.path().join("exact");
    ok(&["eval", "--manifest", &m, "--pred", &pred, "--out", s(&out)]);
    let r = json(&out.join("report.json"));
    assert_eq!(r["testset"]["mean_rel"], 0.0);
    assert_eq!(r["testset"]["mean_tau"], 100.0);
    assert!(r["per_sample"][0]["ause"].is_null());

    let dir = tempfile::tempdir().unwrap();
    let (m, pred) = plane_with_predictions(dir.path(), 0.5);
    let none = dir.path().join("none");
    ok(&["eval", "--manifest", &m, "--pred", &pred, "--out", s(&none), "--align", "none"]);
    let r = json(&none.join("report.json"));
    assert!((r["testset"]["mean_rel"].as_f64().unwrap() - 50.0).abs() < 1e-9);
    assert_eq!(r["testset"]["mean_tau"], 0.0);
    let median = dir.path().join("median");
    ok(&["eval", "--manifest", &m, "--pred", &pred, "--out", s(&median), "--align", "median"]);
    let r = json(&median.join("report.json"));
    assert!(r["testset"]["mean_rel"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["testset"]["mean_tau"], 100.0);
    assert_eq!(r["settings"]["alignment"], "median");
    let csv = std::fs::read_to_string(median.join("per_sample.csv")).unwrap();
    assert!(csv.starts_with("id,rel,tau,ause,valid_pixels,scale\np,"));
}

#[test]
fn failed_sample_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = plane_with_predictions(dir.path(), 1.0);
    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = mvdepth(&["eval", "--manifest", &m, "--pred", s(&empty), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_invdepth.pfm"));
    let r = json(&dir.path().join("o/report.json"));
    assert_eq!(r["errors"][0]["id"], "p");
    assert!(r["testset"].is_null());

    let bad = mvdepth(&["estimate", "--manifest", "/nonexistent/m.json", "--out", s(&dir.path().join("x"))]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(!mvdepth(&["eval", "--align", "sideways"]).status.success());
}

#[test]
fn sparsify_with_oracle_uncertainty_has_zero_area() {
    let dir = tempfile::tempdir().unwrap();
    let (m, pred) = plane_with_predictions(dir.path(), 1.0);
    // depth errors growing with the pixel index, uncertainty equal to them
    let gt = 2.0f32;
    let depth: Vec<f32> = (0..256).map(|i| gt * (1.0 + i as f32 / 512.0)).collect();
    let inv: Vec<f32> = depth.iter().map(|d| 1.0 / d).collect();
    let err: Vec<f32> = inv.iter().map(|v| ((1.0 / *v as f64 - gt as f64).abs() / gt as f64) as f32).collect();
    pfm::write(&Path::new(&pred).join("p_invdepth.pfm"), 16, 16, &inv).unwrap();
    pfm::write(&Path::new(&pred).join("p_uncert.pfm"), 16, 16, &err).unwrap();
    let out = dir.path().join("sp");
    ok(&["sparsify", "--manifest", &m, "--pred", &pred, "--out", s(&out)]);
    let r = json(&out.join("sparsify.json"));
    assert!(r["mean_ause"].as_f64().unwrap().abs() < 1e-9);
    let csv = std::fs::read_to_string(out.join("p_sparsification.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
    assert!(csv.starts_with("fraction,oracle,uncert,error\n0,1,1,0\n"));
}

#[test]
fn viewselect_single_view() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = plane_with_predictions(dir.path(), 1.0);
    let out = dir.path().join("vs");
    ok(&["viewselect", "--manifest", &m, "--out", s(&out), "--range", "1:4", "--hyps", "16"]);
    let csv = std::fs::read_to_string(out.join("p_viewselect.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("size,rel\n1,"));
    assert_eq!(json(&out.join("viewselect.json"))["per_sample"][0]["best_view_set"], serde_json::json!([1]));
}

#[test]
fn augstats_median_histogram_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("aug");
    ok(&["augstats", "--out", s(&out), "--iterations", "10000", "--track", "medians", "--seed", "4"]);
    let r = json(&out.join("augstats.json"));
    assert_eq!(r["median_count_range"], serde_json::json!([100, 100]));
    let csv = std::fs::read_to_string(out.join("augstats.csv")).unwrap();
    assert_eq!(csv.lines().count(), 101);
}

#[test]
fn environment_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env");
    let status = Command::new(env!("CARGO_BIN_EXE_mvdepth"))
        .args(["synth", "--size", "12", "--views", "1"])
        .env("MVDEPTH_OUT", &out)
        .env("MVDEPTH_SAMPLES", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let doc = json(&out.join("manifest.json"));
    assert_eq!(doc["samples"].as_array().unwrap().len(), 2);
}
