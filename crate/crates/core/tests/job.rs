use std::path::{Path, PathBuf};

use nalgebra::Vector3;

use peelplan::fixtures;
use peelplan::job::*;
use peelplan::motion::CheckMode;
use peelplan::se3::{RigidTransform, Rotation};
use peelplan::sequencing::TourMethod;
use peelplan::solids::Dim;
use peelplan::Error;

fn fixture_config(name: &str, dir: &Path) -> JobConfig {
    let path = write_fixture(&fixtures::by_name(name).unwrap(), dir).unwrap();
    JobConfig::load(&path).unwrap()
}

fn plan(config: &JobConfig) -> JobResult {
    run(config, &RunOptions::default()).unwrap()
}

fn check(doc: &PlanDocument, config: &JobConfig) -> ValidationReport {
    validate(doc, config, &ValidateOptions::default()).unwrap()
}

fn failures(report: &ValidationReport) -> Vec<String> {
    report.failures().map(|a| format!("{} {}: {}", a.kind, a.subject, a.detail)).collect()
}

#[test]
fn two_square_plan_validates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("two-square", dir.path());
    let result = plan(&cfg);
    let doc = &result.document;
    assert_eq!(doc.status, Verdict::AllRemovedWithPaths);
    assert_eq!(doc.schema_version, SCHEMA_VERSION);
    assert_eq!(doc.rounds.len(), 1);
    let r = &doc.rounds[0];
    assert_eq!(r.removed, vec![0]);
    assert_eq!(r.paths.len(), r.sequence.stops.len() + 1);
    assert_eq!(r.sequence.leg_costs.len(), r.paths.len());
    assert!((r.sequence.leg_costs.iter().sum::<f64>() - r.sequence.cost).abs() < 1e-9);
    assert_eq!(result.summary.verdict, "all_removed_with_paths");
    assert_eq!(result.summary.legs, r.paths.len());
    assert_eq!(result.round_log.len(), 1);
    let report = check(doc, &cfg);
    assert!(report.passed(), "{:#?}", failures(&report));
    assert!(report.of_kind("collision").count() == r.paths.len());
}

#[test]
fn corrupted_waypoint_fails_exactly_one_collision_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("two-square", dir.path());
    let mut doc = plan(&cfg).document;
    let path = &mut doc.rounds[0].paths[0];
    let k = (path.clear_from + path.clear_to) / 2;
    let w = path.waypoints[k].to_transform();
    let buried = RigidTransform::new(w.rotation, Vector3::new(3.0, 3.0, 0.0));
    path.waypoints[k] = TransformRecord::from_transform(&buried, Dim::Two);
    let report = check(&doc, &cfg);
    let collisions: Vec<&Assertion> = report.of_kind("collision").filter(|a| !a.passed).collect();
    assert_eq!(collisions.len(), 1, "{:#?}", failures(&report));
    assert_eq!(collisions[0].subject, "round 0 leg 0");
    assert!(collisions[0].detail.contains(&format!("waypoint {}", k.saturating_sub(1))) || collisions[0].detail.contains(&format!("waypoint {k}")));
    assert!(!report.passed());
}

#[test]
fn tampered_records_are_caught() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("l-part", dir.path());
    let doc = plan(&cfg).document;

    let mut bad = doc.clone();
    bad.rounds[0].sequence.cost *= 1.5;
    assert!(check(&bad, &cfg).of_kind("cost").any(|a| !a.passed));

    let mut bad = doc.clone();
    bad.rounds[0].removed.pop();
    assert!(!check(&bad, &cfg).passed());

    let mut bad = doc.clone();
    bad.status = Verdict::Unreachable { remaining: vec![0], blocking_features: vec![] };
    assert!(check(&bad, &cfg).of_kind("verdict").any(|a| !a.passed));

    let mut bad = doc.clone();
    bad.rounds[0].paths.pop();
    assert!(check(&bad, &cfg).of_kind("legs").any(|a| !a.passed));

    let mut other = cfg.clone();
    other.epsilon_voxels = 3.0;
    assert!(check(&doc, &other).of_kind("config").any(|a| !a.passed));

    let mut bad = doc;
    bad.schema_version = 99;
    assert!(check(&bad, &cfg).of_kind("schema").any(|a| !a.passed));
}

#[test]
fn plan_without_support_is_trivially_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("bare", dir.path());
    assert!(cfg.support.is_none());
    let result = plan(&cfg);
    assert_eq!(result.document.status, Verdict::AllRemovedWithPaths);
    assert!(result.document.rounds.is_empty());
    assert_eq!(result.summary.tour_cost, 0.0);
    assert!(check(&result.document, &cfg).passed());
}

#[test]
fn internal_void_is_unreachable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("internal-void", dir.path());
    let result = plan(&cfg);
    let Verdict::Unreachable { remaining, blocking_features } = &result.document.status else {
        panic!("expected unreachable, got {:?}", result.document.status);
    };
    assert_eq!(remaining.len(), 1);
    assert!(!blocking_features.is_empty());
    assert_eq!(result.document.rounds.len(), 1);
    let report = check(&result.document, &cfg);
    assert!(report.passed(), "{:#?}", failures(&report));
}

#[test]
fn runs_are_deterministic_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("forest", dir.path());
    let a = plan(&cfg).document.to_json();
    let b = plan(&cfg).document.to_json();
    assert_eq!(a, b);
    let back = PlanDocument::from_json(&a).unwrap();
    assert_eq!(back.to_json(), a);
    let value: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(value["status"]["verdict"], "all_removed_with_paths");
    assert!(value["rounds"][0]["paths"][0]["waypoints"][0]["theta"].is_number());
    assert!(value.get("timings").is_none() && value["rounds"][0].get("timings").is_none());
}

#[test]
fn exact_ordering_and_mesh_mode() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture_config("l-part", dir.path());
    let tree = plan(&cfg).document;
    cfg.exact_tsp = true;
    cfg.mode = CheckMode::Mesh;
    let exact = plan(&cfg).document;
    assert_eq!(exact.status, Verdict::AllRemovedWithPaths);
    for (t, e) in tree.rounds.iter().zip(&exact.rounds) {
        assert_eq!(e.sequence.method, TourMethod::HeldKarp);
        assert!(e.sequence.graph_cost <= t.sequence.graph_cost + 1e-9);
    }
    let report = check(&exact, &cfg);
    assert!(report.passed(), "{:#?}", failures(&report));
}

#[test]
fn outputs_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("two-square", dir.path());
    let result = run(&cfg, &RunOptions { debug_fields: true }).unwrap();
    let out = dir.path().join("out");
    write_outputs(&result, &out).unwrap();
    for f in ["plan.json", "rounds.jsonl", "summary.json", "fibers.json", "paths/round0_leg0.obj"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let log = std::fs::read_to_string(out.join("rounds.jsonl")).unwrap();
    assert_eq!(log.lines().count(), result.document.rounds.len());
    let line: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert!(line["timings"]["paths_s"].is_number());
    let fields: Vec<PathBuf> = std::fs::read_dir(out.join("fields")).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(fields.iter().any(|p| p.ends_with("round0_near_net.vtk")));
    assert!(fields.iter().any(|p| p.ends_with("round0_contact.vtk")));
    assert!(fields.iter().any(|p| p.file_name().unwrap().to_string_lossy().starts_with("round0_overlap_r")));
}

#[test]
fn configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture_config("two-square", dir.path());
    let text = std::fs::read_to_string(dir.path().join("config.json")).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();

    let mut v = value.clone();
    v["unexpected"] = serde_json::json!(1);
    assert!(JobConfig::from_json(&v.to_string(), dir.path()).is_err());

    let mut v = value.clone();
    v["spacing"] = serde_json::json!(-1.0);
    assert!(matches!(JobConfig::from_json(&v.to_string(), dir.path()), Err(Error::Config(_))));

    let mut v = value.clone();
    v["part"] = serde_json::json!("missing.poly");
    let c = JobConfig::from_json(&v.to_string(), dir.path()).unwrap();
    assert!(matches!(run(&c, &RunOptions::default()), Err(Error::Config(_))));

    let mut v = value.clone();
    v["dimension"] = serde_json::json!(3);
    v["tool_tip"] = serde_json::json!([0.0, 0.0, 0.0]);
    v["rotations"]["method"] = serde_json::json!("hopf");
    let c = JobConfig::from_json(&v.to_string(), dir.path()).unwrap();
    assert!(matches!(run(&c, &RunOptions::default()), Err(Error::DimensionMismatch(_))));

    value["rotations"]["method"] = serde_json::json!("hopf");
    let c = JobConfig::from_json(&value.to_string(), dir.path()).unwrap();
    assert!(matches!(run(&c, &RunOptions::default()), Err(Error::BadMethodForDimension { .. })));

    let mut tight = cfg;
    tight.memory_budget_mb = 0;
    assert!(run(&tight, &RunOptions::default()).is_err());
}

#[test]
fn transform_records_round_trip() {
    let t = RigidTransform::new(Rotation::planar(0.7), Vector3::new(1.0, -2.0, 0.0));
    let r = TransformRecord::from_transform(&t, Dim::Two);
    assert_eq!(r.dim(), Dim::Two);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("theta"));
    let back: TransformRecord = serde_json::from_str(&json).unwrap();
    assert!((back.to_transform().matrix() - t.matrix()).abs().max() < 1e-12);

    let t = RigidTransform::new(Rotation::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0).normalize(), 1.1), Vector3::new(1.0, 2.0, 3.0));
    let r = TransformRecord::from_transform(&t, Dim::Three);
    let json = serde_json::to_string(&r).unwrap();
    assert!(json.contains("quaternion"));
    let back: TransformRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(back.dim(), Dim::Three);
    assert!((back.to_transform().matrix() - t.matrix()).abs().max() < 1e-12);
}
