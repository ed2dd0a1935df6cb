use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use ivmkit::cubes::CubeDoc;
use ivmkit::cubical_space::{AxisInterval, Polyinterval, TorusGrid};
use ivmkit::field::GroundField;
use ivmkit::graded_algebra::{AlgebraDoc, GradedAlgebra};
use ivmkit::ideals::{GradedIdeal, IdealDoc};
use ivmkit::ivm_engine::{CohomologyMeasure, Measure};
use serde_json::Value;

fn inputs(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/inputs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ivmkit")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json output")
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("ivmkit-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, contents).unwrap();
    p
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cross_core_cube_contains_top_times_th() {
    let v = json(&["demo", "torus-cross-core"]);
    assert_eq!(v["cube_nonzero"], true);
    assert_eq!(v["witness_in_cube"], true);
    assert_eq!(v["witness"], "(T)*dp1dp2dp3dq1dq2dq3⊗h");
}

#[test]
fn small_sphere_disk_evaluates_to_zero() {
    let v = json(&["ivm", "eval", "--measure", path(&inputs("sphere.json")), "--region", path(&inputs("sphere-disk-2-5.json"))]);
    assert_eq!(v["zero"], true);
    let doc: IdealDoc = serde_json::from_value(v).unwrap();
    let alg = Arc::new(GradedAlgebra::qh_sphere(GroundField::F2));
    assert!(GradedIdeal::from_doc(&alg, &doc).unwrap().is_zero());
}

#[test]
fn eval_output_round_trips_as_ideal_document() {
    let v = json(&["ivm", "eval", "--measure", path(&inputs("torus2.json")), "--region", path(&inputs("torus2-band.json"))]);
    let doc: IdealDoc = serde_json::from_value(v).unwrap();
    let mu = CohomologyMeasure::new(TorusGrid::cubic(2, 4).unwrap(), GroundField::F2);
    let band = Polyinterval::new(vec![AxisInterval::Arc { start: 0, len: 2 }, AxisInterval::Full]).cells(&mu.grid);
    let direct = mu.compact_value(&band).unwrap();
    assert_eq!(GradedIdeal::from_doc(mu.algebra(), &doc).unwrap(), direct);
    assert!(!direct.is_zero() && !direct.is_whole());
}

#[test]
fn corrupted_cube_names_the_failing_face() {
    let out = run(&["cubes", "validate", "--cube", path(&inputs("square-corrupt.json"))]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("face (00 → 11)"), "{err}");
    assert!(run(&["cubes", "validate", "--cube", path(&inputs("square.json"))]).status.success());
}

#[test]
fn same_seed_gives_identical_output() {
    let args = ["--format", "json", "centerpoint", "harness", "--kind", "gromov-torus", "--seed", "77", "--count", "6", "--resolution", "8"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--format", "json", "demo", "simplex-centerpoint", "--seed", "5"]);
    let d = run(&["--format", "json", "demo", "simplex-centerpoint", "--seed", "5"]);
    assert!(c.status.success());
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn exit_codes_distinguish_failures() {
    let bad = temp_file("bad.json", r#"{"kind": "bogus"}"#);
    assert_eq!(run(&["ivm", "eval", "--measure", path(&bad), "--region", path(&bad)]).status.code(), Some(3));
    let torus = inputs("torus2.json");
    assert_eq!(run(&["ivm", "check-axioms", "--measure", path(&torus), "--limit", "3"]).status.code(), Some(2));
    let solve = std::fs::read_to_string(inputs("solve-fold.json")).unwrap().replace("\"bound\": 2", "\"bound\": 5");
    let solve = temp_file("solve.json", &solve);
    assert_eq!(run(&["centerpoint", "solve", "--input", path(&solve)]).status.code(), Some(1));
    assert!(run(&["centerpoint", "solve", "--input", path(&inputs("solve-fold.json"))]).status.success());
}

#[test]
fn cube_outputs_parse_as_cube_documents() {
    let cone: CubeDoc = serde_json::from_value(json(&["cubes", "cone", "--cube", path(&inputs("square.json")), "--direction", "2"])).unwrap();
    assert_eq!(cone.build().unwrap().n, 1);
    let cocone: CubeDoc =
        serde_json::from_value(json(&["cubes", "cone", "--cube", path(&inputs("square.json")), "--cocone"])).unwrap();
    assert_eq!(cocone.build().unwrap().n, 1);
    let tel: CubeDoc = serde_json::from_value(json(&["cubes", "telescope", "--ray", path(&inputs("ray-contracting.json"))])).unwrap();
    assert_eq!(tel.build().unwrap().n, 0);
    let h = json(&["cubes", "homology", "--cube", path(&inputs("square.json"))]);
    assert_eq!(h["acyclic"], true);
}

#[test]
fn algebra_commands() {
    let doc: AlgebraDoc = serde_json::from_value(json(&["algebra", "build", "--standard", "torus:2"])).unwrap();
    let file = temp_file("t2.json", &serde_json::to_string(&doc).unwrap());
    let rank = json(&["algebra", "rank", "--doc", path(&file), "--d", "2"]);
    assert_eq!(rank["value"], 2);
    assert_eq!(rank["mode"], "Exact");
    let slash = json(&["algebra", "slash-r", "--standard", "torus:3", "--r", "3"]);
    assert_eq!(slash["status"], "Exact");
    assert_eq!(slash["dim"], 4);
}

#[test]
fn axioms_and_pushforward_pass() {
    let v = json(&["ivm", "check-axioms", "--measure", path(&inputs("torus2.json")), "--lattice", path(&inputs("lattice-torus2.json"))]);
    assert_eq!(v.as_array().unwrap().len(), 2);
    let p = json(&[
        "ivm",
        "pushforward",
        "--measure",
        path(&inputs("torus2.json")),
        "--axes",
        "0",
        "--region",
        path(&inputs("circle-point.json")),
        "--check-axioms",
    ]);
    assert_eq!(p["dim"], 2);
}

#[test]
fn quick_demos_pass() {
    for name in ["torus-meridians", "three-cover", "novikov-vanishing", "gromov-torus", "simplex-centerpoint"] {
        let out = run(&["demo", name]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let nv = json(&["demo", "novikov-vanishing"]);
    assert!(nv["precisions"].as_array().unwrap().iter().all(|p| p["contracting_rank"] == 0 && p["constant_rank"] == 1));
}

#[test]
fn sphere_demo_follows_half_area_rule() {
    let data = temp_file("sphere.json", r#"{"field": "F2", "regions": [["n0","n1","n2","n3","m0"], ["n0","n1","n2","n3","m3","m0","m1"]], "check_axioms": false}"#);
    let v = json(&["demo", "sphere-ivqm", "--data", path(&data)]);
    let r = v["regions"].as_array().unwrap();
    assert_eq!((r[0]["area"].as_str(), r[0]["value"].as_str()), (Some("2/5"), Some("0")));
    assert_eq!((r[1]["area"].as_str(), r[1]["value"].as_str()), (Some("3/5"), Some("A")));
}
