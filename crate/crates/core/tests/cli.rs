use std::fs;
use std::path::{Path, PathBuf};

use sensor_game::cli::run;
use tempfile::TempDir;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn sg(args: &[&str]) -> i32 {
    let mut full = vec!["sensor-game"];
    full.extend_from_slice(args);
    run(full)
}

fn json(path: PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const PATH: &str = r#"{"n":5,"leader":0,"mode":"undirected","edges":[[0,1],[1,2],[2,3],[3,4]]}"#;
const STAR: &str = r#"{"n":5,"leader":0,"mode":"undirected","edges":[[0,1],[0,2],[0,3],[0,4]]}"#;
const CYCLE: &str = r#"{"n":4,"leader":0,"mode":"undirected","edges":[[0,1],[1,2],[2,3],[3,0]]}"#;
const DIRECTED: &str = r#"{"n":5,"leader":0,"mode":"directed","edges":[[0,1],[1,2],[1,3],[0,4]]}"#;
const TREE: &str = r#"{"n":8,"leader":2,"mode":"undirected","edges":[[0,1],[1,2],[2,3],[3,4],[1,5],[5,6],[2,7]]}"#;

#[test]
fn kernel_all_reports_agreement() {
    let tmp = TempDir::new().unwrap();
    let net = write(tmp.path(), "path.json", PATH);
    let out = tmp.path().join("k");
    assert_eq!(sg(&["kernel", "--network", net.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let line = fs::read_to_string(out.join("discrepancy.txt")).unwrap();
    let value: f64 = line.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!(value <= 1e-9);
    let kernel = json(out.join("kernel-path-overlap.json"));
    assert_eq!(kernel["order"], serde_json::json!([1, 2, 3, 4]));
    assert_eq!(kernel["method"], "path-overlap");
    assert_eq!(kernel["matrix"][3][3], 4.0);
    assert_eq!(fs::read_to_string(out.join("kernel-path-overlap.csv")).unwrap().lines().next().unwrap(), "1,1,1,1");
}

#[test]
fn kernel_method_must_fit_the_topology() {
    let tmp = TempDir::new().unwrap();
    let cycle = write(tmp.path(), "cycle.json", CYCLE);
    let out = tmp.path().join("k");
    assert_eq!(sg(&["kernel", "--network", cycle.to_str().unwrap(), "--method", "path-overlap", "--out", out.to_str().unwrap()]), 1);

    let directed = write(tmp.path(), "directed.json", DIRECTED);
    assert_eq!(sg(&["kernel", "--network", directed.to_str().unwrap(), "--method", "reachability", "--out", out.to_str().unwrap()]), 0);
    let csv = fs::read_to_string(out.join("kernel-reachability.csv")).unwrap();
    assert!(csv.split(|c| c == ',' || c == '\n').filter(|s| !s.is_empty()).all(|s| s == "0" || s == "1"));
}

#[test]
fn solve_reports_and_flags() {
    let tmp = TempDir::new().unwrap();
    let path = write(tmp.path(), "path.json", PATH);
    let star = write(tmp.path(), "star.json", STAR);
    let out = tmp.path().join("s");
    let o = out.to_str().unwrap();

    assert_eq!(sg(&["solve", "--network", path.to_str().unwrap(), "--f", "1", "--solver", "ne", "--out", o]), 0);
    let report = json(out.join("report.json"));
    assert_eq!(report["kind"], "pure_nash");
    assert_eq!(report["value"], 1.0);
    assert_eq!(report["certified_by"], "saddle_check");
    assert_eq!(report["evaluations"], 16);
    assert!(report["strategies"][0]["attacker"].is_array());

    assert_eq!(sg(&["solve", "--network", star.to_str().unwrap(), "--f", "1", "--solver", "ne", "--out", o]), 0);
    let report = json(out.join("report.json"));
    assert_eq!(report["no_pure_ne"], true);
    assert!(report["value"].is_null());
}

#[test]
fn tree_solver_agrees_with_brute_force() {
    let tmp = TempDir::new().unwrap();
    let net = write(tmp.path(), "tree.json", TREE);
    let value = |solver: &str| {
        let out = tmp.path().join(solver);
        assert_eq!(sg(&["solve", "--network", net.to_str().unwrap(), "--f", "2", "--solver", solver, "--out", out.to_str().unwrap()]), 0);
        json(out.join("report.json"))["value"].as_f64().unwrap()
    };
    assert!((value("stackelberg-tree") - value("stackelberg-brute")).abs() <= 1e-9);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let path = write(tmp.path(), "path.json", PATH);
    let bad = write(tmp.path(), "bad.json", "{ not json");
    let o = tmp.path().join("o");
    let o = o.to_str().unwrap();
    assert_eq!(sg(&["solve", "--network", bad.to_str().unwrap(), "--f", "1", "--out", o]), 1);
    assert_eq!(sg(&["solve", "--network", path.to_str().unwrap(), "--f", "7", "--out", o]), 1);
    assert_eq!(sg(&["reproduce", "--recipe", "nope", "--out", o]), 1);
    assert_eq!(sg(&["frobnicate"]), 1);

    let edges: Vec<String> = (1..40).map(|k| format!("[{},{}]", k - 1, k)).collect();
    let long = write(tmp.path(), "long.json", &format!(r#"{{"n":40,"leader":0,"mode":"undirected","edges":[{}]}}"#, edges.join(",")));
    assert_eq!(sg(&["solve", "--network", long.to_str().unwrap(), "--f", "6", "--solver", "stackelberg-brute", "--out", o]), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let run_into = |name: &str| {
        let out = tmp.path().join(name);
        let args = ["reproduce", "--recipe", "alg1-vs-brute", "--seed", "9", "--samples", "10", "--max-n", "7", "--out", out.to_str().unwrap()];
        assert_eq!(sg(&args), 0);
        ["alg1-vs-brute.csv", "summary.txt", "manifest.json"].map(|f| fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run_into("a"), run_into("b"));
    let manifest = json(tmp.path().join("a/manifest.json"));
    assert_eq!(manifest["command"], "reproduce");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn platoon_actions() {
    let tmp = TempDir::new().unwrap();
    let scn = write(
        tmp.path(),
        "scn.json",
        r#"{"n":6,"leader_position":0,"mode":"undirected","k_p":1.0,"k_u":1.0,"spacing":[0,0,0,0,0,0]}"#,
    );
    let s = scn.to_str().unwrap();
    let out = tmp.path().join("p");
    let o = out.to_str().unwrap();

    assert_eq!(sg(&["platoon", "--scenario", s, "--f", "2", "--action", "game", "--out", o]), 0);
    assert_eq!(json(out.join("report.json"))["kind"], "pure_nash");

    assert_eq!(sg(&["platoon", "--scenario", s, "--f", "2", "--action", "sweep", "--out", o]), 0);
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("position,value,ne_exists,strategies"));
    assert_eq!(sweep.lines().count(), 7);

    assert_eq!(sg(&["platoon", "--scenario", s, "--f", "1", "--action", "simulate", "--out", o]), 0);
    assert!(fs::read_to_string(out.join("trajectory.csv")).unwrap().starts_with("t,x0"));
    assert!(fs::read_to_string(out.join("dc-check.txt")).unwrap().starts_with("dc-check:"));
}

#[test]
fn simulate_writes_trajectory_and_sweep() {
    let tmp = TempDir::new().unwrap();
    let net = write(tmp.path(), "tree.json", TREE);
    let out = tmp.path().join("sim");
    let args = ["simulate", "--network", net.to_str().unwrap(), "--f", "2", "--omega-min", "0.01", "--omega-max", "100", "--points", "9", "--out", out.to_str().unwrap()];
    assert_eq!(sg(&args), 0);
    let sweep = fs::read_to_string(out.join("frequency.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 10);
    let gains: Vec<f64> = sweep.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(gains.windows(2).all(|w| w[1] <= w[0]));
}
