use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn treecoal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treecoal")).args(args).current_dir(dir).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    fs::write(dir.join(name), body).unwrap();
}

#[test]
fn small_example_tree_csv_has_fifteen_vertices() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schedule": {"family": {"name": "small_example"}}}"#);
    let out = treecoal(dir.path(), &["sample-tree", "--config", "c.json", "--seed", "7", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/tree.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 15);
    assert!(!dir.path().join("o/tree.svg").exists());
}

#[test]
fn sine_profile_renders_coloured_svg() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schedule": {"profile": {"n": 1000, "scale": 2000, "shape": "sine"}}}"#);
    let out = treecoal(dir.path(), &["sample-tree", "--config", "c.json", "--render", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = fs::read_to_string(dir.path().join("o/tree.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    // low vertices green, high vertices red
    assert!(svg.contains("#28aa30"));
    assert!(svg.contains("#f00030"));
}

#[test]
fn zero_k_gives_empty_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schedule": {"family": {"name": "path", "n": 10}}, "replicates": 5}"#);
    let out = treecoal(dir.path(), &["matrix", "--config", "c.json", "--k", "0", "--out", "o"]);
    assert!(out.status.success());
    let e: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/matrices.json")).unwrap()).unwrap();
    assert_eq!(e["k"], 0);
    assert_eq!(e["samples"].as_array().unwrap().len(), 0);
}

#[test]
fn matrix_distances_are_scaled() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schedule": {"family": {"name": "path", "n": 10}}, "replicates": 20, "k": 3}"#);
    assert!(treecoal(dir.path(), &["matrix", "--config", "c.json", "--out", "o"]).status.success());
    let e: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/matrices.json")).unwrap()).unwrap();
    for s in e["samples"].as_array().unwrap() {
        let v: Vec<f64> = s.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(v.len(), 3);
        // on a path the distance is the height difference
        assert!(v.iter().all(|&d| (0.0..=1.0).contains(&d)));
        let max = v.iter().copied().fold(0.0, f64::max);
        assert!((2.0 * max - v.iter().sum::<f64>()).abs() < 1e-12, "{v:?}");
    }
}

#[test]
fn empty_config_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", "");
    let out = treecoal(dir.path(), &["matrix", "--config", "c.json", "--out", "o"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
    // no schedule source configured
    write(dir.path(), "d.json", "{}");
    assert_eq!(treecoal(dir.path(), &["matrix", "--config", "d.json", "--out", "o"]).status.code(), Some(1));
    // two sources in one slot
    write(dir.path(), "e.json", r#"{"schedule": {"file": "s.json", "family": {"name": "small_example"}}}"#);
    assert_eq!(treecoal(dir.path(), &["matrix", "--config", "e.json", "--out", "o"]).status.code(), Some(1));
    write(dir.path(), "f.json", r#"{"replicates": 0, "schedule": {"family": {"name": "small_example"}}}"#);
    assert_eq!(treecoal(dir.path(), &["matrix", "--config", "f.json", "--out", "o"]).status.code(), Some(1));
    assert_eq!(treecoal(dir.path(), &["matrix", "--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn mismatched_schedule_exits_with_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    // row 1 has three vertices but the root has two children
    write(dir.path(), "s.json", r#"{"n": 3, "rows": [[[2, 1]], [[1, 3]]]}"#);
    write(dir.path(), "c.json", r#"{"schedule": {"file": "s.json"}, "k": 2}"#);
    for cmd in ["matrix", "check", "sample-tree"] {
        let out = treecoal(dir.path(), &[cmd, "--config", "c.json", "--out", "o"]);
        assert_eq!(out.status.code(), Some(2), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_input_exits_with_io_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schedule": {"file": "absent.json"}}"#);
    assert_eq!(treecoal(dir.path(), &["matrix", "--config", "c.json", "--out", "o"]).status.code(), Some(3));
    assert_eq!(treecoal(dir.path(), &["matrix", "--config", "nope.json"]).status.code(), Some(3));
}

#[test]
fn limit_matrix_and_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"replicates": 40, "k": 3, "permutations": 49,
            "schedule": {"family": {"name": "kingman", "n": 42, "m": 7}},
            "limit": {"params": {"nu": {"cdf_grid": [[0, 0], [1, 1]]}, "rho": {"grid": [[0, 1, 2]]}, "theta": []}}}"#,
    );
    assert!(treecoal(dir.path(), &["matrix", "--config", "c.json", "--out", "a"]).status.success());
    assert!(treecoal(dir.path(), &["limit-matrix", "--config", "c.json", "--out", "b"]).status.success());
    write(
        dir.path(),
        "d.json",
        r#"{"permutations": 49, "ensembles": {"discrete": "a/matrices.json", "limit": "b/limit_matrices.json"}}"#,
    );
    let out = treecoal(dir.path(), &["compare", "--config", "d.json", "--out", "r"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r/report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["entries"].as_array().unwrap().iter().map(|e| e["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["energy", "ks_1_2", "ks_1_3", "ks_2_3"]);
    let events = fs::read_to_string(dir.path().join("b/limit_events.jsonl")).unwrap();
    // every trace ends with all labels in one block
    assert!(events.lines().last().unwrap().contains("[[1,2,3]]"));
}

#[test]
fn compare_rejects_mismatched_k() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", r#"{"k": 2, "scale": 1.0, "samples": [[0.5]]}"#);
    write(dir.path(), "b.json", r#"{"k": 3, "scale": 1.0, "samples": [[0.5, 0.5, 0.2]]}"#);
    write(dir.path(), "c.json", r#"{"ensembles": {"discrete": "a.json", "limit": "b.json"}}"#);
    assert_eq!(treecoal(dir.path(), &["compare", "--config", "c.json", "--out", "o"]).status.code(), Some(2));
}

#[test]
fn gwve_writes_paths_and_extraction() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{"replicates": 30, "environment": {"inline": {"n": 50, "ell": 50, "generator": {"name": "geometric"}}}}"#,
    );
    let out = treecoal(dir.path(), &["gwve", "--config", "c.json", "--seed", "3", "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let paths = fs::read_to_string(dir.path().join("o/paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 1 + 30 * 51);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/gwve.json")).unwrap()).unwrap();
    assert_eq!(summary["replicates"], 30);
    if summary["first_surviving"].is_u64() {
        assert!(dir.path().join("o/limit_params.json").exists());
    }
}

#[test]
fn threads_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{"schedule": {"family": {"name": "kingman", "n": 42, "m": 7}}, "replicates": 50, "k": 4}"#);
    for (t, o) in [("1", "one"), ("4", "four")] {
        assert!(treecoal(dir.path(), &["matrix", "--config", "c.json", "--threads", t, "--out", o]).status.success());
    }
    assert_eq!(
        fs::read(dir.path().join("one/matrices.json")).unwrap(),
        fs::read(dir.path().join("four/matrices.json")).unwrap()
    );
}
