use std::fs;
use std::process::{Command, Output};

fn coarsen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coarsen")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn build_graph_then_read_it_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = coarsen(&["build-graph", "--lattice", "hexagonal", "--extent", "4", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let file = dir.path().join("hexagonal_4.json");
    assert!(file.exists());
    let o = coarsen(&["check-shrink", "--graph", file.to_str().unwrap(), "--max-size", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"verdict\""));
}

#[test]
fn symmetry_and_excluded_rotation() {
    let o = coarsen(&["check-symmetry", "--lattice", "square", "--extent", "12"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rotation_order"], 4);
    let o = coarsen(&["check-symmetry", "--lattice", "square", "--extent", "12", "--rotation", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("excluded"));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(coarsen(&["simulate", "--lattice", "pentagonal"]).status.code(), Some(1));
    assert_eq!(coarsen(&["simulate", "--lattice", "square", "--p", "2"]).status.code(), Some(1));
    assert_eq!(coarsen(&["simulate"]).status.code(), Some(1));
    assert_eq!(coarsen(&["--help"]).status.code(), Some(0));
}

#[test]
fn simulate_logs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = coarsen(&[
            "--seed", "9", "--quiet", "simulate", "--lattice", "triangular", "--extent", "10", "--boundary",
            "periodic", "--horizon", "5", "--log", p.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    assert!(String::from_utf8_lossy(&bytes).starts_with("time,vertex,uniform,rate,delta_H,flipped\n"));
}

#[test]
fn geometry_emits_json() {
    let o = coarsen(&["geometry", "--lattice", "square", "--extent", "40", "--a", "4", "--L", "12"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["cover"].as_array().unwrap().len(), 96);
    let o = coarsen(&["geometry", "--lattice", "square", "--extent", "40", "--a", "2", "--L", "12"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn experiment_and_render() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"name": "t", "graph": {"builder": "square", "extent": 12, "boundary": "periodic"},
            "p": 0.5, "seeds": [1, 2], "horizon": 4, "sample_times": [1, 4],
            "observables": ["cluster_origin", "fixation"]}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = coarsen(&["--out", out.to_str().unwrap(), "experiment", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["series.csv", "fixation.csv", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let o = coarsen(&[
        "--out", out.to_str().unwrap(), "render", "--lattice", "square", "--extent", "40", "--time", "2", "--a",
        "4", "--L", "12",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(out.join("snapshot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("class=\"region\""));
}
