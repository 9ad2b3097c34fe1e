use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifs-chisel"))
        .args(args)
        .output()
        .expect("spawn ifs-chisel")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ellipse_prints_constants() {
    let o = run(&["ellipse", "--builtin", "paper-example"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "foci: (0, 0) (1, 0)\nlambda = 0.6\nD = 1\nM = 4\n");
}

#[test]
fn ellipse_json() {
    let o = run(&["ellipse", "--builtin", "sierpinski", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["m"].as_f64().unwrap() - 6.0).abs() < 1e-12);
    assert_eq!(v["foci"].as_array().unwrap().len(), 3);
}

#[test]
fn ifs_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sys.json");
    let json = r#"{"maps": [
        {"kind": "similitude", "center": [0, 0], "angle_rad": 0, "ratio": 0.5},
        {"kind": "affine", "a": 0.5, "b": 0, "c": 0, "d": 0.5, "e": 0.5, "f": 0}
    ]}"#;
    fs::write(&file, json).unwrap();
    let o = run(&["ellipse", "--ifs", path(&file)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("lambda = 0.5"));
}

#[test]
fn source_flags_are_exclusive() {
    let both = run(&["ellipse", "--builtin", "cantor", "--ifs", "x.json"]);
    assert_eq!(both.status.code(), Some(1));
    let neither = run(&["ellipse"]);
    assert_eq!(neither.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["ellipse", "--builtin", "koch"]).status.code(), Some(1));
    let o = run(&["verify", "--builtin", "cantor"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_pass_and_fail() {
    let ok = run(&["verify", "--builtin", "paper-example", "--seed", "3", "--json"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["n"], 10_000);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 5, "{keys:?}");

    let bad = run(&["verify", "--builtin", "paper-example", "--seed", "3", "--threshold", "1.2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn forward_iterate_writes_stages() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "iterate", "--builtin", "paper-example", "--mode", "forward", "--n", "10",
        "--seed-point", "1,1", "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let last = fs::read_to_string(dir.path().join("stage_010.csv")).unwrap();
    assert_eq!(last.lines().count(), 1 + 1024);
    assert!(last.starts_with("x,y\n"));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("index,count,hausdorff,nesting"));
    assert_eq!(trace.lines().count(), 1 + 11);
}

#[test]
fn deletion_iterate_writes_pbms() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "iterate", "--builtin", "sierpinski", "--mode", "deletion", "--n", "4",
        "--resolution", "64", "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for k in 0..=4 {
        let pbm = fs::read_to_string(dir.path().join(format!("stage_{k:03}.pbm"))).unwrap();
        assert!(pbm.starts_with("P1\n# ifs-chisel\n"));
    }
    assert!(dir.path().join("trace.csv").exists());
}

#[test]
fn resource_limit_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "iterate", "--builtin", "sierpinski", "--mode", "forward", "--n", "30",
        "--seed-point", "0,0", "--out", path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("stage_000.csv").exists());
}

#[test]
fn hausdorff_between_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "x,y\n0,0\n1,0\n").unwrap();
    fs::write(&b, "x,y\n0,0\n4,4\n").unwrap();
    let o = run(&["hausdorff", "--a", path(&a), "--b", path(&b)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "5");

    fs::write(&b, "x,y\n").unwrap();
    assert_eq!(run(&["hausdorff", "--a", path(&a), "--b", path(&b)]).status.code(), Some(1));
}

#[test]
fn locus_writes_region_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let foci = dir.path().join("foci.csv");
    fs::write(&foci, "x,y\n0,0\n1,0\n").unwrap();
    let region = dir.path().join("region.pbm");
    let outline = dir.path().join("outline.pbm");
    let o = run(&[
        "locus", "--foci", path(&foci), "--sum", "2", "--box=-1,-1,2,1",
        "--resolution", "30", "--out", path(&region), "--boundary", path(&outline),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&region).unwrap();
    assert!(text.starts_with("P1\n# ifs-chisel\n30 20\n"));
    assert!(fs::read_to_string(&outline).unwrap().contains('1'));
}

#[test]
fn attractor_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cantor.csv");
    let o = run(&["attractor", "--builtin", "cantor", "--eps", "0.001", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let rows = fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(stdout(&o).trim(), format!("{rows} points"));
    assert!(rows > 1);
}

#[test]
fn outputs_are_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut seen = Vec::new();
    for d in &dirs {
        let o = run(&[
            "iterate", "--builtin", "sierpinski", "--mode", "forward", "--n", "7",
            "--seed-point", "0.3,0.2", "--out", path(d.path()),
        ]);
        assert_eq!(o.status.code(), Some(0));
        let v = run(&["verify", "--builtin", "sierpinski", "--seed", "42", "--json"]);
        seen.push((
            fs::read(d.path().join("stage_007.csv")).unwrap(),
            fs::read(d.path().join("trace.csv")).unwrap(),
            stdout(&o),
            v.stdout,
        ));
    }
    assert_eq!(seen[0], seen[1]);
}
