use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hullcube"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn status(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture_args<'a>(cmd: &'a str, inst: &'a Path, cfg: &'a Path) -> Vec<&'a str> {
    vec![cmd, "--instance", inst.to_str().unwrap(), "--config", cfg.to_str().unwrap()]
}

#[test]
fn verify_passes_on_the_bundled_tree_fixture() {
    let (inst, cfg) = (fixture("tree.json"), fixture("tree.config.json"));
    let o = run(&fixture_args("verify", &inst, &cfg));
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["format"], "hullcube/verify/v1");
    assert_eq!(report["pass"], true);
    // the fixture is chosen so that the diagram is not trivial
    assert!(report["deleted"][0].as_u64().unwrap() > 0);
}

#[test]
fn bundled_fixture_matches_its_generator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tree.json");
    let o = run(&["gen", "--config", fixture("tree.config.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(status(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("tree.json")).unwrap());
}

#[test]
fn malformed_instance_exits_2_with_schema_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"format":"hullcube/instance/v1","ambient":{"graph":{"vertices":3,"edges":[[0,1,"x"]]}}}"#).unwrap();
    let o = run(&["verify", "--instance", bad.to_str().unwrap()]);
    assert_eq!(status(&o), 2);
    assert!(stderr(&o).contains("ambient.graph.edges[0][2]"), "{}", stderr(&o));

    std::fs::write(&bad, r#"{"format":"hullcube/instance/v0"}"#).unwrap();
    let o = run(&["build", "--instance", bad.to_str().unwrap()]);
    assert_eq!(status(&o), 2, "{}", stderr(&o));
}

#[test]
fn bad_config_and_arguments_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"format":"hullcube/config/v1","params":{"eps":0.25,"eps2":0.1}}"#).unwrap();
    let o = run(&["gen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(status(&o), 2);
    assert!(stderr(&o).contains("at `params`"), "{}", stderr(&o));

    assert_eq!(status(&run(&["verify", "--suite", "no-such-suite"])), 2);
    assert_eq!(status(&run(&["gen"])), 2, "gen without a generator");
    assert_eq!(status(&run(&["build"])), 2, "build without an instance");

    // F point outside the ambient space
    std::fs::write(&cfg, r#"{"format":"hullcube/config/v1","f":[0,100000]}"#).unwrap();
    let o = run(&["build", "--instance", fixture("tree.json").to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(status(&o), 2, "{}", stderr(&o));
}

#[test]
fn failed_check_exits_1_and_names_the_face() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("tree.config.json")).unwrap();
    let mut cfg: serde_json::Value = serde_json::from_str(&text).unwrap();
    cfg["face_bound"] = 0.into();
    let path = dir.path().join("strict.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let inst = fixture("tree.json");
    let o = run(&fixture_args("verify", &inst, &path));
    assert_eq!(status(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], false);
    assert!(report["failures"][0].as_str().unwrap().starts_with("face upper"), "{report}");
    let o = run(&fixture_args("build", &inst, &path));
    assert_eq!(status(&o), 1);
    assert!(stderr(&o).contains("face upper failed"), "{}", stderr(&o));
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let (inst, cfg) = (fixture("tree.json"), fixture("tree.config.json"));
    for cmd in ["build", "verify", "export-dot"] {
        let a = run(&fixture_args(cmd, &inst, &cfg));
        let b = run(&fixture_args(cmd, &inst, &cfg));
        assert_eq!(status(&a), 0, "{cmd}: {}", stderr(&a));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
    let dot = String::from_utf8(run(&fixture_args("export-dot", &inst, &cfg)).stdout).unwrap();
    assert!(dot.starts_with("graph T_F_0 {"));
    for g in ["graph Q {", "graph Q2 {", "graph Q0 {", "graph Q0_2 {"] {
        assert!(dot.contains(g), "{g}");
    }
}

#[test]
fn seeded_sets_are_reproducible() {
    let inst = fixture("tree.json");
    let a = run(&["build", "--instance", inst.to_str().unwrap(), "--seed", "3"]);
    let b = run(&["build", "--instance", inst.to_str().unwrap(), "--seed", "3"]);
    let c = run(&["build", "--instance", inst.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn product_sweep_has_a_constant_deletion_column() {
    let a = run(&["sweep", "--seed", "2024", "--jobs", "1"]);
    let b = run(&["sweep", "--seed", "2024", "--jobs", "4"]);
    assert_eq!(status(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout, "job count changes the CSV");
    let text = String::from_utf8(a.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "deleted").unwrap();
    let col2 = header.iter().position(|&h| h == "deleted_prime").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[0] == "G2"));
    let seps: Vec<u64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(seps, (1..=100).collect::<Vec<_>>());
    assert!(rows.iter().all(|r| r[col] == rows[0][col] && r[col2] == rows[0][col2]));
}

#[test]
fn suites_are_invocable_by_name() {
    for name in ["planar-bound", "weak-metric"] {
        let o = run(&["verify", "--suite", name, "--seed", "5"]);
        assert_eq!(status(&o), 0, "{name}: {}", stderr(&o));
        let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(report["suite"], name);
        assert_eq!(report["format"], "hullcube/suite/v1");
        assert!(stderr(&o).starts_with("[PASS]"));
    }
}
