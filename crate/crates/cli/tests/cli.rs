use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use prolate_sampling::spectrum::compute_spectrum_1d;
use prolate_sampling::theory::TheoryParams;

fn prolate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prolate")).args(args).env_remove("PROLATE_CACHE_DIR").output().unwrap()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn spectrum_table_has_the_documented_columns() {
    let out = prolate(&["spectrum", "--R", "4", "--order", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,mu_k,widom_asymptotic,fuchs_flag"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 200);
    let trace: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((trace - 4.0).abs() < 1e-9);
    assert_eq!(rows[0][3], "1");
    assert!(rows[1..].iter().all(|r| r[3] == "0"));
    // 2π(π/2)^{2k+1}/(k!)² at k = 0
    let widom0: f64 = rows[0][2].parse().unwrap();
    assert!((widom0 - std::f64::consts::PI.powi(2)).abs() < 1e-12);

    let summary: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["config"]["order"], 200);
    assert_eq!(summary["plunge"]["holds"], true);
}

#[test]
fn bounds_match_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("bounds");
    let out = prolate(&[
        "bounds", "--R", "4", "--d", "1", "--delta", "0.2", "--mu", "0.5", "--r", "2000", "--eps", "0.01", "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json_file(&out_dir.join("bounds.json"));
    let expected = TheoryParams::from_spectrum(&compute_spectrum_1d(4.0, 200).unwrap(), 1).unwrap();
    let theory = &summary["theory"];
    for (key, value) in [("kappa", expected.kappa), ("k_d", expected.k_d), ("c2", expected.c2), ("log_a", expected.log_a)] {
        assert_eq!(theory[key].as_f64().unwrap(), value, "{key}");
    }
    assert_eq!(summary["sampling_probability"]["vacuous"], true);
    let csv = std::fs::read_to_string(out_dir.join("bounds.csv")).unwrap();
    assert!(csv.starts_with("quantity,value\n"));
    assert!(csv.contains("\ntheory.b,3.9283710065919304e-2\n"));
}

#[test]
fn frame_runs_are_reproducible_and_echo_their_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("frame.toml");
    std::fs::write(&cfg, "R = 4.0\nd = 1\ndelta = 0.2\nmu = 0.5\nr = 500\ntrials = 8\nnet-size = 16\nseed = 1\n").unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = prolate(&["frame", "--config", cfg.to_str().unwrap(), "--seed", "7", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(out_dir.join("frame.csv")).unwrap(), json_file(&out_dir.join("frame.json")))
    };
    let (a, summary) = run("a");
    let (b, _) = run("b");
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 9);
    assert_eq!(summary["config"]["seed"], 7);
    assert_eq!(summary["config"]["r"], 500);
    assert_eq!(summary["config"]["net_size"], 16);
}

#[test]
fn exit_codes() {
    assert_eq!(prolate(&["spectrum", "--radius", "4"]).status.code(), Some(2));
    assert_eq!(prolate(&["teleport"]).status.code(), Some(2));
    assert_eq!(prolate(&["synth", "--delta", "1.5"]).status.code(), Some(2));
    assert_eq!(prolate(&["spectrum", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
    assert_eq!(prolate(&["synth", "--truncation", "500"]).status.code(), Some(3));
    assert_eq!(prolate(&["--help"]).status.code(), Some(0));
}

#[test]
fn cache_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_prolate"))
            .args(["spectrum", "--R", "3", "--order", "90"])
            .env("PROLATE_CACHE_DIR", dir.path())
            .output()
            .unwrap()
    };
    let first = run();
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let second = run();
    assert_eq!(first.stdout, second.stdout);
    let summary: Value = serde_json::from_slice(&second.stderr).unwrap();
    assert_eq!(summary["config"]["cache"], dir.path().to_str().unwrap());
}

#[test]
fn density_reads_back_its_own_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let out = prolate(&["density", "--model", "per-cube", "--r", "2", "--extent", "4", "--seed", "5", "--out", gen.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let points = gen.join("points.txt");
    let again = dir.path().join("again");
    let out = prolate(&["density", "--points", points.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(gen.join("density.csv")).unwrap(), std::fs::read(again.join("density.csv")).unwrap());
    let summary = json_file(&again.join("density.json"));
    assert_eq!(summary["report"]["point_count"], 16);
    // a shifted unit window meets at most two integer cubes
    assert!(summary["report"]["max_unit_count"].as_u64().unwrap() <= 4);
}

#[test]
fn negative_constructions_report_bounds_next_to_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("neg");
    let out = prolate(&["adversarial", "--k", "5", "--trials", "10", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json_file(&out_dir.join("adversarial.json"));
    let run = &summary["runs"][0];
    assert_eq!(run["all_hold"], true);
    assert_eq!(run["event_b_probability_check"], run["setup"]["event_b_probability"]);

    let out = prolate(&["holes", "--trials", "500", "--extent", "4", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json_file(&out_dir.join("holes.json"));
    let hole = &summary["some_cube_empty"];
    assert!(hole["lower_bound"].as_f64().unwrap() <= hole["exact"].as_f64().unwrap());
    assert_eq!(summary["summability"]["verdict"], "diverges");
    let csv = std::fs::read_to_string(out_dir.join("holes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
}
