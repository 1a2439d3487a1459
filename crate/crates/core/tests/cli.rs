use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlattice::cli::{execute, registry, Invocation};
use qlattice::output::{GREY, WHITE};

fn qlsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlsim")).args(args).current_dir(dir).output().unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn list_names_every_experiment() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["list"][..], &["--list"][..]] {
        let out = qlsim(args, dir.path());
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8(out.stdout).unwrap();
        for e in registry() {
            assert!(text.lines().any(|l| l.starts_with(e.name)), "{}", e.name);
        }
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(qlsim(&[], d).status.code(), Some(2));
    assert_eq!(qlsim(&["--seed", "x"], d).status.code(), Some(2));
    assert_eq!(qlsim(&["--experiment", "no-such"], d).status.code(), Some(3));

    let bad_key = write(d, "k.cfg", "[roundoff-covariance]\ncolour = red\n");
    assert_eq!(qlsim(&["--config", bad_key.to_str().unwrap()], d).status.code(), Some(2));

    let bad_line = write(d, "l.cfg", "[roundoff-covariance\n");
    assert_eq!(qlsim(&["--config", bad_line.to_str().unwrap()], d).status.code(), Some(2));

    let zero_edge = write(d, "e.cfg", "[rotation-reach]\nedges = 10 0\n");
    let out = qlsim(&["--config", zero_edge.to_str().unwrap()], d);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("edges"));

    let missing = write(d, "m.cfg", "[error-uniformity]\nsystem = nowhere.sys\n");
    assert_eq!(qlsim(&["--config", missing.to_str().unwrap()], d).status.code(), Some(3));

    let ok = qlsim(&["--experiment", "roundoff-covariance", "--out", "o"], d);
    assert_eq!(ok.status.code(), Some(0));

    // resonant angle: the CLT tails cannot match
    let red = write(d, "r.cfg", "[clt]\ntheta = pi/6\ncorner = 100000 200000\nedges = 20 20\nhorizon = 100\n");
    assert_eq!(qlsim(&["--config", red.to_str().unwrap(), "--out", "r"], d).status.code(), Some(1));
}

#[test]
fn outputs_are_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "run.cfg",
        "seed = 7\n[rotation-reach]\ncorner = -30 -30\nedges = 61 61\n[kernel-mean]\ntheta = 1\nsamples = 20000\n[weyl]\nsamples = 50\n",
    );
    let mut runs = Vec::new();
    for (out, threads) in [("a", "1"), ("b", "3"), ("c", "1")] {
        let o = qlsim(&["--config", cfg.to_str().unwrap(), "--out", out, "--threads", threads], d);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
        runs.push(["results.csv", "summary.json", "rotation-reach.pgm"].map(|f| std::fs::read(d.join(out).join(f)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
    let other = qlsim(&["--config", cfg.to_str().unwrap(), "--out", "s", "--seed", "8"], d);
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(std::fs::read(d.join("s/results.csv")).unwrap(), runs[0][0]);
}

#[test]
fn result_files_have_the_documented_shape() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(&Invocation {
        experiment: Some("hole-supremum".into()),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert!(outcome.pass());
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 14);
    assert!(rdr.records().count() >= 1);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["experiments"][0]["name"], "hole-supremum");
}

#[test]
fn reachability_image() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(&Invocation {
        config: Some(data("acceptance.cfg")),
        experiment: Some("rotation-reach".into()),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(outcome.experiments.len(), 1);
    let pgm = std::fs::read_to_string(dir.path().join("rotation-reach.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n101 101\n255\n"));
    assert!(pgm.lines().all(|l| l.len() <= 70));
    let px: Vec<u8> = pgm.split_whitespace().skip(4).map(|t| t.parse().unwrap()).collect();
    assert_eq!(px.len(), 101 * 101);
    assert_eq!(px.iter().filter(|&&p| p == GREY).count(), 8835);
    assert_eq!(px.iter().filter(|&&p| p == WHITE).count(), 101 * 101 - 8835);
}

#[test]
fn system_file_paths_resolve_from_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = execute(&Invocation {
        config: Some(data("acceptance.cfg")),
        experiment: Some("cross-cell-errors".into()),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(outcome.experiments[0].name, "cross-cell-errors");
    assert!(!outcome.experiments[0].reports.is_empty());
}
