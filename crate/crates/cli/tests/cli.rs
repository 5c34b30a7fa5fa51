use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], config: &str, dir: &Path) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_levy-she"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(2).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn ar_scan_remark_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ar-scan"], "models = remark\neps_grid = 1e-1,1e-2,1e-3\nkappa_grid = 1\n", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/ar_scan.csv")).unwrap();
    assert!(csv.starts_with("# levy-she "));
    assert_eq!(csv.lines().nth(1).unwrap(), "model,epsilon,kappa,ar_stat,status");
    for r in rows(&csv) {
        let eps: f64 = r[1].parse().unwrap();
        let ar: f64 = r[3].parse().unwrap();
        assert!((ar - eps / (1.0 + eps)).abs() <= 1e-8 * eps, "{r:?}");
    }
}

#[test]
fn ar_scan_gamma_tends_to_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["ar-scan"], "models = gamma\neps_grid = 1e-2,1e-4\nkappa_grid = 1\n", dir.path());
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("out/ar_scan.csv")).unwrap();
    let last = rows(&csv).pop().unwrap();
    assert!((last[3].parse::<f64>().unwrap() - 0.5).abs() < 0.02);
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in ["eps_grid =\n", "unknown.key = 1\n", "models = stable:2.5\n", "solver.modes = 128\nsolver.points = 64\n", "paths = many\n"] {
        let out = run(&["ar-scan"], cfg, dir.path());
        assert_eq!(out.status.code(), Some(2), "{cfg}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["simulate"], "models = stable:1.5\neps_grid = 1e-1\n", dir.path());
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solver::Solver::new"), "{err}");
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let cfg = "models = gamma,stable:0.5\neps_grid = 1e-1\npaths = 4\nsolver.modes = 8\nsolver.points = 16\nsolver.steps = 32\nsolver.stride = 8\n";
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cmd in ["simulate", "compare", "ar-scan"] {
        let oa = run(&[cmd, "--seed", "5"], cfg, a.path());
        let ob = run(&[cmd, "--seed", "5", "--workers", "2"], cfg, b.path());
        assert!(oa.status.success() && ob.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path().join("out")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 5);
    for n in names {
        assert_eq!(fs::read(a.path().join("out").join(&n)).unwrap(), fs::read(b.path().join("out").join(&n)).unwrap(), "{n:?}");
    }
    let other = run(&["simulate", "--seed", "6"], cfg, b.path());
    assert!(other.status.success());
    let f = "out/simulate_gamma_eps1e-1.csv";
    assert_ne!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
}

#[test]
fn atom_replay_reproduces_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "models = stable:0.5\neps_grid = 1e-1\npaths = 2\nsolver.modes = 8\nsolver.points = 16\nsolver.steps = 32\n";
    assert!(run(&["simulate"], cfg, dir.path()).status.success());
    let atoms = dir.path().join("out/atoms_stable_a0.5_eps1e-1_path1.bin");
    assert!(atoms.exists());
    let replay = format!("{cfg}simulate.replay = {}\n", atoms.display());
    let out = run(&["simulate"], &replay, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let original = fs::read_to_string(dir.path().join("out/simulate_stable_a0.5_eps1e-1.csv")).unwrap();
    let replayed = fs::read_to_string(dir.path().join("out/replay_stable_a0.5_eps1e-1.csv")).unwrap();
    let tail = |r: &Vec<String>| r[1..].to_vec();
    let want: Vec<_> = rows(&original).iter().filter(|r| r[0] == "1").map(tail).collect();
    let got: Vec<_> = rows(&replayed).iter().map(tail).collect();
    assert_eq!(want, got);
}

#[test]
fn identities_default_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["identities"], "", dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/identities.csv")).unwrap();
    assert!(rows(&csv).iter().all(|r| r[3] == "pass"), "{csv}");
}

#[test]
fn compare_control_block_is_null() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "models = gamma\neps_grid = 1e-1\npaths = 10000\ncompare.control = true\ncompare.functionals = phi1\n\
               solver.modes = 4\nsolver.points = 8\nsolver.steps = 64\nsolver.stride = 64\n";
    let out = run(&["compare"], cfg, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/compare.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "model,epsilon,kappa_ref,ar_stat,functional,ks,ks_p,ecf,paths,se");
    let control: Vec<_> = rows(&csv).into_iter().filter(|r| r[0] == "gaussian_control").collect();
    assert_eq!(control.len(), 1);
    assert!(control[0][5].parse::<f64>().unwrap() < 0.03, "{control:?}");
}
