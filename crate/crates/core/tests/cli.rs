use std::path::Path;
use std::process::{Command, Output};

fn aiwf(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aiwf"))
        .args(args)
        .env("AIWF_OUT_DIR", out_dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn scenario_file(name: &str) -> String {
    format!("{}/scenarios/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn strong_a_summary_reports_both_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let o = aiwf(&["run", "strong-a", "--algos", "iwf,aiwf"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("algorithm iwf verdict oscillating"));
    assert!(text.contains("algorithm aiwf verdict converged@"));
    assert!(text.contains("spectral_radius 2.0000000000000000e0"));
    assert!(text.contains("contractive false"));
    let summary = std::fs::read_to_string(dir.path().join("strong-a-summary.txt")).unwrap();
    assert_eq!(summary, text);
    let trace = std::fs::read_to_string(dir.path().join("strong-a-aiwf.csv")).unwrap();
    assert_eq!(
        trace.lines().next().unwrap(),
        "iteration,user,channel,power,water_level,residual,distance_to_reference"
    );
}

#[test]
fn lambda_list_expands_into_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = aiwf(
        &["run", "--scenario", "strong-b", "--algos", "riwf", "--lambda", "0.4,0.9"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("algorithm riwf-0.4 verdict converged@"));
    assert!(text.contains("algorithm riwf-0.9 verdict oscillating"));
    assert!(dir.path().join("strong-b-riwf-0.9.csv").exists());
}

#[test]
fn scenario_files_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("explicit");
    let o = aiwf(
        &["run", &scenario_file("strong_a.toml"), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("strong-a-iwf.csv").exists());
    assert!(stdout(&o).contains("distance_to_reference"));
}

#[test]
fn certificate_of_weak_network_is_contractive() {
    let dir = tempfile::tempdir().unwrap();
    let o = aiwf(&["certificate", "random-weak"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("contractive true"));
    assert!(text.contains("beta "));
}

#[test]
fn unknown_algorithm_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = aiwf(&["run", "strong-a", "--algos", "iwf,gradient"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gradient"));
}

#[test]
fn unknown_key_in_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario_file("strong_b.toml")).unwrap();
    std::fs::write(&path, text.replace("[run]", "[run]\nmax_iterations = 3")).unwrap();
    let o = aiwf(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("max_iterations"), "{}", stderr(&o));
}

#[test]
fn missing_scenario_and_bad_flags_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run", "does-not-exist.toml"],
        vec!["run"],
        vec!["run", "strong-a", "--noise", "laplace"],
        vec!["run", "strong-a", "--schedule", "power:1,1,0.4"],
        vec!["run", "strong-a", "--max-iters", "0"],
        vec!["frobnicate"],
    ] {
        let o = aiwf(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let o = aiwf(
        &["run", "strong-b", "--max-iters", "50", "--out", blocker.join("sub").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn noisy_runs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "random-weak", "--ier-db", "10", "--seed", "4", "--max-iters", "200"];
    let first = aiwf(&args, dir.path());
    let a = std::fs::read(dir.path().join("random-weak-aiwf.csv")).unwrap();
    let second = aiwf(&args, dir.path());
    let b = std::fs::read(dir.path().join("random-weak-aiwf.csv")).unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(a, b);

    let other = aiwf(&["run", "random-weak", "--ier-db", "10", "--seed", "5", "--max-iters", "200"], dir.path());
    assert_eq!(other.status.code(), Some(0));
    assert_ne!(std::fs::read(dir.path().join("random-weak-aiwf.csv")).unwrap(), a);
}

#[test]
fn bias_and_recursion_commands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = aiwf(&["bias-study", "--samples", "50", "--repetitions", "4", "--bins", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let hist = std::fs::read_to_string(dir.path().join("bias-L50.csv")).unwrap();
    assert_eq!(hist.lines().count(), 11);
    let mass: f64 = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((mass - 1.0).abs() < 1e-12);

    let o = aiwf(&["lemma4", "--runs", "3", "--steps", "100"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let rows = std::fs::read_to_string(dir.path().join("lemma4.csv")).unwrap();
    assert_eq!(rows.lines().count(), 4);
}
