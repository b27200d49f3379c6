use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clockwork_cli::config::Job;
use clockwork_cli::{parse_args, CliError};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn clockwork(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clockwork"))
        .args(args)
        .env("CLOCKWORK_OUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Pulls `key=[a,b,c]` or `key=value` out of a summary line.
fn field(line: &str, key: &str) -> Vec<f64> {
    let start = line.find(&format!("{key}=")).expect("field present") + key.len() + 1;
    let rest = &line[start..];
    let token = rest.split_whitespace().next().unwrap();
    token
        .trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect()
}

#[test]
fn minimal_dimer_sweep_parses() {
    let cfg = parse_args([
        "clockwork",
        "sweep",
        "--config",
        &config("dimer.toml"),
        "--axis",
        "phi",
        "--from",
        "0",
        "--to",
        "2.0944",
        "--points",
        "61",
    ])
    .unwrap();
    match cfg.job {
        Job::Sweep { grid, system, .. } => {
            assert_eq!(grid.len(), 61);
            assert_eq!(system.n_rotors, 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn asymmetric_coupling_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("dimer.toml"))
        .unwrap()
        .replace("[2.0, 0.0]]", "[2.5, 0.0]]");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let err = parse_args(["clockwork", "steady", "-c", path.to_str().unwrap()]).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    let msg = err.to_string();
    assert!(msg.contains("system.coupling[0][1]"), "{msg}");
}

#[test]
fn campaign_file_has_seven_free_parameters() {
    let cfg = parse_args(["clockwork", "optimize", "-c", &config("refrigeration_campaign.toml")]).unwrap();
    match cfg.job {
        Job::Optimize { problem, settings } => {
            assert_eq!(problem.parameters.len(), 7);
            assert_eq!(settings.max_iterations, 300);
            let temps: Vec<f64> = problem.base.baths.iter().map(|b| b.temperature).collect();
            assert_eq!(temps, vec![1.0, 1.5, 2.5]);
            assert!(problem.base.baths.iter().all(|b| b.coupling == 1.0));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn every_shipped_config_is_valid() {
    let cases = [
        ("dimer.toml", "steady"),
        ("refrigerator_optimum.toml", "steady"),
        ("refrigerator_map.toml", "refrigerator-map"),
        ("switch.toml", "switch"),
        ("rectifier_optimum.toml", "rectify"),
        ("rectifier_line.toml", "rectify"),
        ("refrigeration_campaign.toml", "optimize"),
        ("scatter.toml", "scatter"),
    ];
    for (file, cmd) in cases {
        parse_args(["clockwork", cmd, "-c", &config(file)]).unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}

#[test]
fn steady_refrigerator_prints_its_currents() {
    let dir = tempfile::tempdir().unwrap();
    let o = clockwork(&["steady", "-c", &config("refrigerator_optimum.toml")], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    let q = field(&line, "q_dot_total");
    assert!((q[0] - 0.071).abs() < 0.01 && (q[1] + 0.36).abs() < 0.04 && (q[2] - 0.29).abs() < 0.03, "{q:?}");
    assert!((field(&line, "cop")[0] - 0.24).abs() < 0.03);
    assert!(field(&line, "residual")[0] <= 1e-10);
    for f in ["steady.csv", "steady.manifest.json", "steady.run.toml"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn run_file_in_the_outputs_reproduces_the_job() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["sweep", "-c", &config("dimer.toml"), "--axis", "tau", "--from", "0", "--to", "0.5", "--points", "4"];
    assert!(clockwork(&args, a.path()).status.success());
    let rerun = a.path().join("sweep.run.toml");
    assert!(clockwork(&["sweep", "-c", rerun.to_str().unwrap()], b.path()).status.success());
    assert_eq!(
        std::fs::read(a.path().join("sweep.csv")).unwrap(),
        std::fs::read(b.path().join("sweep.csv")).unwrap()
    );
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("sweep.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_dialect"], "toml-1.0");
    assert_eq!(manifest["outputs"][0]["rows"], 4);
}

#[test]
fn full_scatter_writes_ten_thousand_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = clockwork(&["scatter", "--samples", "10000", "--seed", "1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10_001);
    assert!(csv.starts_with("coupling,phase,"));
}

#[test]
fn seeded_commands_are_byte_identical() {
    let campaign = config("refrigeration_campaign.toml");
    let runs = [
        vec!["scatter", "--samples", "50", "--seed", "9"],
        vec!["optimize", "-c", &campaign, "--max-iterations", "2", "--seed", "3"],
    ];
    for args in runs {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(clockwork(&args, a.path()).status.success());
        assert!(clockwork(&args, b.path()).status.success());
        let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names {
            assert_eq!(std::fs::read(a.path().join(&n)).unwrap(), std::fs::read(b.path().join(&n)).unwrap(), "{n:?}");
        }
    }
}

#[test]
fn exit_codes_are_distinct_per_category() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| clockwork(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["scatter"]), 3);
    assert_eq!(code(&["steady", "-c", "/definitely/missing.toml"]), 4);

    let frozen = std::fs::read_to_string(configs().join("refrigerator_optimum.toml"))
        .unwrap()
        .replace("coupling = 1.0,", "coupling = 0.0,");
    let path = dir.path().join("frozen.toml");
    std::fs::write(&path, frozen).unwrap();
    let o = clockwork(&["steady", "-c", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[non-unique-steady-state]"));
    assert!(!dir.path().join("steady.csv").exists(), "failed runs write nothing");
}

#[test]
fn unknown_keys_abort_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, "[scatter]\nseed = 1\nsample = 10\n").unwrap();
    let o = clockwork(&["scatter", "-c", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("scatter.sample"), "{err}");
}
