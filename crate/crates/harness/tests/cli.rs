use std::path::{Path, PathBuf};
use std::process::Command;

fn erbo(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_erbo")).args(args).output().unwrap();
    (out.status.success(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn preset(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name).display().to_string()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key} = "))).unwrap_or_else(|| panic!("{key} missing in {text}"))
}

#[test]
fn calibrate_writes_report_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cal");
    let (ok, stdout, err) =
        erbo(&["calibrate", "--scenario", &preset("straight.toml"), "--steps", "1500", "--out", out.to_str().unwrap()]);
    assert!(ok, "{err}");
    let t: f64 = value(&stdout, "threshold").parse().unwrap();
    assert!(t > 20.0 && t < 22.0);
    assert_eq!(std::fs::read_to_string(out.join("calibration.txt")).unwrap(), stdout);

    // the written errors calibrate to the same threshold
    let (ok, again, _) = erbo(&["calibrate", "--errors", out.join("nominal_errors.csv").to_str().unwrap()]);
    assert!(ok);
    assert_eq!(value(&again, "threshold"), value(&stdout, "threshold"));

    let (ok, burr, _) = erbo(&["calibrate", "--errors", out.join("nominal_errors.csv").to_str().unwrap(), "--method", "burr"]);
    assert!(ok);
    assert!(value(&burr, "burr_c").parse::<f64>().unwrap() > 0.0);

    let (ok, _, err) = erbo(&["calibrate", "--scenario", &preset("straight.toml"), "--steps", "10"]);
    assert!(!ok && err.contains("1000"));
}

#[test]
fn run_reports_outcome_and_writes_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let (ok, stdout, err) = erbo(&["run", "--scenario", &preset("straight.toml"), "--seed", "0", "--out", tmp.path().to_str().unwrap()]);
    assert!(ok, "{err}");
    assert_eq!(value(&stdout, "response_actions"), "30");
    assert!(value(&stdout, "trigger_distance").parse::<f64>().is_ok());
    let trace: PathBuf = tmp.path().join("straight__bo_gp__0.csv");
    let text = std::fs::read_to_string(trace).unwrap();
    assert!(text.starts_with("step,t_sec,x,y,heading,speed,error,smoothed,rate,a1,a2,phase\n"));
    assert!(tmp.path().join("responder.csv").exists());

    let (ok, stdout, _) =
        erbo(&["run", "--scenario", &preset("arc_left.toml"), "--policy", "no-action", "--manual-trigger-dist", "12"]);
    assert!(ok);
    assert_eq!(value(&stdout, "success"), "false");
}

#[test]
fn sweep_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    let (ok, stdout, err) =
        erbo(&["sweep", "--config", &preset("sweep_20kmh.toml"), "--reps", "2", "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert!(ok, "{err}");
    let (ok, report, _) = erbo(&["report", "--in", out.to_str().unwrap()]);
    assert!(ok);
    assert_eq!(report, stdout);
    assert!(report.lines().next().unwrap().contains("no_action"));
    assert_eq!(report.lines().count(), 5);

    let (ok, _, err) = erbo(&["report", "--in", tmp.path().join("missing").to_str().unwrap()]);
    assert!(!ok && err.contains("summary.csv"));
}
