use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_stirap"));
    c.env("RUST_LOG", "off");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn summary_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no '{key}' in summary:\n{text}"))
        .parse()
        .unwrap()
}

fn propagate(out: &Path, extra: &[&str]) -> String {
    let cfg = data("lambda.cfg");
    let mut args = vec!["propagate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::read_to_string(out.join("summary.txt")).unwrap()
}

#[test]
fn propagate_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = propagate(dir.path(), &[]);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t_ps,P_g,P_e,P_f,norm"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(&first[1..], &[1.0, 0.0, 0.0, 1.0]);
    let last: Vec<f64> = traj.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] + last[2] + last[3] - last[4]).abs() < 1e-12);
    for key in ["fidelity", "norm_drift", "adiabaticity", "pump_peak_intensity_w_cm2", "cdf_peak_intensity_w_cm2"] {
        summary_value(&text, key);
    }
    assert!(summary_value(&text, "norm_drift") < 1e-8);
}

#[test]
fn identical_configs_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    propagate(a.path(), &["--lambda", "0.5"]);
    propagate(b.path(), &["--lambda", "0.5"]);
    for f in ["trajectory.csv", "summary.txt"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn counter_diabatic_field_improves_the_test_system() {
    let dir = tempfile::tempdir().unwrap();
    let plain = summary_value(&propagate(dir.path(), &["--lambda", "0"]), "fidelity");
    let assisted = summary_value(&propagate(dir.path(), &["--lambda", "1"]), "fidelity");
    assert!(assisted > plain, "{assisted} vs {plain}");
    assert!(assisted > 0.99, "{assisted}");
}

#[test]
fn lambda_scan_has_41_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data("lambda.cfg");
    let o = run(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--axis",
        "lambda",
        "--from",
        "0",
        "--to",
        "2",
        "--step",
        "0.05",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan_lambda.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,fidelity,leakage,norm_drift");
    assert_eq!(lines.len(), 42);
    assert!(lines[1].starts_with("0,"));
    assert!(lines[41].starts_with("2,"));
}

#[test]
fn fwhm_scan_row_at_reference_matches_propagate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data("lambda.cfg");
    let o = run(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--axis",
        "fwhm",
        "--from",
        "1",
        "--to",
        "3",
        "--step",
        "0.5",
        "--threads",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("scan_fwhm.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("2,")).expect("reference row");
    let scanned: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    let single = summary_value(&propagate(dir.path(), &[]), "fidelity");
    assert!((scanned - single).abs() < 5e-7, "{scanned} vs {single}");

    let again = propagate(dir.path(), &["--fwhm-ps", "1.5"]);
    let row = csv.lines().find(|l| l.starts_with("1.5,")).unwrap();
    let scanned: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((scanned - summary_value(&again, "fidelity")).abs() < 5e-7);
}

#[test]
fn config_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    let text = std::fs::read_to_string(data("lambda.cfg")).unwrap() + "pulse_shape = square\n";
    std::fs::write(&bad, text.replace("levels = ", &format!("levels = {}/", data("").display())).replace(
        "tdm = ",
        &format!("tdm = {}/", data("").display()),
    ))
    .unwrap();
    let o = run(&["propagate", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pulse_shape"));

    let cfg = data("lambda.cfg");
    let cfg = cfg.to_str().unwrap();
    for args in [
        vec!["propagate", "--config", cfg, "--lambda", "-1"],
        vec!["propagate", "--config", cfg, "--subset", "g,x"],
        vec!["propagate", "--config", "/nonexistent/run.cfg"],
        vec!["propagate"],
        vec!["scan", "--config", cfg, "--axis", "eta", "--mode", "cdf_only"],
        vec!["frobnicate"],
    ] {
        assert_eq!(run(&args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn integration_failure_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data("lambda.cfg");
    let o = run(&[
        "propagate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--dt-au",
        "400",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("smaller time step"));
}

#[test]
fn validate_reports_intensity_and_outlier() {
    let o = run(&["validate", "--dataset", "hcn"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("scenario hcn_stage2"));
    assert!(text.contains("pump_peak_intensity_w_cm2 = 3.03"), "{text}");
    assert!(text.contains("stokes_peak_intensity_w_cm2 = 2.90"), "{text}");

    let o = run(&["validate", "--dataset", "sccl2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0.9808"), "{text}");
    assert!(text.contains("warning"));
    assert!(text.contains("adiabaticity = 2.5"), "{text}");
}

#[test]
fn validate_rejects_asymmetric_custom_tables() {
    let levels = data("lambda_levels.csv");
    let tdm = data("asymmetric_tdm.csv");
    let o = run(&[
        "validate",
        "--levels",
        levels.to_str().unwrap(),
        "--tdm",
        tdm.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("conflicting"));

    let ok = data("lambda_tdm.csv");
    let o = run(&["validate", "--levels", levels.to_str().unwrap(), "--tdm", ok.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("3 states, 3 coupled pairs"));
}

// Full-manifold runs of the bundled configurations; tens of seconds each.

#[test]
fn bundled_sccl2_config_and_lambda_zero_edit() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["propagate", "--scenario", "sccl2_1to6", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let with_cdf = summary_value(&stdout(&o), "fidelity");
    assert!((with_cdf - 0.974).abs() < 0.03, "{with_cdf}");

    let edited = dir.path().join("edited.cfg");
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/sccl2_1to6.cfg")).unwrap();
    std::fs::write(&edited, text.replace("lambda = 1", "lambda = 0")).unwrap();
    let o = run(&["propagate", "--config", edited.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let plain = summary_value(&stdout(&o), "fidelity");
    assert!((plain - 0.688).abs() < 0.05, "{plain}");
}

#[test]
fn hcn_stage2_three_state_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "propagate",
        "--dataset",
        "hcn",
        "--subset",
        "3,4,5",
        "--lambda",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!((summary_value(&text, "fidelity") - 0.995).abs() < 0.005, "{text}");
    assert!(text.contains("states = 3,4,5"));
}
