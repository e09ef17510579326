use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use thicklab_cli::manifest::MANIFEST_NAME;
use thicklab_cli::{run, validate, CliError, ExperimentConfig, RunOptions};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn parse(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

fn messages(text: &str) -> Vec<String> {
    validate(&parse(text)).into_iter().map(|d| d.message).collect()
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out: Some(dir.to_owned()), ..RunOptions::default() }
}

#[test]
fn validation_messages() {
    let eps = r#"
kind = "spectral-scan"
[params]
degrees = [1, 2]
omega = { type = "thick-family", epsilon = 1.5, r = 1.0, extent = 10.0 }
"#;
    assert!(messages(eps).contains(&"ε must lie in (0,1]".to_owned()));

    let s = r#"
kind = "dissipation"
[params]
s = 0.5
degree = 4
levels = [1]
times = [0.1]
samples = 1
"#;
    assert!(messages(s).contains(&"s must exceed 1/2".to_owned()));

    let delta = r#"
kind = "control-run"
[params]
s = 0.6
delta = 0.3
degree = 4
horizon = 1.0
omega = { type = "full", dim = 1 }
"#;
    assert_eq!(messages(delta), vec!["δ < 2s−1 required".to_owned()]);
}

#[test]
fn valid_example_configs() {
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::parse(&fs::read_to_string(&path).unwrap()).unwrap();
        assert!(validate(&cfg).is_empty(), "{}: {:?}", path.display(), validate(&cfg));
    }
}

#[test]
fn schema_errors_carry_location() {
    let text =
        "kind = \"covering\"\n[params]\ndensity = { type = \"constant\", m = 1.0 }\nlo = [0.0]\nhi = [1.0]\nper_axis = 10\ncolour = 3\n";
    match ExperimentConfig::parse(text) {
        Err(CliError::Schema { line, message, .. }) => {
            assert_eq!(line, 7, "{message}");
            assert!(message.contains("colour"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(ExperimentConfig::parse("kind = \"nope\"\n"), Err(CliError::Schema { line: 1, .. })));
}

#[test]
fn unknown_acceptance_metric_is_reported() {
    let text = r#"
kind = "singular-space"
[params]
form = "harmonic"
[acceptance]
speed = { max = 1 }
"#;
    let d = validate(&parse(text));
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].field, "acceptance.speed");
}

#[test]
fn full_line_scan_gives_unit_constants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse(&fs::read_to_string(configs_dir().join("spectral_full_line.toml")).unwrap());
    let out = run(&cfg, &opts(dir.path())).unwrap();
    assert!(out.passed());
    let csv = fs::read_to_string(dir.path().join("spectral.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,lambda_min,C_N,quad_tol"));
    for l in lines {
        let c: f64 = l.split(',').nth(2).unwrap().parse().unwrap();
        assert!((c - 1.0).abs() <= 1e-8);
    }
    assert!(!csv.contains('\r'));
    let names: Vec<&str> = out.manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert_eq!(names, ["spectral.csv", "spectral.gp"]);
    assert!(dir.path().join(MANIFEST_NAME).exists());
}

#[test]
fn bernstein_over_e20_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse(
        r#"
kind = "bernstein-check"
seed = 4
[params]
degrees = [20]
samples = 10
max_order = 6
[acceptance]
violations = { max = 0 }
"#,
    );
    let out = run(&cfg, &opts(dir.path())).unwrap();
    assert!(out.passed());
    assert_eq!(out.manifest.metrics["checks"], 10.0 * 28.0);
}

#[test]
fn control_run_lists_trace_and_costs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse(&fs::read_to_string(configs_dir().join("control_periodic.toml")).unwrap());
    let out = run(&cfg, &opts(dir.path())).unwrap();
    let names: Vec<&str> = out.manifest.files.iter().map(|f| f.path.as_str()).collect();
    assert!(names.contains(&"trace.json") && names.contains(&"cost.csv"));
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
    assert!(trace["terminal_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(trace["stages"].as_array().unwrap().len(), 6);
}

#[test]
fn failed_run_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(MANIFEST_NAME), "{}").unwrap();
    // the restriction to a tiny interval is numerically singular at this degree
    let cfg = parse(
        r#"
kind = "spectral-scan"
[params]
degrees = [2, 60]
omega = { type = "intervals", list = [[0.0, 0.05]] }
"#,
    );
    let err = run(&cfg, &opts(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn failed_acceptance_still_completes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse(
        r#"
kind = "singular-space"
[params]
form = "kfp"
[acceptance]
k0 = { max = 0 }
"#,
    );
    let out = run(&cfg, &opts(dir.path())).unwrap();
    assert!(!out.passed());
    assert_eq!(out.manifest.acceptance[0].value, Some(1.0));
    assert!(dir.path().join(MANIFEST_NAME).exists());
}

#[test]
fn same_seed_same_bytes() {
    let text = r#"
kind = "spectral-scan"
seed = 99
[params]
degrees = [4, 8, 12, 16, 20]
epsilon = 1.0
omega = { type = "random-cells", epsilon = 1.0, r = 1.0, extent = 20.0, kept_fraction = 0.6 }
"#;
    let cfg = parse(text);
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&cfg, &RunOptions { threads: Some(1), ..opts(a.path()) }).unwrap();
    run(&cfg, &RunOptions { threads: Some(3), ..opts(b.path()) }).unwrap();
    run(&cfg, &RunOptions { seed: Some(100), ..opts(c.path()) }).unwrap();
    let read = |d: &Path| fs::read(d.join("spectral.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_thicklab");
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("singular_kfp.toml");
    let ok = Command::new(exe).args(["singular-space", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS k0"));

    let wrong = Command::new(exe).args(["covering", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(wrong.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "kind = \"dissipation\"\n[params]\ns = 0.4\ndegree = 2\nlevels = [0]\ntimes = [0.1]\nsamples = 1\n").unwrap();
    let v = Command::new(exe).args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(v.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&v.stderr).contains("s must exceed 1/2"));

    let fail = dir.path().join("fail.toml");
    fs::write(&fail, "kind = \"singular-space\"\n[params]\nform = \"harmonic\"\n[acceptance]\ndim_s = { min = 1 }\n").unwrap();
    let f = Command::new(exe).args(["singular-space", "--config"]).arg(&fail).arg("--out").arg(dir.path().join("f")).output().unwrap();
    assert_eq!(f.status.code(), Some(1));
}
