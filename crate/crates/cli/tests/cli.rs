use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use sbmkit_cli::output::{RunManifest, MANIFEST_NAME};
use sbmkit_cli::plot::{emit_plot, PlotKind, PlotSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sbmkit"));
    c.env_remove("SBMKIT_OUT_DIR");
    c
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let out = bin().arg("--out-dir").arg(dir).args(args).output().expect("spawn sbmkit");
    assert!(
        out.status.success(),
        "sbmkit {args:?} failed\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&fs::read(dir.join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

#[test]
fn mc_exit_csv_independent_of_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--paths", "3000", "--seed", "17", "mc", "exit", "--radius", "0.1"];
    run_in(a.path(), &[&["--workers", "1"], &args[..]].concat());
    run_in(b.path(), &[&["--workers", "4"], &args[..]].concat());
    let ca = fs::read(a.path().join("mc_exit.csv")).unwrap();
    let cb = fs::read(b.path().join("mc_exit.csv")).unwrap();
    assert_eq!(ca.len(), cb.len());
    assert!(ca == cb, "mc_exit.csv differs between 1 and 4 workers");
}

#[test]
fn mc_ks_csv_independent_of_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["--paths", "2000", "--seed", "5", "mc", "ks", "--radii", "0.01,0.1"];
    run_in(a.path(), &[&["--workers", "1"], &args[..]].concat());
    run_in(b.path(), &[&["--workers", "3"], &args[..]].concat());
    assert_eq!(fs::read(a.path().join("mc_ks.csv")).unwrap(), fs::read(b.path().join("mc_ks.csv")).unwrap());
}

#[test]
fn same_seed_same_bytes_different_seed_different_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    run_in(a.path(), &["--paths", "500", "--seed", "3", "mc", "poisson"]);
    run_in(b.path(), &["--paths", "500", "--seed", "3", "mc", "poisson"]);
    run_in(c.path(), &["--paths", "500", "--seed", "4", "mc", "poisson"]);
    let read = |d: &Path| fs::read(d.join("mc_poisson.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
    assert_ne!(read(a.path()), read(c.path()));
}

#[test]
fn manifest_lists_exactly_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["--exponent", "stable(1)", "--grid", "1e-3:1e-1:5", "sweep", "thm41"]);
    let m = manifest(dir.path());
    m.verify(dir.path()).unwrap();
    let mut names: Vec<&str> = m.outputs.iter().map(|f| f.path.as_str()).collect();
    names.sort();
    assert_eq!(names, ["sweep_thm41.csv", "sweep_thm41.json"]);
    assert_eq!(m.exponent_keys, ["stable(1)"]);
    assert!(m.finished_unix_ms >= m.started_unix_ms);
    assert_eq!(m.tool_version, env!("CARGO_PKG_VERSION"));

    // Tampering with an output breaks verification.
    fs::write(dir.path().join("sweep_thm41.csv"), "r,ratio\n").unwrap();
    assert!(m.verify(dir.path()).is_err());
}

#[test]
fn mc_manifest_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["--paths", "300", "--seed", "99", "mc", "green", "--bins", "5"]);
    let m = manifest(dir.path());
    m.verify(dir.path()).unwrap();
    assert_eq!(m.seeds, [99]);
    assert_eq!(m.config.paths, 300);
    let verdict: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("mc_green.json")).unwrap()).unwrap();
    assert_eq!(verdict["censoring_ok"], true);
    assert!(verdict["estimate"]["exit_time_se"].as_f64().unwrap() > 0.0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"exponent": "stable(1)", "dim": 2, "grid": "1e-3:1e-1:3", "seed": 8}"#).unwrap();
    let out = dir.path().join("out");
    run_in(&out, &["--config", cfg.to_str().unwrap(), "--dim", "3", "--grid", "1e-3:1e-1:4", "kernel", "j"]);
    let m = manifest(&out);
    assert_eq!(m.config.exponent, "stable(1)");
    assert_eq!(m.config.dim, 3);
    assert_eq!(m.config.seed, 8);
    let csv = fs::read_to_string(out.join("kernel_jump_j.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
    assert_eq!(csv.lines().next().unwrap(), "r,value,tail");
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().env("SBMKIT_OUT_DIR", dir.path()).args(["phi", "list"]).output().unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("phi_list.csv").exists());
    manifest(dir.path()).verify(dir.path()).unwrap();
}

#[test]
fn unwritable_out_dir_fails_before_work() {
    let dir = tempfile::tempdir().unwrap();
    // A regular file where a directory is expected cannot be written into,
    // even by a privileged user.
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "x").unwrap();
    let start = Instant::now();
    let out = bin()
        .arg("--out-dir")
        .arg(blocker.join("sub"))
        .args(["--paths", "100000000", "mc", "ks"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(start.elapsed().as_secs_f64() < 10.0, "did work before failing");
    assert!(String::from_utf8_lossy(&out.stderr).contains("output directory"));
}

#[cfg(unix)]
#[test]
fn read_only_out_dir_fails() {
    use std::os::unix::fs::PermissionsExt;
    let dir = tempfile::tempdir().unwrap();
    let ro = dir.path().join("ro");
    fs::create_dir(&ro).unwrap();
    fs::set_permissions(&ro, fs::Permissions::from_mode(0o555)).unwrap();
    // Privileged users ignore the mode bits; nothing to test then.
    let writable = fs::write(ro.join("probe"), "x").is_ok();
    if !writable {
        let out = bin().arg("--out-dir").arg(&ro).args(["phi", "list"]).output().unwrap();
        assert!(!out.status.success());
        assert!(String::from_utf8_lossy(&out.stderr).contains("not writable"));
    }
    fs::set_permissions(&ro, fs::Permissions::from_mode(0o755)).unwrap();
}

#[test]
fn verify_analytic_writes_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "analytic"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] 1 closed_form_oracles"), "{stdout}");
    assert!(stdout.contains("[PASS] 2 bernstein_inequality"), "{stdout}");
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(dir.path().join("check_01_closed_form_oracles.json").exists());
    manifest(dir.path()).verify(dir.path()).unwrap();
}

#[test]
fn unknown_exponent_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("--out-dir").arg(dir.path()).args(["--exponent", "nope", "phi", "eval"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

fn check_golden(name: &str, svg: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, svg).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert_eq!(svg, want, "{name} differs from its golden file");
}

#[test]
fn golden_ratio_sweep_logx() {
    let spec = PlotSpec {
        x: "r".into(),
        y: vec!["ratio".into()],
        logx: true,
        logy: false,
        kind: PlotKind::Line,
        title: Some("ratio sweep".into()),
    };
    let svg = emit_plot(&data("ratio_sweep.csv"), &spec).unwrap();
    assert!(!svg.contains("legend"));
    check_golden("ratio_sweep.svg", &svg);
}

#[test]
fn golden_two_series_has_legend() {
    let spec = PlotSpec {
        x: "r".into(),
        y: vec!["ratio_1".into(), "ratio_2".into()],
        logx: true,
        logy: true,
        kind: PlotKind::Scatter,
        title: None,
    };
    let svg = emit_plot(&data("two_series.csv"), &spec).unwrap();
    assert!(svg.contains(r#"class="legend""#) && svg.contains(">ratio_1</text>") && svg.contains(">ratio_2</text>"));
    check_golden("two_series.svg", &svg);
}

#[test]
fn plot_errors() {
    let spec = PlotSpec { x: "r".into(), y: vec!["missing".into()], logx: false, logy: false, kind: PlotKind::Line, title: None };
    let err = format!("{:#}", emit_plot(&data("ratio_sweep.csv"), &spec).unwrap_err());
    assert!(err.contains("`missing`"), "{err}");
    assert!(emit_plot(&data("empty.csv"), &spec).is_err());

    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("--out-dir")
        .arg(dir.path())
        .args(["plot", "--csv", data("ratio_sweep.csv").to_str().unwrap(), "--x", "r", "--y", "nope"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("`nope`"));
}

#[test]
fn plot_command_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), &["plot", "--csv", data("ratio_sweep.csv").to_str().unwrap(), "--x", "r", "--y", "ratio", "--logx", "--title", "ratio sweep", "--out", "sweep.svg"]);
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ratio_sweep.svg")).unwrap();
    assert_eq!(fs::read_to_string(dir.path().join("sweep.svg")).unwrap(), golden);
}
