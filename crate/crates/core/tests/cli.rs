use std::path::Path;
use std::process::{Command, Output};

fn adr_split(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adr-split"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("ADR_SPLIT_LOG", "quiet")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL: &str = "mu = \"1\"\nsigma = \"1\"\nbeta1 = \"-5*(y+1)\"\nbeta2 = \"5*(x+1)\"\nf = \"5\"\n\
                     n_beta = 33\nn_gamma = 33\nkx = 16\nky = 16\nh_fem = 0.02\nsteps = 4\n";

#[test]
fn missing_config_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adr_split(&["solve"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_config_file_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = adr_split(&["solve", "--config", "/no/such/run.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn invalid_theta_is_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "theta = 1.5\n");
    let out = adr_split(&["solve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn zero_source_writes_all_zero_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = adr_split(&["solve", "--config", "zero_source"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 65 * 65);
    assert!(rows
        .iter()
        .all(|r| r.rsplit(',').next().unwrap().parse::<f64>().unwrap() == 0.0));
    assert!(dir.path().join("report.txt").exists());
    assert!(!dir.path().join("solution.vtk").exists());
}

#[test]
fn solve_writes_vtk_and_snapshots_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = adr_split(
        &["solve", "--config", &cfg, "--vtk", "--snapshots", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "solution.csv",
        "solution.vtk",
        "snapshot_00002.csv",
        "snapshot_00002.vtk",
        "snapshot_00004.csv",
        "report.txt",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    assert!(!dir.path().join("snapshot_00001.csv").exists());
    assert_eq!(
        std::fs::read(dir.path().join("snapshot_00004.csv")).unwrap(),
        std::fs::read(dir.path().join("solution.csv")).unwrap()
    );
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("steps: 4"));
}

#[test]
fn reference_writes_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = adr_split(&["reference", "--config", "paper_experiment"], dir.path());
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("reference.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 16 * 16);
}

#[test]
fn compare_passes_on_shipped_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let out = adr_split(&["compare", "--config", "paper_experiment"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("L-inf") && stdout.contains("L1") && stdout.contains("PASS"));
}

#[test]
fn compare_exits_4_when_tolerance_missed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}tol_linf = 1e-9\n"));
    let out = adr_split(&["compare", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "beta1 = \"0.5 - x\"\nbeta2 = \"0\"\nn_beta = 17\nn_gamma = 17\n",
    );
    let out = adr_split(&["solve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn trace_debug_dumps_both_families() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = adr_split(&["trace-debug", "--config", &cfg], dir.path());
    assert!(out.status.success());
    for family in ["beta", "gamma"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("curves_{family}.csv"))).unwrap();
        assert!(csv.starts_with("curve,s,x,y\n"));
        let last: usize = csv
            .lines()
            .last()
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(last, 32);
    }
}
