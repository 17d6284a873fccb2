use qzd_cli::output::{read_csv, read_state, read_wigner};
use std::process::Command;

fn qzd(args: &[&str], out: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qzd")).args(args).arg("--out").arg(out).env_remove("QZD_OUT_DIR").output().unwrap()
}

fn summary(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn confine_writes_snapshots_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = qzd(&["confine", "--s", "6", "--beta", "0.1", "--phi", "6.2832", "--steps", "50", "--wigner-every", "5", "--wigner-points", "21"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    assert!(s.contains("wigner_grids=10"), "{s}");
    let base = dir.path().join("confine");
    let (meta, header, rows) = read_csv(&base.join("trace.csv")).unwrap();
    assert_eq!(rows.len(), 51);
    assert_eq!(header[0], "step");
    assert!(meta.iter().any(|(k, v)| k == "s" && v == "6"));
    let g = read_wigner(&base.join("wigner_step_0050.txt")).unwrap();
    assert_eq!(g.values.len(), 21 * 21);
    let (st, _) = read_state(&base.join("state.txt")).unwrap();
    assert_eq!(st.density().dim(), 60);
}

#[test]
fn wigner_dump_reads_a_state() {
    let dir = tempfile::tempdir().unwrap();
    assert!(qzd(&["tweezers", "--steps", "10"], dir.path()).status.success());
    let input = dir.path().join("tweezers").join("state.txt");
    let o = qzd(&["wigner-dump", "--input", input.to_str().unwrap(), "--half", "7", "--points", "71"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    let integral: f64 = s.lines().find_map(|l| l.strip_prefix("integral=")).unwrap().parse().unwrap();
    assert!((integral - 1.0).abs() < 1e-2, "{s}");
}

fn revival_gap(beta: &str, out: &std::path::Path) -> f64 {
    let o = qzd(&["revival", "--s", "4", "--beta", beta, "--tmax", "100", "--check"], out);
    assert_eq!(o.status.code(), Some(0), "{}", summary(&o));
    assert!(summary(&o).contains("PASS"));
    let (_, header, rows) = read_csv(&out.join("revival").join("revival.csv")).unwrap();
    assert_eq!(header, ["omega_t", "mean_photon", "closed_form"]);
    rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max)
}

#[test]
fn revival_check_passes_and_kicks_converge() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = revival_gap("0.05", dir.path());
    let fine = revival_gap("0.02", dir.path());
    assert!(fine < 0.5 * coarse, "{coarse} -> {fine}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qzd(&["confine", "--d", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(qzd(&["confine", "--s", "5", "--steps", "3", "--check"], dir.path()).status.code(), Some(2));
    assert_eq!(qzd(&["tweezers", "--steps", "2", "--max-step", "0.5"], dir.path()).status.code(), Some(3));
    assert_eq!(qzd(&["tweezers", "--phi", "3.141592653589793", "--steps", "12", "--check"], dir.path()).status.code(), Some(2));
    assert_eq!(qzd(&["run", "/nonexistent/qzd.toml"], dir.path()).status.code(), Some(3));
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "experiment = \"cat\"\n[params]\nbeta = 0.345\nphi = 3.03\n").unwrap();
    let o = qzd(&["cat", "--config", cfg.to_str().unwrap(), "--check"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", summary(&o));
    let o = qzd(&["run", cfg.to_str().unwrap()], dir.path());
    assert!(summary(&o).contains("transparency=0.39"));
    std::fs::write(&cfg, "experiment = \"cat\"\n[params]\nbeta = 0.345\nphy = 3\n").unwrap();
    let o = qzd(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("phy"));
}

#[test]
fn out_dir_env_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_qzd"))
        .args(["revival", "--s", "2", "--tmax", "40"])
        .env("QZD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("revival").join("revival.csv").exists());
}

#[test]
fn recipes_list() {
    let o = Command::new(env!("CARGO_BIN_EXE_qzd")).arg("recipe").output().unwrap();
    let s = summary(&o);
    assert!(s.lines().count() >= 15 && s.contains("revival-s4"));
}
