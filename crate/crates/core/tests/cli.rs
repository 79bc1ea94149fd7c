use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bilattice::config::RunConfig;

const FIG3: &str = "\
[geometry]
a = 2.0
b = 2.2
half_width = 30

[drive]
j0 = 1.0
delta_j = 0.8
e0 = 30.0
omega = 30.0
m = 2
";

const FIG2: &str = "\
[geometry]
a = 2.01717
b = 5.37977
half_width = 20

[drive]
j0 = 1.0
delta_j = 0.8
e0 = 30.0
omega = 30.0
m = 2
";

fn bilattice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilattice")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn solve_writes_json_and_reports_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let out = bilattice(&["solve", "--config", &cfg, "--kind", "instability"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "instability");
    assert!((v["phi"].as_f64().unwrap() - 2.17).abs() < 0.01);

    let out = bilattice(&["solve", "--config", &cfg, "--kind", "dl-backward"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let half = v["half_period"].as_f64().unwrap();
    let freq = v["rabi_freq"].as_f64().unwrap();
    assert!((half * freq - std::f64::consts::PI).abs() < 1e-12);

    let out = bilattice(&["solve", "--config", &cfg, "--kind", "dl-backward", "--drive.delta_j", "0.01"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside [-1, 1]"));
}

#[test]
fn solve_cdt_and_pair() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig2.toml", FIG2);
    let out = bilattice(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "cdt");
    assert!((v["phi"].as_f64().unwrap() - 2.4).abs() < 0.05);

    let out = bilattice(&["solve", "--config", &cfg, "--kind", "cdt-pair"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["delta_b"].as_f64().unwrap() - 5.37977).abs() < 1e-3);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let typo = write_config(dir.path(), "typo.toml", &format!("{FIG3}phii = 1.0\n"));
    for args in [
        vec!["transport", "--config", &cfg, "--cycles", "0"],
        vec!["simulate", "--config", &typo],
        vec!["simulate", "--config", "/nonexistent/config.toml"],
        vec!["simulate", "--config", &cfg, "--drive.nosuch", "1"],
        vec!["simulate", "--config", &cfg, "--simulate.start_site", "99"],
        vec!["scan-phase", "--config", &cfg, "--scan.steps", "1"],
        vec!["scan-phase", "--config", &cfg, "--workers", "0"],
        vec!["simulate"],
        vec!["frobnicate", "--config", &cfg],
    ] {
        let out = bilattice(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn edge_leak_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let out = bilattice(&["simulate", "--config", &cfg, "--geometry.half_width", "3", "--simulate.t_end", "40"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window edge"));
}

#[test]
fn simulate_output_layout_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = bilattice(&[
            "simulate",
            "--config",
            &cfg,
            "--model",
            "full",
            "--drive.phi",
            "1.9275",
            "--simulate.t_end",
            "2",
            "--integrator.samples",
            "21",
            "--output",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let (header, rows) = parse_csv(&text);
    assert_eq!(header.first().unwrap(), "t");
    assert_eq!(header[1], "n=-30");
    assert_eq!(header[61], "n=30");
    assert_eq!(&header[62..], ["norm", "x_mean", "pr"]);
    assert_eq!(rows.len(), 21);
    for row in &rows {
        assert_eq!(row.len(), header.len());
        let total: f64 = row[1..62].iter().sum();
        assert!((total - row[62]).abs() < 1e-12);
        assert!((row[62] - 1.0).abs() < 1e-8);
    }
    let digits = text.lines().nth(1).unwrap().split(',').nth(1).unwrap();
    assert_eq!(digits.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn analytic_cdt_columns_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cdt = "[geometry]\na = 2.404825557695773\nb = 5.520078110286311\nhalf_width = 10\n\n[drive]\nj0 = 1.0\ndelta_j = 0.8\ne0 = 30.0\nomega = 30.0\nphi = 1.5707963267948966\n";
    let cfg = write_config(dir.path(), "cdt.toml", cdt);
    let out = bilattice(&["simulate", "--config", &cfg, "--model", "analytic", "--integrator.samples", "11"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    for row in &rows {
        assert!((row[11] - 1.0).abs() < 1e-9, "p0 = {}", row[11]);
    }
}

#[test]
fn scan_phase_is_ordered_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let one = bilattice(&["scan-phase", "--config", &cfg, "--scan.steps", "301"]);
    let four = bilattice(&["scan-phase", "--config", &cfg, "--scan.steps", "301", "--workers", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    let (header, rows) = parse_csv(&String::from_utf8(one.stdout).unwrap());
    assert_eq!(header, ["phi", "rate_fwd_re", "rate_fwd_im", "rate_bwd_re", "rate_bwd_im", "neg_rate_bwd_re"]);
    assert_eq!(rows.len(), 301);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[300][0], std::f64::consts::PI);
    assert!(rows.windows(2).all(|w| w[0][0] < w[1][0]));

    let flat = bilattice(&["scan-phase", "--config", &cfg, "--drive.delta_j", "0", "--scan.steps", "50"]);
    let (_, rows) = parse_csv(&String::from_utf8(flat.stdout).unwrap());
    assert!(rows.iter().all(|r| r[1..] == rows[0][1..]));
}

#[test]
fn transport_writes_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let out_path = dir.path().join("ratchet.csv");
    let out = bilattice(&["transport", "--config", &cfg, "--output", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("ratchet.csv.summary.json")).unwrap()).unwrap();
    for key in ["phi1", "phi2", "T1", "T2", "displacement", "displacement_per_cycle"] {
        assert!(summary[key].is_number(), "{key}");
    }
    assert!((summary["displacement_per_cycle"].as_f64().unwrap() - 4.2).abs() < 1e-6);
    let (_, rows) = parse_csv(&fs::read_to_string(&out_path).unwrap());
    assert!(rows.windows(2).all(|w| w[0][0] <= w[1][0]));
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "fig3.toml", FIG3);
    let out =
        bilattice(&["solve", "--config", &cfg, "--print-config", "--drive.phi=0.25", "--solve.kind", "instability"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let echoed = RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(echoed.drive.phi, 0.25);
    let again = write_config(dir.path(), "echo.toml", &text);
    let out = bilattice(&["solve", "--config", &again, "--print-config"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}
