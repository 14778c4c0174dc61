// SPDX-License-Identifier: Apache-2.0

//! End-to-end runs of the `optomech` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn optomech(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optomech")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV file with `#` header lines, split on commas.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn spectrum_preset_has_two_peaks() {
    let dir = tempfile::tempdir().unwrap();
    let o = optomech(&["spectrum", "--preset", "fig2_eta0", "--no-timestamp"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&dir.path().join("spectrum.json"));
    assert_eq!(summary["peaks"].as_array().unwrap().len(), 2);
    assert!(summary["max_relative_deviation_from_oracle"].as_f64().unwrap() < 1e-8);
    let (header, rows) = csv_rows(&dir.path().join("spectrum.csv"));
    assert_eq!(header[0], "omega");
    assert!(header.contains(&"s_q_oracle".to_string()));
    assert_eq!(rows.len(), 4001);
    let text = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert!(text.starts_with("# params: {"));
}

#[test]
fn steady_reports_stability() {
    let dir = tempfile::tempdir().unwrap();
    let o = optomech(&["steady", "--preset", "fig2_eta004"], dir.path());
    assert!(o.status.success());
    let summary = json(&dir.path().join("steady.json"));
    let branches = summary["branches"].as_array().unwrap();
    assert!(!branches.is_empty());
    for b in branches {
        assert_eq!(b["rh"].as_array().unwrap().len(), 3);
        assert!(b["eig_stable"].is_boolean());
    }
    assert!(summary["generated_unix"].is_u64());
}

#[test]
fn kerr_sweep_narrows_the_splitting() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--preset", "fig2_eta0", "--param", "eta_p", "--from", "0", "--to", "0.08", "--count", "17"];
    let o = optomech(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 17);
    let col = header.iter().position(|h| h == "peak_separation").unwrap();
    let sep: Vec<f64> = rows.iter().map(|r| r[col].parse().unwrap()).collect();
    assert!(sep[0] > 0.05);
    assert!(sep.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{sep:?}");
}

#[test]
fn fold_sweep_crosses_the_bistable_window() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("kerr.json");
    fs::write(
        &config,
        r#"{"omega_l": 0, "omega_c": 0, "kappa": 1, "omega_m": 1, "gamma_m": 0.01, "mass": 1,
            "g_m": 0, "eta": 0.5, "eps_drive": 2, "temperature": 1, "unit_mode": "reduced"}"#,
    )
    .unwrap();
    let args = [
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--param",
        "omega_c",
        "--from",
        "-10",
        "--to",
        "0",
        "--count",
        "41",
    ];
    let o = optomech(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv_rows(&dir.path().join("sweep.csv"));
    let counts: Vec<u32> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    let mut runs = counts.clone();
    runs.dedup();
    assert_eq!(runs, vec![1, 3, 1], "{counts:?}");
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = [
        "sweep",
        "--preset",
        "fig2_eta004",
        "--param",
        "delta_eff",
        "--from",
        "0.7",
        "--to",
        "1.3",
        "--count",
        "7",
        "--no-timestamp",
    ];
    let mut one = args.to_vec();
    one.extend(["--jobs", "1"]);
    let mut four = args.to_vec();
    four.extend(["--jobs", "4"]);
    assert!(optomech(&one, &a).status.success());
    assert!(optomech(&four, &b).status.success());
    assert_eq!(fs::read(a.join("sweep.csv")).unwrap(), fs::read(b.join("sweep.csv")).unwrap());
}

#[test]
fn summaries_reproduce_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(optomech(&["spectrum", "--preset", "fig2_eta004", "--no-timestamp"], &a).status.success());
    let summary = a.join("spectrum.json");
    let before = fs::read(&summary).unwrap();
    let o = optomech(&["spectrum", "--config", summary.to_str().unwrap(), "--no-timestamp"], &b);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&summary).unwrap(), before, "config file was modified");
    for name in ["params.json", "spectrum.json", "spectrum.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| optomech(args, dir.path()).status.code().unwrap();

    let o = optomech(&["steady", "--preset", "fig2_eta0", "--set", "kapa=1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kapa"));
    assert_eq!(
        code(&["sweep", "--preset", "fig2_eta0", "--param", "eta_p", "--from", "0", "--to", "1", "--count", "1"]),
        2
    );
    assert_eq!(code(&["spectrum", "--preset", "fig2_eta0", "--set", "eta=0.1"]), 2);
    assert_eq!(code(&["spectrum", "--preset", "fig3"]), 2);
    // The middle branch of the bistable window is unstable.
    assert_eq!(code(&["spectrum", "--preset", "fig2_eta0", "--branch", "1"]), 3);
    // The mirror momentum integral keeps growing at the fig2_eta0 point.
    assert_eq!(code(&["temperature", "--preset", "fig2_eta0"]), 4);
    assert_eq!(code(&["steady", "--config", "/nonexistent/params.json"]), 1);
}

#[test]
fn stochastic_run_writes_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sde",
        "--preset",
        "fig2_eta0",
        "--realizations",
        "2",
        "--duration",
        "1100",
        "--step",
        "0.01",
        "--dump-trajectories",
        "--no-timestamp",
    ];
    let o = optomech(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&dir.path().join("sde.json"));
    assert!(summary["sde"]["var_q"].as_f64().unwrap() > 0.0);
    let (header, rows) = csv_rows(&dir.path().join("sde.csv"));
    assert_eq!(header[0], "omega");
    assert!(!rows.is_empty());
    assert!(dir.path().join("trajectories/realization_0001.csv").exists());
}
