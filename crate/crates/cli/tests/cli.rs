//! End-to-end tests of the `econokin` binary: exit codes, output layout,
//! reproducibility, and the report contract.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_econokin"));
    c.env_remove("ECONOKIN_WORKERS");
    c
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run_expect(code: i32, args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(code),
        "args {args:?}\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest(dir: &Path) -> serde_json::Value {
    let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

const STEADY: &str = r#"{
  "mode": "steady",
  "params": {"lambda": 0.3, "sigma": 0.3, "m": 1.0, "delta": 1.0},
  "grid": {"kind": "log", "lo": 1e-3, "hi": 60.0, "cells": 96},
  "seed": 11
}"#;

const FP_LINEAR: &str = r#"{
  "mode": "fp-linear",
  "params": {"lambda": 0.3, "sigma": 0.3, "m": 1.0, "delta": 0.5},
  "grid": {"kind": "auto", "cells": 128},
  "fp": {"dt": 0.02, "t_end": 2.0, "snapshot_every": 10},
  "initial": {"kind": "perturbed_equilibrium", "m_factor": 1.4},
  "seed": 3
}"#;

const MC_GAMBLING: &str = r#"{
  "mode": "mc-gambling",
  "params": {"lambda": 0.3, "sigma": 0.3, "m": 1.0, "delta": 0.5},
  "rule": {"kind": "gambling_conservative", "omega": {"kind": "uniform"}},
  "grid": {"kind": "log", "lo": 1e-5, "hi": 25.0, "cells": 32},
  "mc": {"n_particles": 500, "dt": 0.25, "t_end": 4.0, "snapshot_every": 4,
         "schedule": {"kind": "adaptive", "safety": 0.9}},
  "initial": {"kind": "uniform", "lo": 0.5, "hi": 1.5},
  "seed": 21,
  "replicas": 2
}"#;

#[test]
fn steady_mode_emits_profiles_and_rho() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", STEADY);
    let out = dir.path().join("out");
    run_expect(0, &[
        "steady",
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);

    // mu = 2 lambda / sigma = 2, m = 1, delta = 1: the convexity constant is
    // m mu / 2 = 1 exactly.
    let man = manifest(&out);
    let rho = man["rho_delta"].as_f64().unwrap();
    assert!((rho - 1.0).abs() < 1e-12, "rho = {rho}");

    for name in ["steady_x.csv", "steady_y.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# config_hash: "), "{name}: {}", lines[0]);
        assert_eq!(lines[1], "# seed: 11", "{name}");
        assert!(text.contains("w,f"), "{name} lacks the column header");
    }
    let files: Vec<&str> = man["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(files.contains(&"steady_x.csv"));
    assert!(files.contains(&"steady_y.csv"));
    assert!(files.contains(&"manifest.json"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", FP_LINEAR);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_expect(0, &[
            "fp-linear",
            "--config", cfg.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ]);
    }
    for name in ["decay.csv", "density_initial.csv", "density_final.csv", "entropy.json"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical reruns"
        );
    }
}

#[test]
fn mc_reruns_are_byte_identical_and_replicas_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MC_GAMBLING);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_expect(0, &[
            "mc-gambling",
            "--config", cfg.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ]);
    }
    for name in ["moments_r0.csv", "moments_r1.csv", "decay_r0.csv", "density_final.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs between identical reruns"
        );
    }
    // Distinct replica streams: same schema, different samples.
    assert_ne!(
        fs::read(a.join("moments_r0.csv")).unwrap(),
        fs::read(a.join("moments_r1.csv")).unwrap()
    );
    let man = manifest(&a);
    let seeds: Vec<u64> = man["replica_seeds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(seeds.len(), 2);
    assert_ne!(seeds[0], seeds[1]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", STEADY);
    let out = dir.path().join("out");
    run_expect(0, &[
        "steady",
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
        "--seed", "99",
    ]);
    let man = manifest(&out);
    assert_eq!(man["base_seed"].as_u64(), Some(99));
    let text = fs::read_to_string(out.join("steady_x.csv")).unwrap();
    assert!(text.lines().any(|l| l == "# seed: 99"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\"mode\": \"steady\", \"params\": {");
    let out = run_expect(2, &[
        "steady",
        "--config", cfg.to_str().unwrap(),
        "--out", dir.path().join("o").to_str().unwrap(),
    ]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"kind\":\"config\""), "stderr: {err}");
}

#[test]
fn unknown_config_field_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = STEADY.replace("\"seed\": 11", "\"seed\": 11, \"sedd\": 1");
    let cfg = write_config(dir.path(), "typo.json", &text);
    run_expect(2, &[
        "steady",
        "--config", cfg.to_str().unwrap(),
        "--out", dir.path().join("o").to_str().unwrap(),
    ]);
}

#[test]
fn mode_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", STEADY);
    run_expect(2, &[
        "fp-linear",
        "--config", cfg.to_str().unwrap(),
        "--out", dir.path().join("o").to_str().unwrap(),
    ]);
}

#[test]
fn deterministic_mode_rejects_replicas() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", STEADY);
    run_expect(2, &[
        "steady",
        "--config", cfg.to_str().unwrap(),
        "--out", dir.path().join("o").to_str().unwrap(),
        "--replicas", "3",
    ]);
}

#[test]
fn acceptance_overflow_exits_3() {
    // Constant wealth 10 with delta = 1 gives kernel 100 per pair; a fixed
    // step of 0.5 overflows the acceptance bound immediately.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{
      "mode": "mc-gambling",
      "params": {"lambda": 0.3, "sigma": 0.3, "m": 1.0, "delta": 1.0},
      "rule": {"kind": "gambling_conservative", "omega": {"kind": "uniform"}},
      "mc": {"n_particles": 100, "dt": 0.5, "t_end": 5.0},
      "initial": {"kind": "constant", "value": 10.0},
      "seed": 1
    }"#);
    let out = run_expect(3, &[
        "mc-gambling",
        "--config", cfg.to_str().unwrap(),
        "--out", dir.path().join("o").to_str().unwrap(),
    ]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"kind\":\"numerical\""), "stderr: {err}");
    assert!(err.contains("acceptance bound overflow"), "stderr: {err}");
}

#[test]
fn missing_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    run_expect(4, &[
        "steady",
        "--config", dir.path().join("absent.json").to_str().unwrap(),
        "--out", dir.path().join("o").to_str().unwrap(),
    ]);
}

#[test]
fn report_emits_fp_contract_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", FP_LINEAR);
    let out = dir.path().join("out");
    run_expect(0, &[
        "fp-linear",
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    let rep = run_expect(0, &[
        "report",
        "--manifest", out.join("manifest.json").to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&rep.stdout);
    for needle in ["fitted_H_rate: ", "two_rho_delta: ", "bound_satisfied: "] {
        assert!(text.contains(needle), "missing `{needle}` in:\n{text}");
    }
    // The linear mode relaxes at least at the convexity rate.
    assert!(text.contains("bound_satisfied: true"), "{text}");
    assert!(out.join("summary.txt").exists());
    let dat = fs::read_to_string(out.join("H_vs_t.dat")).unwrap();
    assert!(dat.starts_with("# config_hash: "), "{dat}");
    assert!(fs::read_to_string(out.join("summary.txt")).unwrap().ends_with('\n'));
}

#[test]
fn report_emits_mc_mean_bound_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{
      "mode": "mc-linear",
      "params": {"lambda": 0.3, "sigma": 0.04, "m": 1.0, "delta": 0.5},
      "rule": {
        "kind": "linear_market",
        "lambda": 0.3,
        "eta": {"kind": "two_point", "r": 0.2},
        "market": {"kind": "gamma", "mean": 1.0, "shape": 2.0}
      },
      "mc": {"n_particles": 500, "dt": 0.05, "t_end": 4.0, "snapshot_every": 10},
      "initial": {"kind": "uniform", "lo": 0.0, "hi": 2.0},
      "seed": 4
    }"#);
    let out = dir.path().join("out");
    run_expect(0, &[
        "mc-linear",
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    let rep = run_expect(0, &[
        "report",
        "--manifest", out.join("manifest.json").to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("mean_bound: "), "{text}");
    assert!(text.contains("mean_bound_satisfied: "), "{text}");
    assert!(out.join("m1_vs_t.dat").exists());
}

#[test]
fn report_emits_lsi_worst_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{
      "mode": "lsi-audit",
      "params": {"lambda": 0.3, "sigma": 0.3, "m": 1.0, "delta": 0.75},
      "lsi": {"trials": 5},
      "seed": 9
    }"#);
    let out = dir.path().join("out");
    run_expect(0, &[
        "lsi-audit",
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    let rep = run_expect(0, &[
        "report",
        "--manifest", out.join("manifest.json").to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("lsi_worst_ratio: "), "{text}");
    assert!(text.contains("lsi_bound_satisfied: true"), "{text}");
}

#[test]
fn grazing_study_emits_l1_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{
      "mode": "grazing-study",
      "params": {"lambda": 0.18, "sigma": 0.18, "m": 1.0, "delta": 0.5},
      "rule": {
        "kind": "linear_market",
        "lambda": 0.18,
        "eta": {"kind": "truncated_gaussian", "variance": 0.18, "cutoff": 0.8},
        "market": {"kind": "gamma", "mean": 0.8571428571428571, "shape": 3.0}
      },
      "grid": {"kind": "auto", "cells": 96},
      "grazing": {"eps_values": [0.5, 0.25], "n_particles": 400, "dt": 0.1,
                  "t_end": 0.5, "fp_dt": 0.01},
      "initial": {"kind": "uniform", "lo": 0.2, "hi": 1.8},
      "seed": 5
    }"#);
    let out = dir.path().join("out");
    run_expect(0, &[
        "grazing-study",
        "--config", cfg.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    let table = fs::read_to_string(out.join("grazing_l1.csv")).unwrap();
    let data: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "eps,l1,remainder");
    assert_eq!(data.len(), 3, "one row per eps:\n{table}");
    for row in &data[1..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[1].is_finite() && cells[1] > 0.0, "l1 in {row}");
        assert!(cells[2].is_finite() && cells[2] > 0.0, "remainder in {row}");
    }
    let rep = run_expect(0, &[
        "report",
        "--manifest", out.join("manifest.json").to_str().unwrap(),
    ]);
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("l1_monotone_decreasing: "), "{text}");
    assert!(out.join("l1_vs_eps.dat").exists());
}

#[test]
fn workers_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", STEADY);
    let out = dir.path().join("out");
    let status = bin()
        .env("ECONOKIN_WORKERS", "2")
        .args([
            "steady",
            "--config", cfg.to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(manifest(&out)["workers"].as_u64(), Some(2));

    let bad = bin()
        .env("ECONOKIN_WORKERS", "many")
        .args([
            "steady",
            "--config", cfg.to_str().unwrap(),
            "--out", dir.path().join("o2").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}

#[test]
fn report_on_missing_manifest_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    run_expect(4, &[
        "report",
        "--manifest", dir.path().join("absent.json").to_str().unwrap(),
    ]);
}
