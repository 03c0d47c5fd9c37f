//! End-to-end tests of the `sparsemap` binary: argument handling, CSV
//! determinism, config-file merging, and the PBM pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sparsemap"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn sparsemap");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Drops the trailing (runtime) column from every CSV line.
fn strip_runtime_column(text: &str) -> Vec<String> {
    text.lines().map(|l| l.rsplit_once(',').map(|(h, _)| h.to_string()).unwrap()).collect()
}

#[test]
fn recovery_prob_is_deterministic_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    let common = |out: &Path, threads: &str| {
        let mut c = bin();
        c.args([
            "bench",
            "recovery-prob",
            "--m",
            "32",
            "--n",
            "64",
            "--k-range",
            "2:4:2",
            "--trials",
            "15",
            "--seed",
            "9",
            "--algos",
            "map_omp,map_sp,omp",
            "--threads",
            threads,
            "--out",
        ])
        .arg(out);
        c
    };
    run_ok(&mut common(&out1, "1"));
    run_ok(&mut common(&out2, "3"));
    let a = std::fs::read_to_string(&out1).unwrap();
    let b = std::fs::read_to_string(&out2).unwrap();
    assert_eq!(strip_runtime_column(&a), strip_runtime_column(&b));
    // Header plus |K| * |algos| rows.
    assert_eq!(a.lines().count(), 1 + 2 * 3);
    assert!(a.ends_with('\n'));
    assert!(!a.contains('\r'));
}

#[test]
fn verify_below_minimum_trials_is_a_config_error() {
    let out = bin().args(["verify", "--trials", "100"]).output().unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("trials"), "stderr: {stderr}");
}

#[test]
fn verify_report_is_deterministic() {
    let run = || {
        let out = run_ok(bin().args(["verify", "--trials", "1500", "--seed", "4"]));
        String::from_utf8(out.stdout).unwrap()
    };
    let first = run();
    assert_eq!(first, run());
    assert!(first.contains("ALL CHECKS PASSED"));
}

#[test]
fn scaling_survives_m_below_2k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sc.csv");
    run_ok(bin().args([
        "bench", "scaling", "--n", "64", "--k", "8", "--m-range", "4:12:4", "--trials", "5",
        "--seed", "1", "--out",
    ]).arg(&out));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "M,K,N,sigma_w2,empirical_success,theory_lower_bound");
    assert_eq!(lines.len(), 4);
    // M = 4 < 2K: rows still emitted, success near zero.
    let first: Vec<&str> = lines[1].split(',').collect();
    let rate: f64 = first[4].parse().unwrap();
    assert!(rate <= 0.2, "M=4 rate {rate}");
}

#[test]
fn config_file_is_merged_and_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bench.toml");
    std::fs::write(
        &cfg_path,
        "m = 32\nn = 64\nk = 3\ntrials = 8\nseed = 5\nalgos = \"omp\"\n",
    )
    .unwrap();
    let out = dir.path().join("rp.csv");
    run_ok(
        bin()
            .args(["bench", "recovery-prob", "--trials", "12", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out),
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let row = text.lines().nth(1).unwrap();
    // trials from the flag (12), everything else from the file.
    assert!(row.starts_with("recovery_prob,omp,binary,3,32,64,12,"), "row: {row}");
}

#[test]
fn bad_flags_name_the_field() {
    let out = bin()
        .args(["bench", "recovery-prob", "--k-range", "9:1", "--m", "32", "--n", "64"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("k_range"));

    let out = bin()
        .args(["bench", "nmse", "--snr-db-range", "oops"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("snr_db_range"));
}

#[test]
fn image_demo_round_trips_pbm() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.pbm");
    // P4 input with comments in the header; output is canonical P1.
    let mut p4 = b"P4\n# tiny\n8 2\n".to_vec();
    p4.extend_from_slice(&[0b10100000, 0b00000001]);
    std::fs::write(&input, &p4).unwrap();
    let out_dir = dir.path().join("out");
    let out = run_ok(
        bin()
            .args(["demo", "image", "--m", "12", "--algos", "map_sp", "--seed", "3", "--input"])
            .arg(&input)
            .arg("--out")
            .arg(&out_dir),
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("map_sp"));
    let recovered = std::fs::read(out_dir.join("recovered_map_sp.pbm")).unwrap();
    assert_eq!(recovered, b"P1\n8 2\n10100000\n00000001\n");
    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert!(metrics.lines().nth(1).unwrap().ends_with(",1,1,1"));
}

#[test]
fn runtime_table_map_sp_converges_faster_than_sp() {
    // At K = 40 noise-free, MAP-SP converges in a few iterations while SP
    // fails and exchanges until its stall limit, so the medians are far
    // apart; the row order and the baseline speedup of 1.0 are fixed.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rt.csv");
    run_ok(bin().args([
        "bench", "runtime", "--m", "128", "--n", "256", "--k", "40", "--trials", "20", "--seed",
        "2", "--algos", "sp,map_sp", "--out",
    ]).arg(&out));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let field = |line: &str, idx: usize| -> f64 {
        line.split(',').nth(idx).unwrap().parse().unwrap()
    };
    let sp_median = field(lines[1], 7);
    let map_median = field(lines[2], 7);
    assert!(
        map_median < sp_median,
        "map_sp median {map_median} not below sp median {sp_median}"
    );
    assert!((field(lines[1], 8) - 1.0).abs() < 1e-9, "baseline speedup");
    assert!(field(lines[2], 8) > 1.0, "map_sp speedup over sp");
}

#[test]
fn image_demo_rejects_malformed_pbm_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.pbm");
    std::fs::write(&input, b"P1\n2 2\n10").unwrap();
    let out = bin()
        .args(["demo", "image", "--m", "4", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("byte 9"), "stderr: {stderr}");
}
