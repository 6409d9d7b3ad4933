//! Black-box tests of the `qpr` binary: exit codes, CSV shape, and
//! run-to-run determinism of the scientific columns.

use std::path::PathBuf;
use std::process::Command;

fn qpr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qpr"))
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qpr-cli-test-{}-{name}", std::process::id()));
    p
}

/// Drops the trailing wall-time column from every CSV line.
fn strip_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map(|(a, _)| a).unwrap_or(l))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn unknown_algorithm_exits_2() {
    let out = qpr().args(["sweep", "--algo", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn clap_usage_error_exits_2() {
    let out = qpr().args(["sweep", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mismatched_algo_model_exits_2() {
    let out = qpr()
        .args(["sweep", "--algo", "taf", "--model", "quaternion"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = qpr()
        .args(["sweep", "--algo", "qwf", "--model", "mono"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn divergent_trace_exits_3() {
    let out = qpr()
        .args([
            "trace", "--algo", "qwf", "--d", "6", "--ratios", "10", "--eta1", "1e6", "--iters",
            "300", "--seed", "3",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_sweep_writes_csv_and_is_deterministic() {
    let path = tmp("sweep.csv");
    let run = || {
        let out = qpr()
            .args([
                "sweep", "--algo", "qwf", "--d", "6", "--ratios", "4,12", "--trials", "3",
                "--iters", "60", "--seed", "5", "--out",
            ])
            .arg(&path)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(&path).unwrap()
    };
    let a = run();
    let b = run();
    let mut lines = a.lines();
    assert_eq!(
        lines.next(),
        Some("ratio,n,successes,trials,rate,mean_final_error,mean_wall_ms")
    );
    assert_eq!(a.lines().count(), 3);
    assert!(a.ends_with('\n'));
    assert!(!a.contains('\r'), "LF line endings only");
    assert_eq!(strip_timing(&a), strip_timing(&b));
    let _ = std::fs::remove_file(&path);
}

#[test]
fn trace_emits_log_errors() {
    let path = tmp("trace.csv");
    let out = qpr()
        .args([
            "trace", "--algo", "qwf", "--d", "8", "--ratios", "12", "--iters", "40", "--seed",
            "5", "--out",
        ])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().next(), Some("iter,log10_error,elapsed_ns"));
    assert_eq!(csv.lines().count(), 42);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn trace_requires_exactly_one_ratio() {
    let out = qpr()
        .args(["trace", "--algo", "qwf", "--ratios", "4,5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn moments_and_selftest_pass() {
    let out = qpr()
        .args(["moments", "--samples", "30000", "--d", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[PASS]"));
    assert!(!text.contains("[FAIL]"));

    let out = qpr().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

#[test]
fn image_round_trip_via_binary() {
    // A 16x16 image is one block; keep the iteration budget small since
    // this only checks plumbing, not exactness.
    let input = tmp("block.ppm");
    let output = tmp("block-out.ppm");
    let blocks = tmp("blocks.csv");
    let mut data = b"P6\n16 16\n255\n".to_vec();
    let mut s = 1u64;
    for _ in 0..16 * 16 * 3 {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        data.push((s >> 33) as u8);
    }
    std::fs::write(&input, &data).unwrap();

    let out = qpr()
        .args([
            "image", "--algo", "pqtaf", "--oversampling", "6.0", "--iters", "400", "--seed",
            "2", "--input",
        ])
        .arg(&input)
        .arg("--out")
        .arg(&output)
        .arg("--blocks-csv")
        .arg(&blocks)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("psnr_db="));

    let rec = std::fs::read(&output).unwrap();
    assert!(rec.starts_with(b"P6\n16 16\n255\n"));
    let csv = std::fs::read_to_string(&blocks).unwrap();
    assert_eq!(csv.lines().next(), Some("block_id,relative_error,sigma3,success"));
    assert_eq!(csv.lines().count(), 2);
    for p in [&input, &output, &blocks] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn image_rejects_bad_dimensions() {
    let input = tmp("bad.ppm");
    let mut data = b"P6\n10 16\n255\n".to_vec();
    data.extend(vec![0u8; 10 * 16 * 3]);
    std::fs::write(&input, &data).unwrap();
    let out = qpr()
        .args(["image", "--algo", "pqtaf", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(tmp("never.ppm"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let _ = std::fs::remove_file(&input);
}
