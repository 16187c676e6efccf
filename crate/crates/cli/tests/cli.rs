use std::path::Path;
use std::process::{Command, Output};

use fiszkit::io::{parse_divisors, parse_series, parse_values, parse_variance_estimate};
use fiszkit::{
    estimate, make_blocks, ClosedForm, EstimatorConfig, ThresholdRule, VarianceSource,
};

fn fiszkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fiszkit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn fiszkit_ok(dir: &Path, args: &[&str]) {
    let out = fiszkit(dir, args);
    assert!(
        out.status.success(),
        "fiszkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn simulate(dir: &Path) {
    fiszkit_ok(
        dir,
        &["simulate", "--signal", "blocks", "--n", "2048", "--min", "1", "--max", "22.6", "--noise", "poisson", "--seed", "7", "--out", "sim"],
    );
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let truth = parse_series(&read(dir.path(), "sim.truth.txt")).unwrap();
    let data = read(dir.path(), "sim.data.txt");
    assert_eq!(truth, make_blocks(2048, 1.0, 22.6).unwrap());
    assert_eq!(parse_series(&data).unwrap().len(), 2048);
    simulate(dir.path());
    assert_eq!(read(dir.path(), "sim.data.txt"), data);
}

#[test]
fn non_dyadic_length_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fiszkit(dir.path(), &["simulate", "--n", "2047", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fiszkit(dir.path(), &["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_is_a_data_error_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "1\n2\nthree\n4\n").unwrap();
    let out = fiszkit(dir.path(), &["estimate", "--in", "bad.txt", "--out", "o.txt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    std::fs::write(dir.path().join("short.txt"), "1\n2\n3\n").unwrap();
    let out = fiszkit(dir.path(), &["estimate", "--in", "short.txt", "--out", "o.txt"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn estimate_defaults_and_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    fiszkit_ok(
        dir.path(),
        &["estimate", "--in", "sim.data.txt", "--out", "est.txt", "--stride", "16", "--sidecars", "--emit-plots"],
    );
    let est = parse_values(&read(dir.path(), "est.txt")).unwrap();
    assert_eq!(est.len(), 2048);
    let thresholds = read(dir.path(), "est.thresholds.txt");
    assert_eq!(thresholds.lines().count(), 511);
    assert!(thresholds.lines().all(|l| l.split_whitespace().count() == 4));
    let h = parse_variance_estimate(&read(dir.path(), "est.hhat.txt")).unwrap();
    assert_eq!(h.grid().len(), 256);
    let plot = read(dir.path(), "est.plot-estimate.txt");
    assert_eq!(plot.lines().count(), 2048);
    assert!(plot.lines().last().unwrap().starts_with("1 "));
    assert!(dir.path().join("est.plot-input.txt").exists());
}

#[test]
fn cli_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    let x = parse_series(&read(dir.path(), "sim.data.txt")).unwrap();

    fiszkit_ok(dir.path(), &["estimate", "--in", "sim.data.txt", "--out", "soft.txt", "--rule", "soft", "--no-ti"]);
    let cfg = EstimatorConfig {
        rule: ThresholdRule::Soft,
        translation_invariant: false,
        ..EstimatorConfig::default()
    };
    let lib = estimate(&x, &cfg).unwrap().alpha_hat;
    assert_eq!(parse_values(&read(dir.path(), "soft.txt")).unwrap(), lib.values());

    fiszkit_ok(dir.path(), &["estimate", "--in", "sim.data.txt", "--out", "known.txt", "--known-h", "poisson", "--no-ti"]);
    let cfg = EstimatorConfig {
        translation_invariant: false,
        ..EstimatorConfig::with_variance(VarianceSource::Known(ClosedForm::Poisson))
    };
    let lib = estimate(&x, &cfg).unwrap().alpha_hat;
    assert_eq!(parse_values(&read(dir.path(), "known.txt")).unwrap(), lib.values());
}

#[test]
fn echoed_header_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    fiszkit_ok(dir.path(), &["estimate", "--in", "sim.data.txt", "--out", "a.txt", "--stride", "64", "--M", "2"]);
    let first = read(dir.path(), "a.txt");
    let header = first.lines().next().unwrap().strip_prefix("# fiszkit ").unwrap().to_string();
    let args: Vec<&str> = header.split_whitespace().collect();
    fiszkit_ok(dir.path(), &args);
    assert_eq!(read(dir.path(), "a.txt"), first);
}

#[test]
fn varfn_writes_step_function_and_sd_curve() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    fiszkit_ok(dir.path(), &["varfn", "--in", "sim.data.txt", "--out", "h.txt", "--emit-plots"]);
    let h = parse_variance_estimate(&read(dir.path(), "h.txt")).unwrap();
    let sd = read(dir.path(), "h.sd.txt");
    for (line, v) in sd.lines().zip(h.values()) {
        let s: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
        assert!((s - v.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn vst_forward_inverse_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path());
    fiszkit_ok(dir.path(), &["vst", "forward", "--in", "sim.data.txt", "--out", "xt.txt"]);
    let divisors = parse_divisors(&read(dir.path(), "xt.divisors.txt")).unwrap();
    assert_eq!(divisors.levels(), 11);
    fiszkit_ok(dir.path(), &["vst", "inverse", "--in", "xt.txt", "--divisors", "xt.divisors.txt", "--out", "back.txt"]);
    let x = parse_values(&read(dir.path(), "sim.data.txt")).unwrap();
    let back = parse_values(&read(dir.path(), "back.txt")).unwrap();
    let err = x.iter().zip(&back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-10);
}

#[test]
fn bench_report_independent_of_threads() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_fiszkit"))
            .current_dir(dir.path())
            .env("FISZKIT_THREADS", threads)
            .args(["bench", "--reps", "2", "--n", "256", "--stride", "8", "--seed", "1", "--out", "report.txt"])
            .status()
            .unwrap();
        assert!(status.success());
        read(dir.path(), "report.txt")
    };
    let one = run("1");
    let eight = run("8");
    assert_eq!(one, eight);
    // echo, two report comments, column header, two method rows
    assert_eq!(one.lines().count(), 6);
    let dir = tempfile::tempdir().unwrap();
    let bad = Command::new(env!("CARGO_BIN_EXE_fiszkit"))
        .current_dir(dir.path())
        .env("FISZKIT_THREADS", "zero")
        .args(["bench", "--reps", "1", "--n", "64"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
