use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const REFERENCE: &str = r#""params": {"alpha": 0.5, "mu0": 0.4, "beta": 0.5, "phi": 4.0}"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cirfilter"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("CIRFILTER_THREADS")
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_is_reproducible() {
    let cfg = format!(
        r#"{{{REFERENCE}, "simulate": {{"horizon": 10, "step": 0.01, "seed": 5, "paths": 2}}}}"#
    );
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &cfg, &["simulate"]).status.success());
    assert!(run(b.path(), &cfg, &["simulate"]).status.success());
    for name in [
        "path_0.csv",
        "path_1.csv",
        "jumps_0.txt",
        "jumps_1.txt",
        "summary.csv",
    ] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let (header, rows) = read_csv(&a.path().join("out/path_0.csv"));
    assert_eq!(header, ["t", "lambda"]);
    assert_eq!(rows.len(), 1001);
    assert!(rows.iter().all(|r| r[1] >= 0.0));
    let jumps: Vec<f64> = fs::read_to_string(a.path().join("out/jumps_0.txt"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert!(jumps.windows(2).all(|w| w[0] < w[1]));
    assert!(jumps.iter().all(|&t| t > 0.0 && t <= 10.0));
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = format!(r#"{{{REFERENCE}, "simulate": {{"horizon": 2, "seed": 5}}}}"#);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run(a.path(), &cfg, &["simulate"]).status.success());
    assert!(run(b.path(), &cfg, &["simulate", "--seed", "6"])
        .status
        .success());
    let x = fs::read(a.path().join("out/path_0.csv")).unwrap();
    let y = fs::read(b.path().join("out/path_0.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn zero_paths_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{REFERENCE}, "simulate": {{"horizon": 1, "paths": 0}}}}"#);
    let out = run(dir.path(), &cfg, &["simulate"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(text, "path,lambda0,n_jumps\n");
}

#[test]
fn filter_trace_columns_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{{REFERENCE}, "filter": {{"jumps": [1, 2], "query_grid": {{"start": 0, "end": 3, "step": 0.5}}, "mgf_s": [-0.5]}}}}"#
    );
    let out = run(dir.path(), &cfg, &["filter"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("out/filter_trace.csv"));
    assert_eq!(
        header,
        ["t", "n", "Q", "lambda_hat", "mgf_-0.5", "survival_1y"]
    );
    assert_eq!(rows[0][0], 0.0);
    assert!((rows[0][3] - 0.4).abs() < 1e-14);
    // 7 grid points, each jump adds a pre/post pair in place of one row
    assert_eq!(rows.len(), 9);
    let ns: Vec<usize> = rows.iter().map(|r| r[1] as usize).collect();
    assert_eq!(ns, [0, 0, 0, 1, 1, 1, 2, 2, 2]);
    // the pair at t = 1 exposes the upward jump in the mean
    assert_eq!(rows[2][0], 1.0);
    assert_eq!(rows[3][0], 1.0);
    assert!(rows[3][3] > rows[2][3]);
}

#[test]
fn duplicate_jump_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{REFERENCE}, "filter": {{"jumps": [1, 1], "query_grid": [0, 2]}}}}"#);
    let out = run(dir.path(), &cfg, &["filter"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));
    assert!(stderr(&out).contains("strictly increasing"));
}

#[test]
fn jumps_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("jumps.txt"), "1\n2\n").unwrap();
    let cfg = format!(
        r#"{{{REFERENCE}, "filter": {{"jumps": {{"file": "jumps.txt"}}, "query_grid": [2.5]}}}}"#
    );
    let out = run(dir.path(), &cfg, &["filter"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = read_csv(&dir.path().join("out/filter_trace.csv"));
    assert_eq!(rows.last().unwrap()[1], 2.0);
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{REFERENCE}, "filter": {{"query_grid": [0], "colour": 1}}}}"#);
    let out = run(dir.path(), &cfg, &["filter"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn missing_section_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &format!("{{{REFERENCE}}}"), &["mixture"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mixture_weights_on_three_jumps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{REFERENCE}, "mixture": {{"jumps": [1, 2, 3], "t_step": 0.01}}}}"#);
    let out = run(dir.path(), &cfg, &["mixture"]);
    assert!(out.status.success(), "{}", stderr(&out));
    for n in [2usize, 3] {
        let (header, rows) = read_csv(&dir.path().join(format!("out/mixture_n{n}.csv")));
        let expected: Vec<String> = std::iter::once("t".to_string())
            .chain((0..=n).map(|i| format!("pi_{i}")))
            .collect();
        assert_eq!(header, expected);
        assert_eq!(rows.len(), 100);
        assert_eq!(rows[0][0], n as f64);
        for r in rows {
            assert!(r[0] >= n as f64 && r[0] < n as f64 + 1.0);
            let w = &r[1..];
            assert!(w.iter().all(|&x| x >= -1e-12));
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn survival_curve_and_default_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{{REFERENCE}, "survival": {{"horizons": [0.5, 1, 2]}}}}"#);
    let out = run(dir.path(), &cfg, &["survival"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("out/survival.csv"));
    assert_eq!(header, ["t", "horizon", "survival"]);
    assert!((rows[1][2] - 0.696).abs() < 1e-3);
    assert!(rows[0][2] > rows[1][2] && rows[1][2] > rows[2][2]);

    let cfg = format!(
        r#"{{{REFERENCE}, "survival": {{"horizons": [1], "jumps": [0.5], "at": 1.0, "default_time": 0.5}}}}"#
    );
    assert!(run(dir.path(), &cfg, &["survival"]).status.success());
    let (_, rows) = read_csv(&dir.path().join("out/survival.csv"));
    assert_eq!(rows[0][2], 0.0);
}

#[test]
fn small_validation_run_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{{REFERENCE}, "validate": {{"particles": 20000, "scenarios": 2, "replicates": 20, "seed": 3, "horizon": 2}}}}"#
    );
    let out = run(dir.path(), &cfg, &["validate"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_csv(&dir.path().join("out/oracle_report.csv"));
    assert_eq!(
        header,
        ["t", "exact_lambda_hat", "pf_estimate", "pf_se", "z_score"]
    );
    assert_eq!(rows.len(), 20);
}

#[test]
fn bad_thread_count_is_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    fs::write(&cfg, format!("{{{REFERENCE}}}")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_cirfilter"))
        .arg("filter")
        .arg("--config")
        .arg(&cfg)
        .env("CIRFILTER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
