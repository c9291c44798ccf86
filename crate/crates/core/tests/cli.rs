use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn retrowpt(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retrowpt"))
        .args(args)
        .current_dir(dir)
        .env_remove("RETROWPT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "axis_value,method,mean_W,mean_uW,std_error_W,trials,seed");
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn validate_seq_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = retrowpt(&["validate-seq", "--chips", "+1 -1 -1 +1", "--ns", "2"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("valid"));

    let bad = retrowpt(&["validate-seq", "--chips", "+1 -1 +1 +1", "--ns", "2"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("symbol 2"));

    let file = dir.path().join("seq.txt");
    fs::write(&file, "+1 +1 -1 -1\n").unwrap();
    let from_file = retrowpt(&["validate-seq", "--file", file.to_str().unwrap(), "--ns", "1"], dir.path());
    assert_eq!(from_file.status.code(), Some(0));

    let garbage = retrowpt(&["validate-seq", "--chips", "+1 0", "--ns", "1"], dir.path());
    assert_eq!(garbage.status.code(), Some(2));
    let wrong_len = retrowpt(&["validate-seq", "--chips", "+1 -1 +1", "--ns", "2"], dir.path());
    assert_eq!(wrong_len.status.code(), Some(2));
}

#[test]
fn average_prints_reference_values() {
    let dir = TempDir::new().unwrap();
    let out = retrowpt(&["average"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("(94.94 uW)"), "{}", stdout(&out));

    let cfg = dir.path().join("ts20.conf");
    fs::write(&cfg, "Ts = 2e-5\n").unwrap();
    let out = retrowpt(&["average", "--config", "ts20.conf"], dir.path());
    assert!(stdout(&out).contains("uW"));
    let value: f64 = stdout(&out).split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((value / 117e-6 - 1.0).abs() < 0.02);
}

#[test]
fn noiseless_average_is_full_array_gain() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("quiet.conf"), "sigma_n2 = 0\nM = 100\n").unwrap();
    let out = retrowpt(&["average", "--config", "quiet.conf"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let value: f64 = stdout(&out).split_whitespace().nth(3).unwrap().parse().unwrap();
    let gamma2 = 1e-3 * 20f64.powf(-2.5);
    let want = 0.5 * gamma2 * 101.0;
    assert!((value / want - 1.0).abs() < 1e-9, "{value} vs {want}");
}

#[test]
fn numerical_failure_and_bad_config_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = retrowpt(&["average", "--rel-tol", "1e-17", "--max-subdivisions", "1"], dir.path());
    assert_eq!(out.status.code(), Some(3));

    fs::write(dir.path().join("typo.conf"), "Pss = 2\n").unwrap();
    let out = retrowpt(&["average", "--config", "typo.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Pss"));

    fs::write(dir.path().join("odd.conf"), "Tc = 2e-6\n").unwrap();
    let out = retrowpt(&["simulate", "--config", "odd.conf", "--trials", "10"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let out = retrowpt(&["average", "--config", "missing.conf"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let dir = TempDir::new().unwrap();
    for d in ["a", "b"] {
        let out = retrowpt(&["simulate", "--trials", "300", "--seed", "9", "--out", d], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/simulate.csv")).unwrap();
    let b = fs::read(dir.path().join("b/simulate.csv")).unwrap();
    assert_eq!(a, b);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/simulate.json")).unwrap()).unwrap();
    assert!(json.is_object() || json.is_array());
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let run = |env: &str, out: &str| {
        Command::new(env!("CARGO_BIN_EXE_retrowpt"))
            .args(["simulate", "--trials", "50", "--out", out])
            .current_dir(dir.path())
            .env("RETROWPT_SEED", env)
            .output()
            .unwrap()
    };
    assert!(run("44", "env").status.success());
    assert!(retrowpt(&["simulate", "--trials", "50", "--seed", "44", "--out", "flag"], dir.path()).status.success());
    assert_eq!(
        fs::read(dir.path().join("env/simulate.csv")).unwrap(),
        fs::read(dir.path().join("flag/simulate.csv")).unwrap()
    );
}

#[test]
fn simulate_variants() {
    let dir = TempDir::new().unwrap();
    let out = retrowpt(&["simulate", "--trials", "2000", "--seed", "5", "--no-training", "--out", "base"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("base/simulate.csv"));
    let uw: f64 = rows[0][3].parse().unwrap();
    assert!((uw / 0.28 - 1.0).abs() < 0.10, "{uw}");

    let out = retrowpt(
        &["simulate", "--trials", "200", "--seed", "5", "--waveform", "--dump", "trial.json", "--out", "wave"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("wave/simulate.csv"));
    let uw: f64 = rows[0][3].parse().unwrap();
    assert!(uw > 60.0 && uw < 130.0, "{uw}");
    let dump: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("trial.json")).unwrap()).unwrap();
    assert!(dump.is_object());
}

#[test]
fn reproduce_writes_expected_tables() {
    let dir = TempDir::new().unwrap();
    let out = retrowpt(&["reproduce", "fig3", "--trials", "100", "--tb-ms", "0.2,0.4", "--out", "f3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for ts in [5, 10, 20] {
        let rows = csv_rows(&dir.path().join(format!("f3/fig3_ts{ts}us.csv")));
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1][1], "quadrature");
        assert_eq!(rows[1][3], rows[3][3]);
    }

    let out = retrowpt(&["reproduce", "fig4", "--trials", "50", "--m", "50,100", "--out", "f4"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&dir.path().join("f4/fig4.csv"));
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 50.0);
    assert!(dir.path().join("f4/fig4.manifest.json").exists());

    let out = retrowpt(&["reproduce", "baseline", "--trials", "100", "--out", "bl"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("bl/baseline.csv").exists());
}

#[test]
fn rerun_reproduces_output_bytes() {
    let dir = TempDir::new().unwrap();
    let out = retrowpt(&["reproduce", "fig4", "--trials", "60", "--seed", "17", "--m", "50,75", "--out", "first"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = retrowpt(&["rerun", "first/fig4.manifest.json", "--out", "second", "--threads", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(dir.path().join("first/fig4.csv")).unwrap(),
        fs::read(dir.path().join("second/fig4.csv")).unwrap()
    );

    let out = retrowpt(&["simulate", "--trials", "80", "--seed", "2", "--out", "s1"], dir.path());
    assert!(out.status.success());
    let out = retrowpt(&["rerun", "s1/simulate.manifest.json", "--out", "s2"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        fs::read(dir.path().join("s1/simulate.csv")).unwrap(),
        fs::read(dir.path().join("s2/simulate.csv")).unwrap()
    );
}

#[test]
fn print_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = retrowpt(&["print-config"], dir.path());
    assert!(out.status.success());
    fs::write(dir.path().join("echo.conf"), &out.stdout).unwrap();
    let a = retrowpt(&["average"], dir.path());
    let b = retrowpt(&["average", "--config", "echo.conf"], dir.path());
    assert_eq!(a.stdout, b.stdout);
}
