use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sagnac-qkd"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_writes_identical_csv_twice() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let path = scenario("minimal.toml");
    for out in [&a, &b] {
        let o = bin()
            .args(["run", path.to_str().unwrap(), "--seed", "9", "--pulses", "30000", "--out"])
            .arg(out)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "9");
    assert_eq!(row[4], "30000");
}

#[test]
fn transcript_has_one_row_per_pulse() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    let o = bin()
        .args(["run", scenario("ideal.toml").to_str().unwrap(), "--pulses", "500", "--transcript"])
        .arg(&t)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&t).unwrap().lines().count(), 501);
    // summary CSV went to stdout
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("schema,"));
}

#[test]
fn calibrate_emits_loadable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let fitted = dir.path().join("fit.toml");
    let o = bin()
        .args([
            "calibrate",
            scenario("testbed.toml").to_str().unwrap(),
            "--target-raw",
            "1000",
            "--target-qber",
            "0.04",
            "--fitted",
        ])
        .arg(&fitted)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = sagnac_qkd::harness::load_scenario(&fitted).unwrap();
    let e = sagnac_qkd::harness::expected(&s).unwrap();
    assert!((e.raw_rate / 1000.0 - 1.0).abs() < 1e-6);
    assert!((e.qber.unwrap() / 0.04 - 1.0).abs() < 1e-6);
}

#[test]
fn infeasible_calibration_is_a_validation_error() {
    let o = run(&[
        "calibrate",
        scenario("testbed.toml").to_str().unwrap(),
        "--target-raw",
        "1200",
        "--target-qber",
        "0",
    ]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("achievable range"));
}

#[test]
fn sweep_and_fringe() {
    let o = run(&[
        "sweep",
        scenario("ideal.toml").to_str().unwrap(),
        "--axis",
        "mu",
        "--grid",
        "0.1,0.2",
        "--pulses",
        "1000",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);

    let o = run(&["fringe", scenario("ideal.toml").to_str().unwrap(), "--points", "12"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 13);
}

#[test]
fn net_run_selects_partner() {
    let o = run(&[
        "net-run",
        scenario("ring4.toml").to_str().unwrap(),
        "--partner",
        "dave",
        "--pulses",
        "20000",
    ]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().nth(1).unwrap().split(',').nth(3), Some("dave"));
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[source]\nmu = -1\n").unwrap();
    let o = run(&["run", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("source.mu"));

    let ideal = scenario("ideal.toml");
    let ideal = ideal.to_str().unwrap();
    for args in [
        vec!["run", "/no/such/file.toml"],
        vec!["sweep", ideal, "--axis", "colour", "--grid", "0:1:2"],
        vec!["sweep", ideal, "--axis", "mu", "--grid", "0:1"],
        vec!["net-run", ideal, "--partner", "alice"],
        vec!["frobnicate"],
        vec!["run", ideal, "--pulses", "0"],
    ] {
        assert_eq!(code(&run(&args)), 1, "{args:?}");
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let o = run(&[
        "run",
        scenario("minimal.toml").to_str().unwrap(),
        "--pulses",
        "10",
        "--out",
        "/no/such/dir/out.csv",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&run(&["--help"])), 0);
}
