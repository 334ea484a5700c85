use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plapmem::config::parse_config_str;
use proptest::prelude::*;

const BIN: &str = env!("CARGO_BIN_EXE_plapmem");

const SMALL: &str = r#"{"p":3,"r":2,"m":6,"N":20,"T":0.1,"lambda":1,"domain":[0,1],"snapshot_times":[0,0.05,0.1]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn solve_config(dir: &Path, json: &str) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, json).unwrap();
    let out = dir.join("out");
    run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

#[test]
fn solve_writes_all_series() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve_config(dir.path(), SMALL);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("L2 error at T"), "{stdout}");
    for name in ["config.json", "snapshots.csv", "energy.csv", "support.csv", "diagnostics.csv"] {
        assert!(dir.path().join("out").join(name).is_file(), "missing {name}");
    }
    let energy = fs::read_to_string(dir.path().join("out/energy.csv")).unwrap();
    assert_eq!(energy.lines().count(), 1 + 21);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(solve_config(a.path(), SMALL).status.success());
    assert!(solve_config(b.path(), SMALL).status.success());
    for name in ["config.json", "snapshots.csv", "energy.csv", "support.csv", "diagnostics.csv"] {
        let x = fs::read(a.path().join("out").join(name)).unwrap();
        let y = fs::read(b.path().join("out").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn echoed_config_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    assert!(solve_config(dir.path(), SMALL).status.success());
    let echo = fs::read_to_string(dir.path().join("out/config.json")).unwrap();
    assert_eq!(parse_config_str(&echo).unwrap(), parse_config_str(SMALL).unwrap());
}

#[test]
fn bad_field_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = solve_config(dir.path(), &SMALL.replace("\"r\":2", "\"r\":0"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`r`"));
    let out = solve_config(dir.path(), &SMALL.replace("\"m\":6", "\"m\":6,\"bogus\":1"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stalled_iteration_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let json = SMALL.replace("\"N\":20", "\"N\":20,\"tol\":1e-300,\"max_iter\":3");
    let out = solve_config(dir.path(), &json);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn ill_posed_step_exits_4() {
    // δ g(0) = −4 makes the implicit memory coefficient vanish
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"p":3,"r":1,"m":4,"N":1,"T":0.5,"lambda":-8,"domain":[0,1]}"#;
    let out = solve_config(dir.path(), json);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = run(&["solve", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn verify_passes() {
    let out = run(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn example_rejects_unknown_id() {
    assert_eq!(run(&["example", "7"]).status.code(), Some(2));
}

#[test]
fn example3_single_case_serial_matches_parallel() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["example", "3", "--p", "3", "--lambda", "-5", "--out"];
    let mut serial = base.to_vec();
    serial.push(a.path().to_str().unwrap());
    let mut parallel = base.to_vec();
    parallel.extend([b.path().to_str().unwrap(), "--parallel"]);
    let x = run(&serial);
    let y = run(&parallel);
    assert!(x.status.success(), "{}", String::from_utf8_lossy(&x.stderr));
    assert!(y.status.success());
    let files: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert!(!files.is_empty());
    for f in files.iter().filter(|f| f.is_file()) {
        let name = f.file_name().unwrap();
        assert_eq!(fs::read(f).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trips(
        p in 1.2f64..6.0,
        lambda in -20.0f64..20.0,
        r in 1usize..=4,
        m in 1usize..200,
        n in 1usize..5000,
        t in 1e-3f64..10.0,
        tol in 1e-14f64..1e-3,
        literal in any::<bool>(),
    ) {
        let mode = if literal { "literal" } else { "consistent" };
        let json = format!(
            r#"{{"p":{p},"r":{r},"m":{m},"N":{n},"T":{t},"lambda":{lambda},"tol":{tol},"epsilon":0.01,"quadrature_mode":"{mode}"}}"#
        );
        let cfg = parse_config_str(&json).unwrap();
        prop_assert_eq!(parse_config_str(&cfg.to_json()).unwrap(), cfg);
    }
}
