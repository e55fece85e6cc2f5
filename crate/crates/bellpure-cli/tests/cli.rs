//! End-to-end tests of the `bellpure` binary: output formats, round
//! trips, determinism and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bellpure(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellpure"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn evolve_matches_the_composition_law() {
    let out = bellpure(&[
        "evolve",
        "--state",
        "werner:0.7",
        "--seq",
        "B2 B2",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let value: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let state: bellpure::BellDiagonalState =
        serde_json::from_value(value["state"].clone()).unwrap();
    let direct = bellpure::apply_bn(&bellpure::werner(0.7).unwrap(), 4)
        .unwrap()
        .state;
    for (x, y) in state.components().iter().zip(direct.components()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn threshold_prints_one_fifth() {
    let out = bellpure(&["threshold", "--protocol", "bb84"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("0.200000000"), "missing B* in:\n{text}");
    assert!(text.contains("0.600000000"));

    let out = bellpure(&["threshold", "--format", "json"]);
    let results: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let rates: Vec<f64> = results
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["critical_bit_error_rate"].as_f64().unwrap())
        .collect();
    assert_eq!(rates.len(), 4);
    assert!((rates[0] - 0.2).abs() <= 1e-9);
    assert!((rates[2] - (0.5 - 0.5 / 5.0f64.sqrt())).abs() <= 1e-9);
}

#[test]
fn emitted_state_json_round_trips() {
    let dir = std::env::temp_dir().join("bellpure-cli-roundtrip");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.json");
    let out = bellpure(&[
        "evolve",
        "--state",
        "0.7,0.1,0.15,0.05",
        "--seq",
        "B3 P3",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let spec = format!("@{}", path.display());
    let back = bellpure(&["evolve", "--state", &spec, "--format", "json"]);
    assert!(back.status.success(), "emitted JSON was not accepted back");
    let reread: serde_json::Value = serde_json::from_str(&stdout_of(&back)).unwrap();
    let original: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    // reload renormalizes, which may shift components by one ulp
    for key in ["a", "b", "c", "d"] {
        let x = reread["state"][key].as_f64().unwrap();
        let y = original["state"][key].as_f64().unwrap();
        assert!((x - y).abs() <= 1e-15, "{key}: {x} vs {y}");
    }
}

#[test]
fn scans_are_byte_identical_across_runs() {
    let dir = std::env::temp_dir().join("bellpure-cli-determinism");
    fs::create_dir_all(&dir).unwrap();
    let run = |csv: &Path, summary: &Path| {
        let out = bellpure(&[
            "scan",
            "--theorem-chain",
            "--samples",
            "2000",
            "--seed",
            "31",
            "--out",
            csv.to_str().unwrap(),
            "--summary",
            summary.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "scan failed: {out:?}");
    };
    let (c1, s1) = (dir.join("a.csv"), dir.join("a.json"));
    let (c2, s2) = (dir.join("b.csv"), dir.join("b.json"));
    run(&c1, &s1);
    run(&c2, &s2);
    assert_eq!(fs::read(&c1).unwrap(), fs::read(&c2).unwrap());
    assert_eq!(fs::read(&s1).unwrap(), fs::read(&s2).unwrap());

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&s1).unwrap()).unwrap();
    assert_eq!(summary["n_records"], 2000);
    assert_eq!(summary["n_violations"], 0);
}

#[test]
fn conjecture_scan_emits_figure_data() {
    let dir = std::env::temp_dir().join("bellpure-cli-fig2");
    fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("fig2.csv");
    let out = bellpure(&[
        "scan",
        "--conjecture",
        "--t-grid",
        "51",
        "--n",
        "3,5",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,n,r_pn,a_out,b_out,f_out,margin,pass"
    );
    assert_eq!(text.lines().count(), 1 + 51 * 2);
}

#[test]
fn verify_cross_checks_the_oracle() {
    let out = bellpure(&[
        "verify",
        "--state",
        "0.6,0.2,0.15,0.05",
        "--step",
        "B3",
        "--shots",
        "20000",
    ]);
    assert!(out.status.success(), "verify exit: {out:?}");
    let text = stdout_of(&out);
    assert!(text.contains("max component deviation"));
    assert!(text.contains("monte carlo"));

    let out = bellpure(&["verify", "--state", "werner:0.8", "--step", "P5"]);
    assert!(out.status.success());
}

#[test]
fn figure_emits_square_raster() {
    let out = bellpure(&["figure", "--grid", "21"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "a,b,f,class,in_sv_closure,margin,pass"
    );
    assert_eq!(text.lines().count(), 1 + 21 * 21);
}

#[test]
fn exit_codes_reflect_failure_kinds() {
    // usage: unknown flag
    let out = bellpure(&["evolve", "--nonsense"]);
    assert_eq!(out.status.code(), Some(64));
    // usage: malformed step grammar
    let out = bellpure(&["evolve", "--state", "werner:0.7", "--seq", "Q3"]);
    assert_eq!(out.status.code(), Some(64));
    // domain error: fidelity outside [0, 1]
    let out = bellpure(&["evolve", "--state", "werner:1.5"]);
    assert_eq!(out.status.code(), Some(1));
    // domain error: invalid inline state
    let out = bellpure(&["exponents", "--state", "0.5,0.5,0.1,0.0"]);
    assert_eq!(out.status.code(), Some(1));
    // resource limit: oracle cap
    let out = bellpure(&["verify", "--state", "werner:0.8", "--step", "B11"]);
    assert_eq!(out.status.code(), Some(3));
    // scan without a mode is a usage error
    let out = bellpure(&["scan"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn decide_reports_verdict_and_evidence() {
    let out = bellpure(&["decide", "--state", "werner:0.7"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    assert!(text.contains("verdict: correctable"));
    assert!(text.contains("smallest n = 3"));

    let out = bellpure(&["decide", "--state", "bb84:0.55", "--format", "json"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["verdict"], "NotCorrectable");
}

#[test]
fn threads_flag_does_not_change_results() {
    let base = bellpure(&["scan", "--lemma-diag", "--samples", "500", "--seed", "3"]);
    let single = bellpure(&[
        "scan",
        "--lemma-diag",
        "--samples",
        "500",
        "--seed",
        "3",
        "--threads",
        "1",
    ]);
    assert!(base.status.success() && single.status.success());
    assert_eq!(base.stdout, single.stdout);
}
