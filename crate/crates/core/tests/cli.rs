use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const UNIT_DRRW: &str = r#"{"drrw": {"nu_h": {"offset": 1, "masses": [1.0]},
 "nu_v": {"offset": 1, "masses": [1.0]},
 "p_h": 0.3333333333333333, "p_v": 0.3333333333333333}}"#;

fn combwalk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_combwalk"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("drrw_unit.json"), UNIT_DRRW).unwrap();
    dir
}

#[test]
fn classify_is_recurrent_and_reproducible() {
    let dir = setup();
    let d = dir.path();
    for out in ["a", "b"] {
        let o = combwalk(
            d,
            &[
                "classify",
                "--model",
                "drrw_unit.json",
                "--n",
                "4096",
                "--out",
                out,
            ],
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let v = json(&d.join("a/verdict.json"));
    assert_eq!(v["verdict"], "recurrent_at_N");
    for f in ["verdict.json", "terms.csv"] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap()
        );
    }
    let m = json(&d.join("a/manifest.json"));
    assert_eq!(m["command"], "classify");
    assert_eq!(m["status"], "ok");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["settings"]["tolerance"], 0.01);
    let terms = fs::read_to_string(d.join("a/terms.csv")).unwrap();
    assert_eq!(terms.lines().count(), 4098);
}

#[test]
fn undecided_exits_with_two() {
    let dir = setup();
    let d = dir.path();
    let cut = 1usize << 10;
    let mut masses: Vec<f64> = (1..cut)
        .map(|n| (n as f64).powf(-0.5) - ((n + 1) as f64).powf(-0.5))
        .collect();
    masses.push((cut as f64).powf(-0.5));
    let nu = serde_json::json!({ "offset": 1, "masses": masses });
    let model = serde_json::json!({ "drrw": { "nu_h": nu, "nu_v": nu, "p_h": 0.3, "p_v": 0.3 } });
    fs::write(d.join("tail.json"), model.to_string()).unwrap();
    let o = combwalk(
        d,
        &[
            "classify",
            "--model",
            "tail.json",
            "--n",
            "64",
            "--tolerance",
            "0",
            "--out",
            "u",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&d.join("u/verdict.json"))["verdict"], "undecided");
    assert_eq!(json(&d.join("u/manifest.json"))["status"], "undecided");
}

#[test]
fn spectral_table_has_unit_eigenvalue_at_origin() {
    let dir = setup();
    let d = dir.path();
    let o = combwalk(
        d,
        &[
            "spectral",
            "--model",
            "drrw_unit.json",
            "--grid",
            "16",
            "--out",
            "s",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(d.join("s/spectral.csv")).unwrap();
    assert!(csv.starts_with("t1,t2,re_lambda,im_lambda,integrand"));
    let origin = csv.lines().find(|l| l.starts_with("0,0,")).unwrap();
    let re: f64 = origin.split(',').nth(2).unwrap().parse().unwrap();
    assert!((re - 1.0).abs() < 1e-12);
    assert_eq!(
        json(&d.join("s/classification.json"))["classification"],
        "diverges"
    );
}

#[test]
fn malformed_model_names_the_file() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("bad.json"), r#"{"drrw": {"nu_h": 3}}"#).unwrap();
    let o = combwalk(d, &["classify", "--model", "bad.json", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("bad.json") && err.contains("model.drrw"),
        "{err}"
    );
    assert!(json(&d.join("x/manifest.json"))["status"]
        .as_str()
        .unwrap()
        .starts_with("error"));
}

#[test]
fn lemma_suites() {
    let dir = setup();
    let d = dir.path();
    let o = combwalk(
        d,
        &["check", "lemmas", "--suite", "backtrack", "--out", "bt"],
    );
    assert_eq!(o.status.code(), Some(0));
    // the uniform-sum inequality has counterexamples at l = 2, 3
    let o = combwalk(
        d,
        &[
            "check", "lemmas", "--suite", "unif", "--lmax", "8", "--mmax", "6", "--out", "u",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&d.join("u/check_unif.json"))["violations"], 3);
    let o = combwalk(
        d,
        &[
            "check", "lemmas", "--suite", "unif", "--lmax", "8", "--mmax", "3", "--out", "u3",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn counterexample_round_trip() {
    let dir = setup();
    let d = dir.path();
    fs::write(d.join("params.json"), r#"{"p2": 0.15}"#).unwrap();
    let o = combwalk(
        d,
        &[
            "cex",
            "build",
            "--k",
            "8",
            "--params",
            "params.json",
            "--out",
            "c",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = combwalk(
        d,
        &[
            "cex",
            "verify",
            "--sequence",
            "c/sequence.json",
            "--out",
            "v",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&d.join("v/verify.json"))["all_hold"], true);
    let o = combwalk(d, &["cex", "bounds", "--k", "12", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&d.join("b/bounds.json"))["upper"]["bounded"], true);
    let o = combwalk(d, &["cex", "lemmas", "--n", "128", "--out", "t"]);
    assert_eq!(o.status.code(), Some(0));
    fs::write(d.join("typo.json"), r#"{"p_2": 0.15}"#).unwrap();
    let o = combwalk(d, &["cex", "build", "--params", "typo.json", "--out", "e"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_does_not_depend_on_jobs() {
    let dir = setup();
    let d = dir.path();
    for (out, jobs) in [("j1", "1"), ("j2", "2")] {
        let o = combwalk(
            d,
            &[
                "simulate",
                "--model",
                "drrw_unit.json",
                "--horizon",
                "2000",
                "--trials",
                "20",
                "--seed",
                "5",
                "--jobs",
                jobs,
                "--probe",
                "--out",
                out,
            ],
        );
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let a = fs::read(d.join("j1/ensemble.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("j2/ensemble.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 21);
    assert_eq!(
        json(&d.join("j1/dichotomy.json"))["rows"]
            .as_array()
            .unwrap()
            .len(),
        12
    );
}

#[test]
fn skeleton_outputs() {
    let dir = setup();
    let d = dir.path();
    let o = combwalk(
        d,
        &[
            "skeleton",
            "--model",
            "drrw_unit.json",
            "--horizon",
            "20000",
            "--out",
            "k",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let k = json(&d.join("k/kernel.json"));
    assert_eq!(k["states"].as_array().unwrap().len(), 12);
    assert!(
        json(&d.join("k/check.json"))["max_row_tv"]
            .as_f64()
            .unwrap()
            < 0.05
    );
    assert!(d.join("k/skeleton.csv").exists());
}
