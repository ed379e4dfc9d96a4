use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn calabi(args: &[&str]) -> Output {
    calabi_env(args, &[])
}

fn calabi_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_calabi"));
    cmd.args(args).env_remove("CALABI_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn schema(name: &str) -> Value {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../schema")
        .join(format!("{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, v: &Value) {
    let validator = jsonschema::validator_for(&schema(schema_name)).unwrap();
    let errors: Vec<String> = validator
        .iter_errors(v)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{schema_name}: {errors:#?}");
}

#[test]
fn residual_vanishes_at_the_solving_exponent() {
    let v = json(&calabi(&[
        "residual",
        "--catalog",
        "thm13a",
        "--dim",
        "2",
        "--a",
        "-0.6666666667",
        "--point",
        "1,0",
    ]));
    let r = &v["result"]["reports"][0];
    assert!(r["normalized_residual"].as_f64().unwrap().abs() < 1e-9, "{r}");
}

#[test]
fn zero_exponent_is_rejected() {
    let o = calabi(&[
        "residual",
        "--catalog",
        "thm13a",
        "--dim",
        "2",
        "--a",
        "0",
        "--point",
        "1,0",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exponent must be nonzero"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn validation_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &[
            "residual",
            "--catalog",
            "thm13a",
            "--dim",
            "3",
            "--a",
            "-1",
            "--point",
            "1,0",
        ],
        &["residual", "--catalog", "nosuch", "--a", "-1", "--point", "1,0"],
        &["residual", "--expr", "x1^2 + x3^2", "--a", "-1", "--point", "1,0"],
        &["residual", "--expr", "x1^2 +", "--a", "-1", "--point", "1,0"],
        &["residual", "--catalog", "thm13a", "--a", "-1", "--point", "1,zero"],
        &["residual", "--a", "-1", "--point", "1,0"],
        &["theta", "--catalog", "thm13a", "--point", "1,0", "--restarts", "2"],
        &[
            "theta",
            "--catalog",
            "thm13a",
            "--point",
            "1,0,0,0",
            "--resolution",
            "720",
        ],
        &["ode", "--step", "0.5"],
        &["param-check", "--case", "torus"],
        &["verify", "--suite", "other"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = calabi(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn numeric_errors_exit_3() {
    let cases: &[&[&str]] = &[
        &["residual", "--catalog", "thm13a", "--a", "-1", "--point", "-1,0"],
        &["analyze", "--expr", "-x1^2 - x2^2", "--point", "1,1"],
        &["theta", "--catalog", "quadratic", "--point", "0.5,0.5"],
        &[
            "legendre",
            "--catalog",
            "thm13b",
            "--point",
            "2,0.5",
            "--conjugate",
            "thm13a",
        ],
    ];
    for args in cases {
        let o = calabi(args);
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = calabi_env(&["catalog", "list"], &[("CALABI_THREADS", "0")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CALABI_THREADS"));
}

#[test]
fn every_verb_has_help() {
    for verb in [
        "analyze",
        "residual",
        "identity54",
        "theta",
        "ode",
        "param-check",
        "legendre",
        "geodesic",
        "length",
        "catalog",
        "verify",
    ] {
        let o = calabi(&[verb, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{verb}");
        assert!(stdout(&o).contains("Usage: calabi"), "{verb}");
    }
    let top = stdout(&calabi(&["--help"]));
    assert!(top.contains("CALABI_THREADS"));
}

#[test]
fn outputs_match_their_schemas() {
    let runs: &[(&str, &[&str])] = &[
        ("analyze", &["analyze", "--catalog", "thm13a", "--point", "1,0"]),
        (
            "analyze",
            &["analyze", "--catalog", "quadratic", "--point", "0,0,0", "--a", "-1,0.5"],
        ),
        (
            "analyze",
            &["analyze", "--expr", "-0.25*ln(x1)", "--domain", "x1", "--point", "2"],
        ),
        (
            "residual",
            &[
                "residual",
                "--catalog",
                "thm13b",
                "--point",
                "2,0.5,0.1",
                "--a",
                "-0.25,-1",
            ],
        ),
        ("identity54", &["identity54", "--a", "0.5", "--point", "2,1"]),
        (
            "theta",
            &[
                "theta",
                "--catalog",
                "sphere_case",
                "--point",
                "1,1",
                "--resolution",
                "360",
            ],
        ),
        ("theta", &["theta", "--catalog", "thm13a", "--point", "3,1,1,1"]),
        ("ode", &["ode", "--eta0", "0.5", "--t-end", "0.1"]),
        (
            "param-check",
            &["param-check", "--case", "hyperbolic", "--dim", "3", "--samples", "2"],
        ),
        (
            "param-check",
            &["param-check", "--case", "flat_minus", "--point", "0.5,0.3"],
        ),
        (
            "legendre",
            &[
                "legendre",
                "--catalog",
                "thm13b",
                "--point",
                "2,0.5",
                "--conjugate",
                "dual59",
            ],
        ),
        ("legendre", &["legendre", "--catalog", "thm13b", "--point", "2,0.5"]),
        (
            "geodesic",
            &[
                "geodesic",
                "--catalog",
                "thm13a",
                "--point",
                "1,0",
                "--velocity",
                "2,0",
                "--s-end",
                "0.1",
            ],
        ),
        (
            "length",
            &["length", "--catalog", "thm13a", "--point", "1,0", "--direction", "-1,0"],
        ),
        ("catalog-list", &["catalog", "list"]),
        ("catalog-show", &["catalog", "show", "dual59", "--dim", "3"]),
    ];
    for (name, args) in runs {
        let v = json(&calabi(args));
        assert_valid(name, &v);
    }
}

#[test]
fn analyze_report_contents() {
    let v = json(&calabi(&["analyze", "--catalog", "thm13a", "--point", "1,0"]));
    let r = &v["result"];
    assert_eq!(r["invariants"]["pickJ"], 3.5);
    assert_eq!(r["metric"]["detD"], 0.0625);
    // default exponents: the solving exponent, then -1
    assert_eq!(r["pde"].as_array().unwrap().len(), 2);
    assert!((r["pde"][1]["implied_lsharp"].as_f64().unwrap() + 12.0).abs() < 1e-9);
    assert!((r["frames"]["theta"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(r["provenance"]["seed"], 42);
}

#[test]
fn fixed_seed_gives_identical_bytes_across_thread_counts() {
    for args in [
        &[
            "analyze",
            "--catalog",
            "hyperbolic_case",
            "--point",
            "2,0.5,0.3",
            "--seed",
            "9",
        ][..],
        &[
            "theta",
            "--catalog",
            "sphere_case",
            "--point",
            "1,2,0.5",
            "--restarts",
            "32",
            "--resolution",
            "360",
        ][..],
    ] {
        let a = calabi_env(args, &[("CALABI_THREADS", "1")]);
        let b = calabi_env(args, &[("CALABI_THREADS", "4")]);
        let c = calabi(args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
        assert_eq!(a.stdout, c.stdout);
    }
}

#[test]
fn csv_outputs() {
    let o = calabi(&["ode", "--format", "csv", "--t-end", "0.01"]);
    let s = stdout(&o);
    assert!(s.starts_with("t,eta,rho,cbar\n0,0,1,"), "{s}");
    assert!(!s.contains('\r'));
    assert_eq!(s.lines().count(), 12);

    let s = stdout(&calabi(&[
        "geodesic",
        "--catalog",
        "thm13a",
        "--point",
        "1,0",
        "--velocity",
        "2,0",
        "--s-end",
        "0.01",
        "--format",
        "csv",
    ]));
    assert!(s.starts_with("s,x1,x2,speed\n"), "{s}");

    let s = stdout(&calabi(&[
        "residual",
        "--catalog",
        "thm13a",
        "--point",
        "1,0",
        "--a",
        "-1",
        "--format",
        "csv",
    ]));
    let mut lines = s.lines();
    assert_eq!(
        lines.next(),
        Some("a,detD,w,residual_12,residual_11,implied_lsharp,normalized_residual")
    );
    let cells: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cells[4] - 12.0).abs() < 1e-9);

    let s = stdout(&calabi(&["catalog", "list", "--format", "csv"]));
    assert!(
        s.starts_with("name,label\nquadratic,\"flat quadratic, the trivial solution\"\n"),
        "{s}"
    );

    let s = stdout(&calabi(&[
        "length",
        "--catalog",
        "thm13a",
        "--point",
        "1,0",
        "--direction",
        "-1,0",
        "--format",
        "csv",
    ]));
    assert!(s.starts_with("key,value\nlength,"), "{s}");
}

#[test]
fn out_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ode.json");
    let o = calabi(&["ode", "--t-end", "0.1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid("ode", &v);
    let last = v["result"]["samples"].as_array().unwrap().last().unwrap().clone();
    assert!((last["t"].as_f64().unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn geodesic_leaving_the_domain_keeps_the_partial_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("path.csv");
    let o = calabi(&[
        "geodesic",
        "--expr",
        "0.5*x1^2 + 0.5*x2^2",
        "--domain",
        "1 - x1",
        "--point",
        "0,0",
        "--velocity",
        "1,0",
        "--s-end",
        "5",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("left the domain"));
    let s = std::fs::read_to_string(&path).unwrap();
    assert!(s.lines().count() > 2);
}

#[test]
fn verify_prints_a_table_and_validates() {
    let o = calabi(&["verify", "--suite", "paper", "--seed", "7", "--format", "json"]);
    let v = json(&o);
    assert_valid("verify", &v);
    let checks = v["result"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 13);
    assert!(checks.iter().all(|c| c["passed"] == true), "{checks:#?}");
}
