use std::fs;
use std::process::{Command, Output};

fn latconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_latconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

#[test]
fn analyze_reports_index() {
    let o = latconv(&["analyze", "--example", "intro"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("mu = 3/4"), "{text}");
    assert!(text.contains("verdict = positive-homogeneous-type"));
}

#[test]
fn unstable_scheme_exits_with_verdict_code() {
    let o = latconv(&["stability", "--example", "unstable1d", "--nmax", "512"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("unstable"));
    let o = latconv(&["stability", "--example", "srw:2", "--nmax", "64"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(k.to_string());
        let o = latconv(&[
            "power",
            "--example",
            "ex72",
            "--n",
            "20",
            "--window",
            "-8:8,-12:12",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        outputs.push(fs::read(out.join("power_n20.csv")).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn emitted_examples_round_trip() {
    let o = latconv(&["examples", "emit", "ex73"]);
    assert_eq!(o.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ex73.txt");
    fs::write(&path, &o.stdout).unwrap();
    let from_file = latconv(&["analyze", "--input", path.to_str().unwrap()]);
    let builtin = latconv(&["analyze", "--example", "ex73"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file), stdout(&builtin));
}

#[test]
fn usage_errors() {
    for args in [
        vec!["frobnicate"],
        vec!["analyze", "--example", "nope"],
        vec!["analyze", "--example", "intro", "--input", "x.txt"],
        vec!["power", "--example", "intro", "--n", "8..2"],
    ] {
        let o = latconv(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn malformed_input_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    fs::write(&path, "# comment\ndim 2\n0 0 1.0 0.0\n1 x 2.0 0.0\n").unwrap();
    let o = latconv(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn theta_and_legendre_outputs() {
    let o = latconv(&[
        "theta",
        "--example",
        "srw:2",
        "--n",
        "3",
        "--window",
        "-1:1,-1:1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = latconv(&["legendre", "--example", "ex71", "--at", "1,0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1.33790260"), "{}", stdout(&o));
}
