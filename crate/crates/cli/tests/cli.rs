use std::process::{Command, Output};

fn mtcache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtcache"))
        .args(args)
        .output()
        .expect("binary runs")
}

const HEADER: &str =
    "sweep_param,sweep_value,mean_delay_norm,std_delay_norm,analytic_infinite,analytic_tdma,decode_failures,trials,seed";

#[test]
fn simulate_prints_header_and_one_row() {
    let out = mtcache(&[
        "simulate",
        "--k",
        "3",
        "--l",
        "2",
        "--m-cache",
        "1",
        "--file-size",
        "40",
        "--trials",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], HEADER);
    assert!(lines[1].starts_with("none,0,"));
    assert!(lines[1].ends_with(",0,3,0"), "{}", lines[1]);
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = mtcache(&[
            "sweep",
            "--k",
            "4",
            "--m-cache",
            "2",
            "--file-size",
            "100",
            "--param",
            "l",
            "--values",
            "1,2",
            "--trials",
            "8",
            "--seed",
            "42",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        bytes.push(std::fs::read(path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(
        String::from_utf8(bytes[0].clone()).unwrap().lines().count(),
        3
    );
}

#[test]
fn json_output_mirrors_csv_fields() {
    let out = mtcache(&[
        "simulate",
        "--k",
        "2",
        "--l",
        "1",
        "--file-size",
        "20",
        "--trials",
        "2",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for field in HEADER.split(',') {
        assert!(text.contains(&format!("\"{field}\"")), "{field}");
    }
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["simulate", "--k", "0"],
        vec!["simulate", "--no-such-flag"],
        vec!["figure", "--id", "9"],
        vec![
            "simulate",
            "--placement",
            "centralized",
            "--k",
            "4",
            "--m-cache",
            "1.5",
        ],
        vec!["simulate", "--field-bits", "12"],
        vec![],
    ] {
        let out = mtcache(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_two() {
    let out = mtcache(&["fit-gamma", "--input", "/definitely/not/here.txt"]);
    assert_eq!(out.status.code(), Some(2));
    let out = mtcache(&[
        "simulate",
        "--trials",
        "1",
        "--out",
        "/definitely/not/here.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analytic_reports_reference_values() {
    let out = mtcache(&[
        "analytic",
        "--k",
        "3",
        "--l",
        "2",
        "--n",
        "3",
        "--m-cache",
        "1",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["delay_infinite"].as_f64().unwrap() - 22.0 / 27.0).abs() < 1e-12);
}

#[test]
fn fit_gamma_reads_samples_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, "1 2 3\n4,5\n0\n").unwrap();
    let out = mtcache(&[
        "fit-gamma",
        "--input",
        path.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["used"], 5);
    assert_eq!(v["dropped"], 1);
    // mean 3, population variance 2
    assert!((v["shape"].as_f64().unwrap() - 4.5).abs() < 1e-12);
}

#[test]
fn schedule_dump_has_one_line_per_block() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sched.jsonl");
    let out = mtcache(&[
        "simulate",
        "--k",
        "3",
        "--l",
        "2",
        "--m-cache",
        "1",
        "--file-size",
        "30",
        "--trials",
        "1",
        "--schedule-out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.lines().count() >= 1);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["omega"].as_u64().unwrap() >= 1);
    }
}
