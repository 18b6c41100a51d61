use std::f64::consts::SQRT_2;
use std::path::Path;
use std::process::{Command, Output};

fn semlab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semlab"))
        .args(args)
        .current_dir(cwd)
        .env("SEMLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn verify_two_point_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = semlab(&["verify", "--space", "two_point", "--seed", "7", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let o = dir.path().join("o");
    for file in ["report.json", "summary.csv", "sweep.csv", "control.json", "summary.txt"] {
        assert!(o.join(file).is_file(), "{file} missing");
    }
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout, read(&o.join("summary.txt")));
    assert!(stdout.contains("result: PASS"));

    let sweep = read(&o.join("sweep.csv"));
    let mut lines = sweep.lines();
    assert_eq!(lines.next(), Some("t,c_star,C_star,theta"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (t, c, cap, theta) = (v[0], v[1], v[2], v[3]);
        let e = (-2.0 * t).exp();
        assert!((c - SQRT_2 * e).abs() <= 1e-10);
        assert!((cap - SQRT_2 / 2.0 * (1.0 - e)).abs() <= 1e-10);
        assert!((theta - (1.0 + e) / 2.0).abs() <= 1e-10);
        rows += 1;
    }
    assert_eq!(rows, 40);

    let summary = read(&o.join("summary.csv"));
    assert!(summary.starts_with("name,lhs,rhs,slack,t_used,pass\n"));
    for line in summary.lines().skip(1) {
        assert_eq!(line.split(',').count(), 6);
        assert!(line.ends_with(",true"), "{line}");
    }
    let report: serde_json::Value = serde_json::from_str(&read(&o.join("report.json"))).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
}

#[test]
fn verify_is_byte_identical_across_runs() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let o = semlab(&["verify", "--space", "cycle:n=12", "--seed", "3", "--samples", "20", "--out", "o"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["report.json", "summary.csv", "sweep.csv", "control.json", "summary.txt"] {
        let [a, b] = &dirs;
        assert!(read(&a.path().join("o").join(file)) == read(&b.path().join("o").join(file)), "{file} differs");
    }
}

#[test]
fn failing_checks_exit_one_and_still_write() {
    let dir = tempfile::tempdir().unwrap();
    let out = semlab(&["verify", "--space", "two_point", "--control", "power:m=0.01,b=0.5", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let text = read(&dir.path().join("o").join("summary.txt"));
    assert!(text.contains("result: FAIL"));
    assert!(text.contains("space=two_point"));
}

#[test]
fn corrupted_control_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("broken.json"), "{\"variant\": \"power\", \"m\": ").unwrap();
    let out = semlab(&["verify", "--space", "two_point", "--control", "broken.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("broken.json"), "{}", stderr(&out));
}

#[test]
fn config_files_and_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.cfg"), "# scenario\nspace=cycle:n=6 seed=2\nsuite=w1_smoothing,buser samples=5\n").unwrap();
    let out = semlab(&["verify", "--config", "ok.cfg", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("o").join("report.json"))).unwrap();
    let names: Vec<&str> = report["suite"]["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.iter().all(|n| n.starts_with("w1_smoothing") || n.starts_with("buser")), "{names:?}");

    // flags override the file
    let out = semlab(&["verify", "--config", "ok.cfg", "--space", "path:n=4", "--out", "p"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(read(&dir.path().join("p").join("summary.txt")).contains("space=path:n=4"));

    std::fs::write(dir.path().join("typo.cfg"), "spce=two_point\n").unwrap();
    let out = semlab(&["verify", "--config", "typo.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("spce"));
    assert!(stderr(&out).contains("typo.cfg"));
}

#[test]
fn sweep_fit_and_report_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let out = semlab(&["sweep", "--space", "two_point", "--t-grid", "log:0.01,1,5", "--out", "s.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = read(&dir.path().join("s.csv"));
    assert_eq!(table.lines().count(), 6);

    let out = semlab(&["fit", "--samples", "s.csv", "--b", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let control: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(control["variant"], "power");
    assert_eq!(control["b"], 0.5);
    // M = max_i c⋆(t_i) t_i^{1/2} over the sampled times
    let expected = table
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            v[1] * v[0].sqrt()
        })
        .fold(0.0, f64::max);
    assert!((control["m"].as_f64().unwrap() - expected).abs() <= 1e-15 * expected);

    let out = semlab(&["fit", "--samples", "s.csv", "--out", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let out = semlab(&["verify", "--space", "two_point", "--control", "c.json", "--suite", "buser", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = semlab(&["report", "o/report.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), read(&dir.path().join("o").join("summary.txt")));

    let out = semlab(&["report", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("missing.json"));
}

#[test]
fn invalid_arguments_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["verify", "--space", "cycle:n=1"],
        vec!["verify", "--space", "two_point", "--t-grid", "log:1,0.1,5"],
        vec!["verify", "--space", "two_point", "--suite", "nonsense"],
        vec!["verify"],
    ] {
        let out = semlab(&args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).starts_with("error:"), "{args:?}: {}", stderr(&out));
    }
    let out = Command::new(env!("CARGO_BIN_EXE_semlab"))
        .args(["sweep", "--space", "two_point"])
        .env("SEMLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
