use std::path::Path;
use std::process::{Command, Output};

use hyperlab_cli::config::{apply_set, merge, resolve, Kind, Overrides};
use serde_json::{json, Value};

fn hyperlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperlab")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn body(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn spectrum_circle_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hyperlab(&["spectrum", "--set", "spectrum.k_max=3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = body(&dir.path().join("spectrum/spectrum.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("k,mu,multiplicity"));
    let rows: Vec<(usize, f64, usize)> = lines
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (c[0].parse().unwrap(), c[1].parse().unwrap(), c[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows, vec![(0, 0.0, 1), (1, 1.0, 2), (2, 4.0, 2), (3, 9.0, 2)]);
    assert!(csv.contains("9.0000000000000000e0"));
    let m = read_json(&dir.path().join("spectrum/manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["schema"], 1);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["spectrum"]["k_max"], 3);
    let summary = read_json(&dir.path().join("spectrum/spectrum.json"));
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["total_multiplicity"], 7);
}

#[test]
fn empty_lambda_sweep_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hyperlab(&["sweep", "--set", "sweep.lambdas=[]", "--out", out]);
    assert_eq!(code(&o), 1);
    let m = read_json(&dir.path().join("sweep/manifest.json"));
    assert_eq!(m["status"], "invalid_config");
    assert_eq!(m["exit_code"], 1);
    assert_eq!(m["diagnostics"][0]["code"], "invalid_config");
    assert!(m["diagnostics"][0]["message"].as_str().unwrap().contains("lambda"));
}

#[test]
fn unknown_keys_and_bad_input_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&hyperlab(&["spectrum", "--set", "spectrum.kmax=3", "--out", out])), 1);
    assert_eq!(code(&hyperlab(&["spectrum", "--set", "bogus=1", "--out", out])), 1);
    assert_eq!(code(&hyperlab(&["spectrum", "--workers", "0", "--out", out])), 1);
    assert_eq!(code(&hyperlab(&["spectrum", "--set", "model.n=3", "--out", out])), 1);
    assert_eq!(code(&hyperlab(&["spectrum", "--config", "/nonexistent.json", "--out", out])), 1);
    let cfg = dir.path().join("wrong_kind.json");
    std::fs::write(&cfg, r#"{"kind": "sweep"}"#).unwrap();
    assert_eq!(code(&hyperlab(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out])), 1);
    assert_eq!(code(&hyperlab(&["nonsense"])), 1);
    assert_eq!(code(&hyperlab(&["--help"])), 0);
}

#[test]
fn mourre_check_at_lambda_100() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hyperlab(&["mourre", "--check", "--set", "mourre.lambdas=[100]", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary = read_json(&dir.path().join("mourre/mourre.json"));
    let ratio = summary["min_eig_ratio"].as_f64().unwrap();
    assert!(ratio >= -0.1, "{ratio}");
    assert!(summary["results"][0]["min_eig_ratio"].is_number());
    assert!(body(&dir.path().join("mourre/mourre.csv")).starts_with("lambda,C,delta_lambda"));
}

#[test]
fn config_file_and_manifest_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"kind": "spectrum", "model": {"n": 3, "r0": 1.0, "cross_section": {"kind": "torus", "radii": [1.0, 2.0]}},
            "spectrum": {"k_max": 5}}"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let o = hyperlab(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = a.join("spectrum/manifest.json");
    let b = dir.path().join("b");
    let o = hyperlab(&["spectrum", "--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(body(&a.join("spectrum/spectrum.csv")), body(&b.join("spectrum/spectrum.csv")));
    let (ma, mb) = (read_json(&manifest), read_json(&b.join("spectrum/manifest.json")));
    let strip = |mut v: Value| {
        v["out"] = Value::Null;
        v
    };
    assert_eq!(strip(ma["config"].clone()), strip(mb["config"].clone()));
    assert!(body(&a.join("spectrum/spectrum.csv")).lines().count() == 7);
}

#[test]
fn report_marks_absent_sections() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&hyperlab(&["report", "--out", out])), 1);
    assert_eq!(code(&hyperlab(&["spectrum", "--out", out])), 0);
    assert_eq!(code(&hyperlab(&["report", "--out", out])), 0);
    let md = body(&dir.path().join("report.md"));
    assert!(md.contains("| spectrum | Ok |"));
    assert!(md.contains("| sweep | absent |"));
    let sweep = md.split("## Scaling sweep").nth(1).unwrap();
    assert!(sweep.trim_start().starts_with("absent"));
    assert!(md.contains("| 10 | scaling | not evaluated |"));

    std::fs::create_dir(dir.path().join("flow")).unwrap();
    let o = hyperlab(&["report", "--out", out]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("incomplete run directory"));
}

#[test]
fn sweep_report_and_worker_independence() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str, out: &Path| {
        let o = hyperlab(&[
            "sweep",
            "--set",
            "sweep.k_max=4",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        body(&out.join("sweep/sweep.csv"))
    };
    let one = run("1", &dir.path().join("w1"));
    let three = run("3", &dir.path().join("w3"));
    assert_eq!(one, three);
    assert!(one.starts_with("lambda,k,mu,eps,norm,converged\n"));
    let first = one.lines().nth(1).unwrap();
    let mantissa = first.split(',').next().unwrap().split('e').next().unwrap();
    assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);

    let out = dir.path().join("w1");
    assert_eq!(code(&hyperlab(&["report", "--out", out.to_str().unwrap()])), 0);
    let md = body(&out.join("report.md"));
    for needle in ["p = ", "q = ", "C' = ", "verdict: holds"] {
        assert!(md.contains(needle), "{needle} missing in\n{md}");
    }
    let plot = body(&out.join("plots/n_lambda.dat"));
    assert_eq!(plot.lines().count(), 5);
    assert!(plot.lines().all(|l| l.split(' ').count() == 2));
    let summary = read_json(&out.join("sweep/sweep.json"));
    assert!(summary["fit"]["p"].is_number() && summary["fit"]["Cprime"].is_number());
}

#[test]
fn testbed_report_has_empty_violations_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hyperlab(&[
        "testbed",
        "--check",
        "--set",
        "testbed.count=4",
        "--set",
        "testbed.easytrick=null",
        "--seed",
        "7",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let summary = read_json(&dir.path().join("testbed/testbed.json"));
    assert_eq!(summary["suites"]["identity"]["seeds"], json!([7, 8, 9, 10]));
    assert!(summary["easytrick"].is_null());
    assert_eq!(code(&hyperlab(&["report", "--out", out])), 0);
    let md = body(&dir.path().join("report.md"));
    let table = md.split("## Testbed violations").nth(1).unwrap();
    assert!(table.contains("| (none) | | 0 |"), "{table}");
}

#[test]
fn check_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = hyperlab(&["weights", "--check", "--set", "weights.exponent_tol=0.001", "--out", out]);
    assert_eq!(code(&o), 3);
    let m = read_json(&dir.path().join("weights/manifest.json"));
    assert_eq!(m["status"], "check_failed");
    assert_eq!(code(&hyperlab(&["weights", "--set", "weights.exponent_tol=0.001", "--out", out])), 0);
}

#[test]
fn set_paths_and_merge() {
    let mut v = json!({"a": {"b": 1, "list": [1, 2]}, "tag": {"kind": "circle", "radius": 1.0}});
    apply_set(&mut v, "a.b=2.5").unwrap();
    apply_set(&mut v, "a.list.1=7").unwrap();
    apply_set(&mut v, "a.new.deep=true").unwrap();
    apply_set(&mut v, "name=plain text").unwrap();
    assert_eq!(v["a"]["b"], 2.5);
    assert_eq!(v["a"]["list"], json!([1, 7]));
    assert_eq!(v["a"]["new"]["deep"], true);
    assert_eq!(v["name"], "plain text");
    assert!(apply_set(&mut v, "a.list.9=1").is_err());
    assert!(apply_set(&mut v, "novalue").is_err());

    merge(&mut v, json!({"tag": {"kind": "torus", "radii": [1.0]}}));
    assert_eq!(v["tag"], json!({"kind": "torus", "radii": [1.0]}));
    merge(&mut v, json!({"tag": {"radii": [2.0]}}));
    assert_eq!(v["tag"], json!({"kind": "torus", "radii": [2.0]}));
}

#[test]
fn resolve_applies_flags_last() {
    let ov = Overrides {
        set: vec!["workers=3".into(), "seed=4".into()],
        workers: Some(2),
        ..Default::default()
    };
    let cfg = resolve(Kind::Testbed, &ov).unwrap();
    assert_eq!((cfg.workers, cfg.seed), (2, 4));
    assert!(resolve(Kind::Testbed, &Overrides { set: vec!["kind=sweep".into()], ..Default::default() }).is_err());
    assert!(resolve(Kind::Testbed, &Overrides { set: vec!["testbed.s=0.5".into()], ..Default::default() }).is_err());
}
