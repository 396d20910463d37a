use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specreg")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn assert_stderr(o: &Output) {
    assert!(!o.stderr.is_empty(), "nonzero exit without a message");
}

#[test]
fn classify_exit_codes() {
    let o = run(&["classify", "--filter", "tikhonov", "--order", "alpha"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["level"], "optimal");

    let o = run(&["classify", "--filter", "ex9", "--order", "exp(-1/sqrt(alpha))", "--require", "optimal"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["level"], "strong");

    let o = run(&["classify", "--filter", "tikhonov", "--order", "alpha^^"]);
    assert_eq!(code(&o), 2);
    assert_stderr(&o);
}

#[test]
fn input_errors_exit_two() {
    for args in [
        vec!["classify", "--filter", "nope", "--order", "alpha"],
        vec!["classify", "--order", "alpha"],
        vec!["classify", "--filter", "tikhonov", "--order", "1+alpha"],
        vec!["srho", "--filter", "tikhonov", "--order", "alpha", "--alpha-per-decade", "4"],
        vec!["converge", "--filter", "tikhonov", "--source", "lambda", "--dim", "600"],
        vec!["classify", "--filter", "tikhonov", "--order", "alpha", "--format", "csv"],
        vec!["classify", "--bogus"],
    ] {
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert_stderr(&o);
    }
}

#[test]
fn srho_table() {
    let o = run(&["srho", "--filter", "tikhonov", "--order", "alpha", "--lambda", "0.1,1,10"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    let entries = v["entries"].as_array().unwrap();
    for (e, want) in entries.iter().zip([0.1, 1.0, 10.0]) {
        let got = e["estimate"]["value"].as_f64().unwrap();
        assert!((got - want).abs() <= 0.01 * want, "{got} vs {want}");
        assert_eq!(e["stabilized"], true);
    }

    let o = run(&["srho", "--filter", "ex4", "--order", "-1/ln(alpha)", "--lambda", "1"]);
    let got = json(&o)["entries"][0]["estimate"]["value"].as_f64().unwrap();
    assert!((got - 0.5).abs() <= 0.005);

    let o = run(&["srho", "--filter", "tsvd", "--order", "alpha", "--lambda", "1", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,estimate,status,stabilized");
    assert!(lines.next().unwrap().split(',').nth(1) == Some("+inf"));
}

#[test]
fn classical_flags() {
    let o = run(&["classical", "--filter", "tikhonov"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!((v["low"].as_f64(), v["high"].as_f64()), (Some(1.0), Some(2.0)));
    assert_eq!((v["zero"].as_bool(), v["infinite"].as_bool()), (Some(false), Some(false)));
    assert_eq!(json(&run(&["classical", "--filter", "ex3"]))["infinite"], true);
    assert_eq!(json(&run(&["classical", "--filter", "ex4"]))["zero"], true);
}

#[test]
fn mp_check_verdicts() {
    let o = run(&["mp-check", "--filter", "showalter", "--order", "exp(-1/sqrt(alpha))"]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["passes"], false);

    let o = run(&["mp-check", "--filter", "tikhonov", "--order", "alpha"]);
    assert_eq!(code(&o), 0);
    assert!(json(&o)["gamma_or_witness"].to_string().contains("0.99"));

    let o = run(&[
        "mp-check",
        "--filter",
        "landweber",
        "--order",
        "(1-0.5*sqrt(alpha))^(1/alpha)",
        "--require",
        "weak",
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["holds"], true);
}

#[test]
fn construct_verdicts() {
    for f in ["showalter", "tikhonov"] {
        let o = run(&["construct", "--filter", f]);
        assert_eq!(code(&o), 0, "{f}");
        assert_eq!(json(&o)["certificate"]["holds"], true);
    }
    let o = run(&["construct", "--filter", "ex8"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("hypothesis"));
}

#[test]
fn converge_slopes() {
    for (s, want) in [("lambda", 1.0), ("lambda^0.5", 0.5)] {
        let o = run(&["converge", "--filter", "tikhonov", "--source", s]);
        assert_eq!(code(&o), 0);
        let slope = json(&o)["fit"]["slope"].as_f64().unwrap();
        assert!((slope - want).abs() <= 0.05, "{s}: slope {slope}");
    }
}

#[test]
fn converge_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study.csv");
    let o = run(&[
        "converge",
        "--filter",
        "tikhonov",
        "--source",
        "lambda",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let fit = json(&o);
    assert!(fit["slope"].is_number());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("alpha,err,rho,ratio\n"));
}

#[test]
fn missing_model_path() {
    let o = run(&["converge", "--filter", "tikhonov", "--source", "lambda", "--model", "/nonexistent/a.csv"]);
    assert_eq!(code(&o), 2);
    assert_stderr(&o);
}

#[test]
fn csv_model_is_decomposed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let rows: Vec<String> = (1..=30)
        .map(|i| (1..=30).map(|j| if i == j { format!("{}", 1.0 / i as f64) } else { "0".into() }).collect::<Vec<_>>().join(","))
        .collect();
    std::fs::write(&path, rows.join("\n")).unwrap();
    let o = run(&["converge", "--filter", "tikhonov", "--source", "lambda", "--model", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["study"]["context"]["model"]["dim"], 30);
}

#[test]
fn outputs_are_byte_identical() {
    for args in [
        vec!["classify", "--filter", "ex3", "--order", "exp(-1/alpha)", "--seed", "5"],
        vec!["srho", "--filter", "ex8", "--order", "alpha", "--format", "csv"],
        vec!["converge", "--filter", "tikhonov", "--source", "lambda", "--format", "csv"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(code(&a), code(&b));
    }
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"filter": "tikhonov", "order": "alpha", "lambda": [2.0]}"#);
    let o = run(&["srho", "--config", &cfg]);
    assert_eq!(code(&o), 0);
    let got = json(&o)["entries"][0]["estimate"]["value"].as_f64().unwrap();
    assert!((got - 2.0).abs() < 0.02);

    let o = run(&["srho", "--config", &cfg, "--lambda", "5"]);
    let got = json(&o)["entries"][0]["lambda"].as_f64().unwrap();
    assert_eq!(got, 5.0);

    let o = run(&["srho", "--config", &cfg, "--filter", "ex3", "--order", "exp(-1/alpha)"]);
    let got = json(&o)["entries"][0]["estimate"]["value"].as_f64().unwrap();
    assert!((got - 2.0 / 3.0).abs() < 0.01);

    let bad = write_config(dir.path(), r#"{"filter": "tikhonov", "colour": 1}"#);
    let o = run(&["srho", "--config", &bad]);
    assert_eq!(code(&o), 2);
    assert_stderr(&o);
}

#[test]
fn params_override_family_defaults() {
    let o = run(&["classical", "--filter", "ex8", "--param", "k=0.5"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!((v["low"].as_f64(), v["high"].as_f64()), (Some(0.5), Some(1.0)));
    let o = run(&["classical", "--filter", "ex8", "--param", "k"]);
    assert_eq!(code(&o), 2);
}
