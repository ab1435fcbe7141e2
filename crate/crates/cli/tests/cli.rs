use std::collections::HashMap;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adx-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// CSV rows as column maps.
fn rows(o: &Output) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {}", row[key]))
}

#[test]
fn drf_examples() {
    let o = run(&["drf", "--psd", "flat:W=0.5", "--rate", "1"]);
    assert!(o.status.success());
    assert!((num(&rows(&o)[0], "distortion") - 0.25).abs() < 1e-12);

    let o = run(&["drf", "--psd", "tri:W=0.5", "--rate", "0"]);
    assert!((num(&rows(&o)[0], "distortion") - 1.0).abs() < 1e-9);
    assert_eq!(num(&rows(&o)[0], "f_r").to_bits(), 0f64.to_bits());

    // water-filling root for the Ornstein-Uhlenbeck spectrum at R = 1
    let o = run(&["drf", "--psd", "ou:f0=1", "--rate", "1"]);
    assert!((num(&rows(&o)[0], "f_r") - 1.42581).abs() < 1e-4);
}

#[test]
fn critical_columns_for_ou() {
    let o = run(&["critical", "--psd", "ou:f0=1", "--rate", "log:0.25:8:6"]);
    assert!(o.status.success());
    let rows = rows(&o);
    assert_eq!(rows.len(), 6);
    for r in &rows {
        assert!((num(r, "f_r") / num(r, "f_r_corrected") - 1.0).abs() < 1e-3);
    }
    let o = run(&["critical", "--psd", "flat:W=0.5", "--rate", "1"]);
    assert!(!stdout(&o).contains("f_r_closed_form"));
}

#[test]
fn adx_modes() {
    let o = run(&["adx", "--psd", "flat:W=0.5", "--rate", "1", "--fs", "0.5", "--filter", "lpf"]);
    assert!((num(&rows(&o)[0], "total") - 0.53125).abs() < 1e-9);
    let o = run(&["adx", "--psd", "flat:W=0.5", "--rate", "1", "--fs", "1.5", "--filter", "allpass"]);
    assert!((num(&rows(&o)[0], "total") - 0.25).abs() < 1e-9);

    let o = run(&["adx", "--psd", "bimodal", "--rate", "1", "--fs", "0.4", "--filter", "branches:5"]);
    let r = &rows(&o)[0];
    assert_eq!(r["branches"], "4");
    assert!((num(r, "total") - num(r, "bound")).abs() < 1e-4);
    let o = run(&["adx", "--psd", "bimodal", "--rate", "1", "--fs", "0.4", "--filter", "optimal"]);
    let r = &rows(&o)[0];
    assert!(num(r, "total") > num(r, "bound") + 1e-3);

    let o = run(&["adx", "--psd", "flat:W=0.5", "--rate", "1", "--fs", "1", "--noise", "flat:W=0.5", "--filter", "allpass"]);
    assert!((num(&rows(&o)[0], "total") - 0.625).abs() < 1e-9);
}

#[test]
fn pcm_examples() {
    let o = run(&["pcm", "--psd", "flat:W=0.5", "--rate", "1", "--optimum"]);
    let r = &rows(&o)[0];
    assert!((num(r, "f_s") - 1.0).abs() <= num(r, "grid_step"));
    let o = run(&["pcm", "--psd", "tri:W=0.5", "--rate", "1", "--optimum"]);
    let r = &rows(&o)[0];
    assert!(1.0 - num(r, "f_s") >= 5.0 * num(r, "grid_step"));
    // vanishing rate: everything passed is lost to quantization
    let o = run(&["pcm", "--psd", "tri:W=0.5", "--rate", "1e-9", "--fs", "0.01:1:5"]);
    for r in rows(&o) {
        assert!(num(&r, "total") > 0.99);
    }
    let o = run(&["pcm", "--psd", "flat:W=0.5", "--rate", "1", "--fs", "0.5", "--cq", "entropy"]);
    assert!((num(&rows(&o)[0], "total") - 0.5445).abs() < 1e-4);
}

#[test]
fn csv_and_json_carry_identical_values() {
    for args in [
        vec!["adx", "--psd", "tri:W=0.5", "--rate", "2", "--fs", "log:0.05:1.5:9", "--filter", "optimal"],
        vec!["drf", "--psd", "ou:f0=2", "--rate", "0:4:5"],
        vec!["simulate", "--psd", "flat:W=0.5", "--fs", "0.5", "--trials", "8", "--seed", "5"],
    ] {
        let csv_out = run(&args);
        let mut json_args = args.clone();
        json_args.push("--json");
        let json_out = run(&json_args);
        assert!(csv_out.status.success() && json_out.status.success());
        let doc: serde_json::Value = serde_json::from_slice(&json_out.stdout).unwrap();
        assert_eq!(doc["schema"], "adx-lab.v1");
        let records = doc["records"].as_array().unwrap();
        let table = rows(&csv_out);
        assert_eq!(records.len(), table.len());
        for (row, rec) in table.iter().zip(records) {
            let fields = rec.as_object().unwrap().iter().chain(doc["meta"].as_object().unwrap());
            let mut n = 0;
            for (k, v) in fields {
                let cell = &row[k];
                match v {
                    serde_json::Value::Number(x) => {
                        assert_eq!(cell.parse::<f64>().unwrap().to_bits(), x.as_f64().unwrap().to_bits(), "{k}")
                    }
                    serde_json::Value::String(s) => assert_eq!(cell, s),
                    serde_json::Value::Bool(b) => assert_eq!(cell, &b.to_string()),
                    other => panic!("unexpected {other}"),
                }
                n += 1;
            }
            assert_eq!(n, row.len());
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let args = ["simulate", "--psd", "tri:W=0.5", "--fs", "1", "--trials", "6", "--seed", "11", "--quantizer", "entropy"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--psd", "tri:W=0.5", "--fs", "1", "--trials", "6", "--seed", "12", "--quantizer", "entropy"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn exit_codes() {
    let bad = [
        vec!["drf", "--psd", "square:W=1"],
        vec!["drf", "--psd", "flat:W=0.5", "--rate", "1:2"],
        vec!["adx", "--psd", "flat:W=0.5", "--rate", "1", "--fs", "1", "--filter", "bandpass"],
        vec!["pcm", "--psd", "flat:W=0.5", "--rate", "-1"],
        vec!["simulate", "--psd", "flat:W=0.5", "--fs", "0.3", "--trials", "2"],
        vec!["frobnicate"],
    ];
    for args in bad {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let help = stdout(&run(&["adx", "--help"]));
    assert!(help.contains("Columns:"));
}

#[test]
fn piecewise_from_file() {
    let dir = std::env::temp_dir().join(format!("adx-lab-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("flat.psd");
    std::fs::write(&path, "psd-piecewise v1\n0 1\n0.5 1\n").unwrap();
    let spec = format!("piecewise:file={}", path.display());
    let o = run(&["drf", "--psd", &spec, "--rate", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = num(&rows(&o)[0], "distortion");
    std::fs::remove_dir_all(&dir).unwrap();
    assert!(d > 0.2 && d < 0.3, "{d}");
}
