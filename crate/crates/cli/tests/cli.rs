use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ipwband::band::critical_constants;
use ipwband::io::write_sample_csv;
use ipwband::kernel::quartic_kernel;
use ipwband::numeric::round_sig;
use ipwband::regress::{observed_range, FitConfig, DEFAULT_RHO};
use ipwband::sample::{ObservedSample, Record};
use ipwband::sim::{generate, Case, Mechanism, Scenario};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ipwband"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn ipwband")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_sample(dir: &Path, name: &str, sample: &ObservedSample) -> PathBuf {
    let path = dir.join(name);
    let mut buf = Vec::new();
    write_sample_csv(sample, &mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    path
}

fn case1_sample() -> ObservedSample {
    let scenario = Scenario::new(Case::Case1, Mechanism::Logit, [1.8, 1.0], 400).with_replications(1);
    generate(&scenario, 0).unwrap()
}

/// Exact line y = 1 - 0.5x, missingness depending on y deterministically.
fn affine_sample() -> ObservedSample {
    let records = (0..300)
        .map(|i| {
            let x = -1.0 + 2.0 * ((i * 37) % 300) as f64 / 299.0;
            let y = 1.0 - 0.5 * x;
            if i % 4 == 0 || (y > 1.3 && i % 3 == 0) {
                Record::missing(y)
            } else {
                Record::complete(x, y)
            }
        })
        .collect();
    ObservedSample::new(records).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn case1_defaults_produce_full_grid_and_consistent_constants() {
    let dir = tempfile::tempdir().unwrap();
    let sample = case1_sample();
    let input = write_sample(dir.path(), "case1.csv", &sample);
    let out = run(&["band", "-i", input.to_str().unwrap(), "--alpha", "0.05,0.01"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["schema_version"], 1);
    let bands = json["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 2);
    for b in bands {
        assert_eq!(b["rows"].as_array().unwrap().len(), 401);
    }

    let (config, _) = FitConfig::recommended(&sample, quartic_kernel(), DEFAULT_RHO).unwrap();
    let interval = observed_range(&sample).unwrap();
    let c = critical_constants(config.h, interval.a0, interval.b0, &quartic_kernel()).unwrap();
    let a_h = num(&json["constants"]["a_h"]);
    let b_h = num(&json["constants"]["b_h"]);
    assert!((a_h - round_sig(c.a_h, 12)).abs() <= 1e-12 * a_h.abs());
    assert!((b_h - round_sig(c.b_h, 12)).abs() <= 1e-12 * b_h.abs());
    assert_eq!(num(&json["constants"]["h"]), round_sig(config.h, 12));
}

#[test]
fn json_and_csv_carry_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), "case1.csv", &case1_sample());
    let input = input.to_str().unwrap();
    let json: Value = serde_json::from_str(&stdout(&run(&["band", "-i", input]))).unwrap();
    let csv = stdout(&run(&["band", "-i", input, "--format", "csv"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("level,x,m_hat,lower,upper,d_hat"));
    let rows = json["bands"][0]["rows"].as_array().unwrap();
    let mut count = 0;
    for (line, row) in lines.zip(rows) {
        let cells: Vec<&str> = line.split(',').collect();
        for (cell, key) in cells[1..].iter().zip(["x", "m_hat", "lower", "upper", "d_hat"]) {
            match row[key].as_f64() {
                Some(v) => assert_eq!(cell.parse::<f64>().unwrap(), v, "{key}"),
                None => assert!(cell.is_empty()),
            }
        }
        count += 1;
    }
    assert_eq!(count, 401);
}

#[test]
fn zero_noise_affine_input_passes_linear_null() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), "affine.csv", &affine_sample());
    let out = run(&["test", "-i", input.to_str().unwrap(), "--null", "linear"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let t = &json["null_test"];
    assert!(num(&t["pvalue"]) > 0.99);
    assert!(num(&t["min_cover_level"]) < 0.01);
    assert!((num(&t["intercept"]) - 1.0).abs() < 1e-9);
    assert!((num(&t["slope"]) + 0.5).abs() < 1e-9);
}

#[test]
fn external_null_curve_rejects_wrong_curve() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_sample(dir.path(), "case1.csv", &case1_sample());
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "x,value\n-1,0\n1,0\n").unwrap();
    let out = run(&["test", "-i", input.to_str().unwrap(), "--null", flat.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["null_test"]["kind"], "external");
    assert!(num(&json["null_test"]["pvalue"]) < 1e-3);

    let short = dir.path().join("short.csv");
    fs::write(&short, "x,value\n0,0\n1,0\n").unwrap();
    let out = run(&["test", "-i", input.to_str().unwrap(), "--null", short.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes_follow_error_category() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "delta,x,y\n1,0.5,1.2\n1,,0.5\n").unwrap();
    let out = run(&["fit", "-i", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let tiny = dir.path().join("tiny.csv");
    fs::write(&tiny, "delta,x,y\n1,0.5,1.2\n0,,0.7\n1,-0.3,0.1\n").unwrap();
    assert_eq!(run(&["fit", "-i", tiny.to_str().unwrap()]).status.code(), Some(3));

    // fit succeeds but every window is empty beyond the two clusters
    let mut rows = String::from("delta,x,y\n");
    for i in 0..60 {
        let y = i as f64 / 10.0;
        match i % 3 {
            0 => rows.push_str(&format!("0,,{y}\n")),
            1 => rows.push_str(&format!("1,{},{y}\n", -1.0 + 1e-4 * i as f64)),
            _ => rows.push_str(&format!("1,{},{y}\n", 1.0 - 1e-4 * i as f64)),
        }
    }
    let gap = dir.path().join("gap.csv");
    fs::write(&gap, rows).unwrap();
    assert_eq!(run(&["fit", "-i", gap.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(run(&["band", "-i", gap.to_str().unwrap()]).status.code(), Some(4));

    assert_eq!(run(&["fit", "-i", dir.path().join("absent.csv").to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn warning_for_discarded_covariate() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("delta,x,y\n0,0.3,1.0\n");
    for i in 0..40 {
        let y = (i as f64 * 0.7).sin();
        if i % 3 == 0 {
            text.push_str(&format!("0,,{y}\n"));
        } else {
            text.push_str(&format!("1,{},{y}\n", i as f64 / 40.0));
        }
    }
    let p = dir.path().join("w.csv");
    fs::write(&p, text).unwrap();
    let out = run(&["fit", "-i", p.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert!(stdout(&out).contains("n_complete,26"));
}

#[test]
fn constants_report_kernel_functionals() {
    let out = run(&["constants"]);
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((num(&json["lambda"]) - 5.0 / 7.0).abs() < 1e-11);
    assert_eq!(num(&json["cee"]), 3.0);
    assert!((num(&json["mu2"]) - 1.0 / 7.0).abs() < 1e-11);
    let q = json["q_alpha"].as_array().unwrap();
    assert_eq!(num(&q[0][0]), 0.05);
    assert!((num(&q[0][1]) + (-0.5 * 0.95f64.ln()).ln()).abs() < 1e-10);
}

const TWO_REP: &str = r#"
replications = 2
seed = 11
alpha_levels = [0.05]

[[scenario]]
case = "case2"
mechanism = "probit"
params = [1.0, 0.5]
n = 200
"#;

#[test]
fn simulate_two_replications_and_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    fs::write(&cfg, TWO_REP).unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = run(&["simulate", cfg.to_str().unwrap(), "--output-dir", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<Vec<u8>> = ["table.csv", "table.md", "scenario_01.json"]
            .iter()
            .map(|f| fs::read(out_dir.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
    let report: Value = serde_json::from_slice(&outputs[0][2]).unwrap();
    assert_eq!(report["used"].as_u64().unwrap() + report["failures"].as_u64().unwrap(), 2);
    assert_eq!(report["scenario"]["replications"], 2);
    let table = String::from_utf8(outputs[0][0].clone()).unwrap();
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, TWO_REP.replace("probit", "cauchit").replace("n = 200", "n = 200\nbandwidth = 0.3")).unwrap();
    let out = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bandwidth"));

    fs::write(&cfg, TWO_REP.replace("probit", "cauchit")).unwrap();
    let out = run(&["simulate", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cauchit"));
}

#[test]
fn shipped_grid_config_runs() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/logit-grid.toml");
    let out = run(&["simulate", cfg.to_str().unwrap(), "--replications", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    // 4 cases x 3 sizes x 2 levels
    assert_eq!(table.lines().count(), 1 + 24);
    assert!(table.lines().skip(1).all(|l| l.ends_with(",2,0")));
}
