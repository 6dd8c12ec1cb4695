use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jsgap::dist::rat;
use jsgap::ewrm::ExampleProblem;
use jsgap::info::js_alpha;
use serde_json::Value;

fn jsgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsgap")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// `quantity,value` output as a map.
fn quantities(text: &str) -> BTreeMap<String, String> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,value"));
    lines.map(|l| {
        let (k, v) = l.split_once(',').unwrap();
        (k.to_string(), v.to_string())
    })
    .collect()
}

/// Data rows of a CSV, skipping comment lines and the header.
fn rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let data = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, data)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn divergence_of_identical_laws_is_zero() {
    let d = "atoms=[0,1]; probs=[1/4,3/4]";
    let q = quantities(&stdout(&jsgap(&["divergence", "--source", d, "--target", d])));
    for key in ["kl_source_target", "kl_target_source", "total_variation", "js_alpha"] {
        assert_eq!(q[key], "0.0", "{key}");
    }
}

#[test]
fn divergence_on_default_alphabets() {
    let q = quantities(&stdout(&jsgap(&["divergence", "--alpha1", "0.1", "--alpha2", "0.2"])));
    assert_eq!(q["kl_source_target"], "inf");
    assert_eq!(q["kl_target_source"], "inf");
    let prob = ExampleProblem::two_point(rat(12, 25), rat(3, 10), 30, rat(2, 3), rat(3, 10)).unwrap();
    let lib = js_alpha(prob.target(), prob.source(), &rat(1, 10), &rat(1, 5)).unwrap();
    assert_eq!(num(&q["js_alpha"]), lib);
}

#[test]
fn malformed_input_exits_2() {
    let out = jsgap(&["divergence", "--source", "atoms=[0,1]; probs=[1/2,1/3]"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(jsgap(&["divergence", "--alpha1", "abc"]).status.code(), Some(2));
    assert_eq!(jsgap(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(jsgap(&["bound", "--beta", "1", "--gamma", "1/2"]).status.code(), Some(2));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# run\nalpha1 = 1/10\nalpha2 = 1/5\nformat = json\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();
    let v: Value = serde_json::from_str(&stdout(&jsgap(&["--config", cfg_s, "divergence", "--alpha2", "0.5"]))).unwrap();
    assert_eq!(v["alpha1"], 0.1);
    assert_eq!(v["alpha2"], 0.5);

    fs::write(&cfg, "alpha = 1/10\n").unwrap();
    let out = jsgap(&["--config", cfg_s, "divergence"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn bound_reports_validity_and_baseline() {
    let q = quantities(&stdout(&jsgap(&["bound"])));
    assert_eq!(q["gap_bound_holds"], "true");
    assert_eq!(q["excess_bound_holds"], "true");
    assert!(num(&q["gap_bound.total"]) >= num(&q["exact_gap.exact_gap"]));

    let q = quantities(&stdout(&jsgap(&["bound", "--beta", "1", "--m", "20"])));
    assert!(num(&q["gap_bound.total"]) <= num(&q["phi_baseline"]));
    assert_eq!(q["mutual_information.target"], "0.0");

    let q = quantities(&stdout(&jsgap(&["bound", "--envelope", "sub-gamma", "--c", "1/2", "--alpha1", "0.1"])));
    assert!(num(&q["subgamma.numeric.total"]) <= num(&q["subgamma.printed.total"]));
    assert_eq!(q["subgamma.disagreement"], "true");
}

#[test]
fn fig1_matched_laws_gap_is_two_nu_over_m() {
    // source moved onto the target alphabet with the same probability
    let text = stdout(&jsgap(&[
        "reproduce-fig1",
        "--source-atoms",
        "1,2",
        "--p-s",
        "12/25",
        "--p-t-grid",
        "12/25",
        "--m-grid",
        "10:50:10",
    ]));
    let (header, data) = rows(&text);
    assert_eq!(header, ["p_t", "js_distance", "M", "exact_gap", "js_bound", "phi_bound"]);
    assert_eq!(data.len(), 5);
    let nu = 0.48 * 0.52;
    for r in &data {
        assert_eq!(r[1], "0.0");
        let m = num(&r[2]);
        assert!((num(&r[3]) - 2.0 * nu / m).abs() < 1e-15);
    }
}

#[test]
fn fig1_rows_and_ordering() {
    let text = stdout(&jsgap(&["reproduce-fig1", "--m-grid", "10:60:10"]));
    assert!(!text.contains('\r'));
    let (_, data) = rows(&text);
    assert_eq!(data.len(), 18);
    assert_eq!(data[0][0], "0.9");
    assert_eq!(data[6][0], "0.6");
    for r in &data {
        assert!(num(&r[4]) <= num(&r[5]), "js bound above baseline: {r:?}");
    }
    for block in data.chunks(6) {
        assert!(block.windows(2).all(|w| num(&w[1][3]) <= num(&w[0][3])));
    }
    assert_eq!(jsgap(&["reproduce-fig1", "--m-grid", ""]).status.code(), Some(2));
}

fn sweep_to(dir: &Path, name: &str, args: &[&str]) -> (String, Value) {
    let out = dir.join(name);
    let mut full = vec!["reproduce-fig2", "--output", out.to_str().unwrap()];
    full.extend_from_slice(args);
    let o = jsgap(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let csv = fs::read_to_string(&out).unwrap();
    let summary = fs::read_to_string(dir.join(format!("{name}.summary.json"))).unwrap();
    (csv, serde_json::from_str(&summary).unwrap())
}

#[test]
fn fig2_matched_laws_and_argmin_rescan() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, summary) =
        sweep_to(dir.path(), "same.csv", &["--source-atoms", "1,2", "--p-s", "0.3", "--p-t", "0.3"]);
    assert!(csv.starts_with("# p_s=3/10 p_t=3/10 M=30"));
    let (_, data) = rows(&csv);
    assert_eq!(data.len(), 95);

    let mi_s = summary["mutual_information"]["source"].as_f64().unwrap();
    let mi_t = summary["mutual_information"]["target"].as_f64().unwrap();
    for r in &data {
        let a2 = num(&r[1]);
        let hat = 1.0 / a2 + 1.0 / (1.0 - a2);
        let source = 2.0 * (2.0 * hat).sqrt() * ((1.0 - a2) * mi_s).sqrt();
        let target = 4.0 * mi_t.sqrt();
        assert!((num(&r[3]) - source).abs() < 1e-12);
        assert!((num(&r[4]) - target).abs() < 1e-12);
    }
    let best = data.iter().min_by(|a, b| num(&a[2]).total_cmp(&num(&b[2]))).unwrap();
    assert_eq!(summary["argmin"]["alpha1"].as_f64().unwrap(), num(&best[0]));
    assert_eq!(summary["argmin"]["alpha2"].as_f64().unwrap(), num(&best[1]));
}

#[test]
fn fig2_single_point_and_bad_grid() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, summary) = sweep_to(dir.path(), "one.csv", &["--alpha1-grid", "0.1", "--alpha2-grid", "0.2"]);
    let (_, data) = rows(&csv);
    assert_eq!(data.len(), 1);
    assert_eq!(summary["argmin"]["alpha2"], 0.2);
    assert_eq!(summary["argmin"]["bound_total"].as_f64().unwrap(), num(&data[0][2]));

    let out = dir.path().join("bad.csv");
    let o = jsgap(&["reproduce-fig2", "--alpha2-grid", "0:0.5:0.1", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn fig2_default_summary_on_stderr() {
    let o = jsgap(&["reproduce-fig2"]);
    let summary: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(summary["argmin"]["alpha1"], 0.1);
    assert!(summary["curves"].as_array().unwrap().iter().all(|c| c["interior"] == true));
    assert!(stdout(&o).starts_with("# p_s=12/25 p_t=3/10 (default)"));
}

#[test]
fn validate_enumerate_passes() {
    let o = jsgap(&["validate", "--p-s-grid", "0.1,0.48", "--p-t-grid", "0.3", "--m-grid", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["n_configs"], 18);
    for c in v["configs"].as_array().unwrap() {
        assert!(c["gap"]["abs_diff"].as_f64().unwrap() <= 1e-10);
    }
}

#[test]
fn validate_mc_is_reproducible() {
    let args = ["validate", "--mode", "mc", "--n-samples", "20000", "--seed", "9", "--format", "json"];
    let a = stdout(&jsgap(&args));
    let b = stdout(&jsgap(&args));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["seed"], 9);
    assert!(v["configs"][0]["gap"]["z_score"].is_number());
}

#[test]
fn validate_rejects_zero_variance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = jsgap(&["validate", "--sigma2", "0", "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma2"));
    assert!(!out.exists());
}

#[test]
fn json_format_for_tables() {
    let text = stdout(&jsgap(&["reproduce-fig1", "--m-grid", "10", "--format", "json"]));
    let v: Value = serde_json::from_str(&text).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["M"], 10);
}
