use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tracedist"));
    c.env_remove("TRACEDIST_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Kl_2 table mod 101 and its H = 5 ensemble.
fn kl2_files(dir: &Path) -> (PathBuf, PathBuf) {
    let table = dir.join("table.csv");
    let ens = dir.join("ensemble.csv");
    let o = run(&[
        "trace",
        "gen",
        "--family",
        "kloosterman",
        "--n",
        "2",
        "--p",
        "101",
        "--out",
        s(&table),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["sums", "--table", s(&table), "--H", "5", "--out", s(&ens)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (table, ens)
}

#[test]
fn field_info_reports_the_field() {
    let o = run(&["field-info", "--p", "3", "--e", "2"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["q"], 9);
    assert_eq!(v["modulus"], "X^2+1");
    assert!(v["generator"].as_u64().unwrap() < 9);
    let o = run(&["field-info", "--p", "4"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn table_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (table, _) = kl2_files(dir.path());
    let text = std::fs::read_to_string(&table).unwrap();
    for key in [
        "# tool: tracedist",
        "# version: ",
        "# config_hash: ",
        "# seed: none",
        "# threads: ",
        "# family: kloosterman(n=2)",
    ] {
        assert!(text.contains(key), "missing {key}");
    }
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "x_index,re,im,is_singular");
    assert_eq!(body.len(), 102);
    assert!(body[1].starts_with("0,") && body[1].ends_with(",true"));
    assert!(body[2].ends_with(",false"));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ta, ea) = kl2_files(a.path());
    let (tb, eb) = kl2_files(b.path());
    assert_eq!(std::fs::read(ta).unwrap(), std::fs::read(tb).unwrap());
    assert_eq!(std::fs::read(ea).unwrap(), std::fs::read(eb).unwrap());
}

#[test]
fn gof_report_from_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let (_, ens) = kl2_files(dir.path());
    let text = std::fs::read_to_string(&ens).unwrap();
    assert!(text.lines().any(|l| l == "x_index,re,im"));
    assert!(text.contains("# offsets: interval:5"));
    let out = dir.path().join("report.json");
    let o = run(&[
        "gof",
        "--ensemble",
        s(&ens),
        "--moment-order",
        "3",
        "--hist-bins",
        "8",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    let r = &v["result"];
    assert_eq!(r["H"], 5);
    assert_eq!(r["q"], 101);
    assert_eq!(r["group"], "sp:2");
    assert_eq!(r["self_dual"], true);
    assert_eq!(r["moment_rows"].as_array().unwrap().len(), 10);
    assert_eq!(r["histogram"]["bins"].as_array().unwrap().len(), 8);
    assert!(r["ks_real"].as_f64().unwrap() < 1.0);
    assert!(r["max_abs_imag"].as_f64().unwrap() < 1e-9);
    assert_eq!(
        r["covariance_target"],
        serde_json::json!([[1.0, 0.0], [0.0, 0.0]])
    );
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn exclude_singular_zeroes_flagged_values() {
    let dir = tempfile::tempdir().unwrap();
    let (table, _) = kl2_files(dir.path());
    let ens = dir.path().join("e.csv");
    let o = run(&[
        "sums",
        "--table",
        s(&table),
        "--offsets",
        "explicit:0",
        "--exclude-singular",
        "--out",
        s(&ens),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&ens).unwrap();
    let first = text.lines().find(|l| l.starts_with("0,")).unwrap();
    assert_eq!(first, "0,0.0,0.0");
}

#[test]
fn moments_rows() {
    let o = run(&["moments", "rmt", "--group", "sl:3", "--kmax", "8"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 45);
    let find = |k: u64, r: u64| rows.iter().find(|x| x["k"] == k && x["r"] == r).unwrap();
    assert_eq!(find(2, 2)["exact"], "2");
    assert_eq!(find(3, 3)["exact"], "6");
    assert_eq!(find(3, 0)["exact"], "1");
    assert_eq!(find(2, 1)["exact"], "0");
    for key in [
        "group",
        "k",
        "r",
        "H",
        "exact",
        "normalized",
        "gaussian",
        "defect",
    ] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }

    let o = run(&[
        "moments", "model", "--group", "sp:2", "--k", "2", "--r", "2", "--H", "1000",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let row = &v["result"]["rows"][0];
    assert_eq!(row["exact"], "2999000");
    assert!((row["normalized"].as_f64().unwrap() - 2.999).abs() < 1e-12);
    assert_eq!(row["gaussian"], 3.0);

    let o = run(&["moments", "gaussian", "--kmax", "4"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows
        .iter()
        .any(|x| x["k"] == 2 && x["r"] == 2 && x["gaussian"] == 2.0));
}

#[test]
fn empirical_moments_of_an_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let (_, ens) = kl2_files(dir.path());
    let o = run(&["moments", "empirical", "--ensemble", s(&ens), "--kmax", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0]["normalized"], 1.0);
    assert_eq!(rows[0]["H"], 5);
}

#[test]
fn verify_commands() {
    let dir = tempfile::tempdir().unwrap();
    let (table, _) = kl2_files(dir.path());
    let o = run(&["verify", "weil", "--table", s(&table)]);
    assert_eq!(code(&o), 0);

    let args = [
        "verify",
        "sumproduct",
        "--table",
        s(&table),
        "--shifts",
        "1,4",
        "--k",
        "2,1",
        "--r",
        "0,1",
    ];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["report"]["rhs"], "1");
    // a zero tolerance turns any rounding gap into an assertion failure
    let mut strict = args.to_vec();
    strict.extend(["--tolerance", "0"]);
    assert_eq!(code(&run(&strict)), 2);

    let o = run(&[
        "verify", "bounds", "--group", "sl:3", "--N", "2", "--H", "10",
    ]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(code(&o), if v["result"]["pass"] == true { 0 } else { 2 });
}

#[test]
fn verify_rmt_passes_for_su2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("verify.json");
    let o = run(&[
        "verify",
        "rmt",
        "--groups",
        "sl:2,so:3",
        "--kmax",
        "4",
        "--samples",
        "20000",
        "--seed",
        "42",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["result"]["pass"], true);
    assert!(!v["result"]["rows"].as_array().unwrap().is_empty());
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn minimal_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let cfg = format!(
        r#"{{"field": {{"p": 101}}, "family": "kloosterman(n=2)", "offsets": "interval:5",
            "gof": {{"moment_order": 4}}, "persist": {{"table": {:?}}}}}"#,
        s(&table)
    );
    let cfg = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("r.json");
    let t = Instant::now();
    let o = run(&["pipeline", "--config", s(&cfg), "--out", s(&out)]);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_file(&out);
    assert_eq!(
        v["result"]["gof"]["moment_rows"].as_array().unwrap().len(),
        15
    );
    assert_eq!(v["result"]["pass"], true);
    assert!(v["config"].get("persist").is_none());
    assert!(table.exists());
}

#[test]
fn pipeline_rejects_incompatible_offsets() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"field": {"p": 101}, "family": "kummer(chi=1/2;f=X^2+1)", "offsets": "interval:5"}"#,
    );
    let o = run(&["pipeline", "--config", s(&cfg)]);
    assert_eq!(code(&o), 3);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "incompatible");
    assert_eq!(err["error"]["max_terms"], 2);

    let cfg = write_config(
        dir.path(),
        "ok.json",
        r#"{"field": {"p": 101}, "family": "kummer(chi=1/2;f=X^2+1)", "offsets": "explicit:1,2,3"}"#,
    );
    assert_eq!(code(&run(&["pipeline", "--config", s(&cfg)])), 0);
}

#[test]
fn pipeline_assertion_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"field": {"p": 101}, "family": "kloosterman(n=2)", "offsets": "interval:5", "assertions": {"ks_max": 0.0}}"#,
    );
    let o = run(&["pipeline", "--config", s(&cfg)]);
    assert_eq!(code(&o), 2);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["pass"], false);
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(code(&run(&["nonsense"])), 3);
    assert_eq!(code(&run(&["sums", "--table", "x.csv"])), 3);
    assert_eq!(
        code(&run(&["moments", "rmt", "--group", "sl:1", "--kmax", "2"])),
        3
    );
    assert_eq!(
        code(&run(&[
            "verify",
            "weil",
            "--table",
            "/nonexistent/table.csv"
        ])),
        3
    );
    assert_eq!(
        code(&run(&[
            "trace",
            "gen",
            "--p",
            "101",
            "--family",
            "custom(x)"
        ])),
        3
    );
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn threads_are_recorded() {
    let o = bin()
        .args(["moments", "gaussian", "--kmax", "1"])
        .env("TRACEDIST_THREADS", "3")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["threads"], 3);
    let o = run(&["--threads", "2", "moments", "gaussian", "--kmax", "1"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["threads"], 2);
    assert_eq!(
        code(&run(&[
            "--threads",
            "0",
            "moments",
            "gaussian",
            "--kmax",
            "1"
        ])),
        3
    );
}

#[test]
fn repro_figures_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run(&["repro", "figures", "--outdir", s(a.path())]);
    let ob = run(&["repro", "figures", "--outdir", s(b.path())]);
    let summary = json_file(&a.path().join("summary.json"));
    let r = &summary["result"];
    assert_eq!(code(&oa), if r["pass"] == true { 0 } else { 2 });
    assert_eq!(code(&oa), code(&ob));
    let files = r["files"].as_array().unwrap();
    assert_eq!(files.len(), 7);
    for f in files {
        let f = f.as_str().unwrap();
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let checks = r["checks"].as_array().unwrap();
    let check = |name: &str| checks.iter().find(|c| c["name"] == name).unwrap()["pass"].clone();
    assert_eq!(check("fig1_H3_covariance"), true);
    assert_eq!(check("fig2_H100_imaginary"), true);
    assert_eq!(check("fig2_H1300_imaginary"), true);
    assert_eq!(check("fig2_H100_ks_below_H1"), true);

    let scatter = std::fs::read_to_string(a.path().join("fig1_H1000.csv")).unwrap();
    assert_eq!(
        scatter.lines().filter(|l| !l.starts_with('#')).count(),
        7928
    );
    let hist = std::fs::read_to_string(a.path().join("fig2_H1300_hist.csv")).unwrap();
    let body: Vec<&str> = hist.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "lo,hi,count,density,normal_density");
    assert_eq!(body.len(), 49);
}
