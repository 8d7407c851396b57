use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn normctl(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_normctl")).args(args).output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const GEOMETRIC: &str = r#"{"name": "geometric", "terms": [{"x": [0], "re": 1.0}, {"x": [1], "re": -0.5}]}"#;

fn z_config(weight: &str, elements: &[&str], extra: &str) -> String {
    format!(
        r#"{{"group": {{"family": "lattice", "dim": 1}}, "weight": {weight}, "p": 1.0, "elements": [{}]{extra}}}"#,
        elements.join(", ")
    )
}

fn json(run: &Run) -> Value {
    serde_json::from_str(&run.stdout).unwrap_or_else(|e| panic!("{e}: {}{}", run.stdout, run.stderr))
}

#[test]
fn verify_weight_exit_codes() {
    assert_eq!(normctl(&["verify-weight", "--config", &config("lattice2_polynomial.json")]).code, 0);
    let refuted = normctl(&["verify-weight", "--config", &config("nu_refuted.json")]);
    assert_eq!(refuted.code, 2, "{}", refuted.stdout);
    assert!(refuted.stdout.contains("growth_condition     Refuted"));

    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.json", "{ not json");
    let run = normctl(&["verify-weight", "--config", &bad]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.starts_with("error: config"), "{}", run.stderr);
    assert_eq!(normctl(&["verify-weight", "--config", "/nonexistent/config.json"]).code, 1);
}

#[test]
fn invert_geometric_element() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "g.json", &z_config(r#"{"family": "trivial"}"#, &[GEOMETRIC], ""));
    let run = normctl(&["invert", "--json", "--config", &cfg]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let v = json(&run);
    let el = &v["elements"][0];
    assert_eq!(el["status"], "verified");
    // bounds come from (1+|x|); the unweighted norm is reported alongside
    assert!((el["actual_config_weight"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    let rep = &el["report"];
    let actual = rep["actual"].as_f64().unwrap();
    assert!((actual - 4.0).abs() < 1e-9);
    assert!(rep["product"]["ln_value"].as_f64().unwrap() >= actual.ln());
}

#[test]
fn invert_reports_the_boundary_element_and_the_unit() {
    let run = normctl(&["invert", "--config", &config("geometric_invert.json")]);
    assert_eq!(run.code, 2);
    assert!(run.stdout.contains("not certified invertible"), "{}", run.stdout);

    let dir = TempDir::new().unwrap();
    let unit = r#"{"name": "unit", "terms": [{"x": [0], "re": 1.0}]}"#;
    let cfg = write_config(&dir, "u.json", &z_config(r#"{"family": "polynomial", "beta": 2.0}"#, &[unit], ""));
    let run = normctl(&["invert", "--json", "--config", &cfg]);
    assert_eq!(run.code, 0);
    let v = json(&run);
    let inverse = &v["elements"][0]["report"]["inverse"];
    assert_eq!(inverse, &serde_json::json!([{"x": [0], "re": 1.0, "im": 0.0}]));
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), &csv::StringRecord::from(normctl::cli::CSV_COLUMNS.to_vec()));
    rdr.records().map(|r| r.unwrap()).collect()
}

fn column(name: &str) -> usize {
    normctl::cli::CSV_COLUMNS.iter().position(|c| *c == name).unwrap()
}

#[test]
fn bound_compare_beta_sweep() {
    let run = normctl(&["bound-compare", "--config", &config("beta_sweep.json")]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = csv_rows(&run.stdout);
    assert_eq!(rows.len(), 3);
    for (row, beta) in rows.iter().zip([1, 2, 3]) {
        assert_eq!(&row[column("schema")], normctl::cli::CSV_SCHEMA);
        assert_eq!(row[column("weight")], format!("polynomial(beta={beta})"));
        let f = |c: &str| row[column(c)].parse::<f64>().unwrap();
        assert!(f("actual").ln() <= f("ln_product"));
        assert!(f("ln_product") <= f("ln_asymptotic"));
        assert_eq!(&row[column("ordering")], "ok");
    }
    // sum 2^-n (1+n)^beta
    let actual: Vec<f64> = rows.iter().map(|r| r[column("actual")].parse().unwrap()).collect();
    for (a, want) in actual.iter().zip([4.0, 12.0, 52.0]) {
        assert!((a - want).abs() < 1e-8, "{a} vs {want}");
    }
}

#[test]
fn bound_compare_small_nu_and_empty_sweep() {
    let dir = TempDir::new().unwrap();
    let csv_path = dir.path().join("bounds.csv");
    let run = normctl(&[
        "bound-compare",
        "--config",
        &config("geometric_invert.json"),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(run.code, 2);
    assert!(run.stdout.contains("3 rows written"));
    let rows = csv_rows(&std::fs::read_to_string(&csv_path).unwrap());
    let unit = rows.iter().find(|r| &r[column("element")] == "unit").unwrap();
    assert_eq!(&unit[column("nu")], "1.000000000000e0");
    assert_eq!(&unit[column("asymptotic")], "NA");
    assert_eq!(&unit[column("ln_asymptotic")], "NA");
    let boundary = rows.iter().find(|r| &r[column("element")] == "boundary").unwrap();
    assert_eq!(&boundary[column("status")], "refuted");

    let cfg = write_config(&dir, "empty.json", &z_config(r#"{"family": "trivial"}"#, &[GEOMETRIC], r#", "sweep": []"#));
    let run = normctl(&["bound-compare", "--config", &cfg]);
    assert_eq!(run.code, 0);
    assert_eq!(run.stdout.trim_end(), normctl::cli::CSV_COLUMNS.join(","));
}

#[test]
fn pipeline_json_is_reproducible_and_written_to_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let text = std::fs::read_to_string(config("heisenberg.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["output"] = serde_json::json!({ "json": out });
    let cfg = write_config(&dir, "h.json", &v.to_string());

    let first = normctl(&["pipeline", "--json", "--config", &cfg]);
    let second = normctl(&["pipeline", "--json", "--config", &cfg]);
    assert_eq!(first.code, 0, "{}", first.stdout);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first.stdout);
    let report = json(&first);
    assert_eq!(report["schema"], normctl::analysis::PIPELINE_SCHEMA);
    let stages: Vec<&str> = report["stages"].as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(
        stages,
        ["axioms", "growth", "summability", "certificate", "diff_norm", "inversion", "bounds"]
    );
}

#[test]
fn seed_flag_changes_only_the_random_checks() {
    let a = json(&normctl(&["estimate-theta", "--json", "--config", &config("locally_finite.json")]));
    let b = json(&normctl(&["estimate-theta", "--json", "--seed", "99", "--config", &config("locally_finite.json")]));
    assert_eq!(a["certificate"], b["certificate"]);
    assert_eq!(b["check"]["seed"], 99);
    assert_ne!(a["check"]["max_ratio"], b["check"]["max_ratio"]);
}

#[test]
fn pipeline_halts_at_growth_for_the_nu_weight() {
    let run = normctl(&["pipeline", "--config", &config("nu_refuted.json")]);
    assert_eq!(run.code, 2);
    assert!(run.stdout.contains("halted at growth: Refuted"), "{}", run.stdout);
}

#[test]
fn pipeline_uses_the_bound_weight_for_trivial_weights() {
    let run = normctl(&["pipeline", "--json", "--config", &config("geometric_invert.json")]);
    assert_eq!(run.code, 2);
    let v = json(&run);
    assert_eq!(v["bound_weight"], "polynomial(beta=1)");
    assert_eq!(v["halted_at"], "inversion");
    let statuses: Vec<&str> = v["elements"].as_array().unwrap().iter().map(|e| e["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["verified", "verified", "refuted"]);
}

#[test]
fn growth_subcommand_prints_balls() {
    let run = normctl(&["growth", "--config", &config("heisenberg.json"), "--nmax", "3"]);
    assert_eq!(run.code, 0);
    // Heisenberg spheres with the standard generators: 1, 4, 12, 36
    let balls: Vec<&str> = run.stdout.lines().skip(1).take(4).map(|l| l.split_whitespace().last().unwrap()).collect();
    assert_eq!(balls, ["1", "5", "17", "53"]);
}

#[test]
fn overrides_and_usage_errors() {
    let run = normctl(&["invert", "--json", "--kmax", "3", "--tol", "1e-6", "--config", &config("beta_sweep.json")]);
    assert_eq!(run.code, 0);
    let rep = &json(&run)["elements"][0]["report"];
    assert!(rep["term_norms"].as_array().unwrap().last().unwrap().as_f64().unwrap() < 1e-6);
    assert!(rep["a_norm_b"]["k_reached"].as_u64().unwrap() <= 3);

    assert_eq!(normctl(&["--help"]).code, 0);
    assert_eq!(normctl(&["frobnicate"]).code, 1);
    assert_eq!(normctl(&["invert"]).code, 1);
    let bad = normctl(&["invert", "--config", &config("beta_sweep.json"), "--tol=-1"]);
    assert_eq!(bad.code, 1);
    assert!(bad.stderr.contains("tol"));
}

#[test]
fn relative_element_files_resolve_against_the_config() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("a.jsonl"),
        "{\"x\": [0], \"re\": 1.0}\n{\"x\": [1], \"re\": -0.5}\n",
    )
    .unwrap();
    let cfg = write_config(
        &dir,
        "f.json",
        &z_config(r#"{"family": "polynomial", "beta": 2.0}"#, &[r#"{"name": "from_file", "file": "a.jsonl"}"#], ""),
    );
    let run = normctl(&["invert", "--json", "--config", &cfg]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let actual = json(&run)["elements"][0]["report"]["actual"].as_f64().unwrap();
    assert!((actual - 12.0).abs() < 1e-8);
    assert!(Path::new(&cfg).parent().unwrap().join("a.jsonl").exists());
}
