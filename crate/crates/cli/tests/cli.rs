use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fconv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fconv"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn validator() -> jsonschema::Validator {
    let schema: Value = serde_json::from_str(include_str!("../assets/report.schema.json")).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_schema_valid(doc: &Value) {
    let v = validator();
    let errors: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "schema errors: {errors:?}");
}

const HAT: &str = r#"{"kind":"alpha","profile":"hat","radius":1}"#;

#[test]
fn default_config_passes_and_reports_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = fconv(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}\n{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    for suite in [
        "valuation_identity",
        "translation_covariance",
        "vertical_invariance",
        "rotation_equivariance",
        "simplicity",
        "homogeneity",
        "epi_continuity",
        "minkowski_relations",
        "steiner_consistency",
        "conjugation_duality",
        "degree0_constancy",
    ] {
        assert!(out.contains(suite), "summary lacks {suite}");
        let doc = read_json(&dir.path().join(format!("{suite}.json")));
        assert_schema_valid(&doc);
        assert_eq!(doc["pass"], Value::Bool(true));
        assert_eq!(doc["seed"], 42);
        assert_eq!(doc["dims"], serde_json::json!([1, 2]));
    }
    assert!(!out.contains('\x1b'), "NO_COLOR summary has escapes");
}

#[test]
fn inadmissible_xi_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"dims":[2],"operators":[{"family":"t_j_xi","density":{"kind":"xi","profile":"power","p":1.0,"radius":1.0}}]}"#,
    );
    let o = fconv(&["verify", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("admissib"), "{}", stderr(&o));
}

#[test]
fn zero_tolerance_on_a_grid_suite_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"dims":[1],"suites":["valuation_identity"],"tolerances":{"valuation_identity":0.0},"max_cases":5}"#,
    );
    let o = fconv(&["verify", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("valuation_identity.json"));
    assert_schema_valid(&doc);
    assert_eq!(doc["mode"], "strict");
    assert_eq!(doc["pass"], Value::Bool(false));
    let grid_raw = doc["cases"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pathway"] == "grid")
        .filter_map(|c| c["raw_residual"].as_f64())
        .fold(0.0, f64::max);
    assert!(grid_raw > 0.0);
}

#[test]
fn reruns_are_identical_except_for_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"dims":[1,2],"suites":["homogeneity","conjugation_duality"],"max_cases":3,"seed":7}"#,
    );
    let mut docs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = fconv(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let mut pair = Vec::new();
        for suite in ["homogeneity", "conjugation_duality"] {
            let mut d = read_json(&out.join(format!("{suite}.json")));
            d.as_object_mut().unwrap().remove("generated_at");
            pair.push(d);
        }
        docs.push(pair);
    }
    assert_eq!(docs[0], docs[1]);
}

#[test]
fn only_and_seed_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cfg.json", r#"{"dims":[1],"max_cases":2}"#);
    let o = fconv(&[
        "verify",
        "--config",
        &cfg,
        "--only",
        "simplicity",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = read_json(&dir.path().join("simplicity.json"));
    assert_eq!(doc["seed"], 9);
    assert!(!dir.path().join("homogeneity.json").exists());
}

#[test]
fn csv_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep");
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(
            r#"{{"dims":[1],"suites":["vertical_invariance"],"max_cases":2,"output":{{"path":{},"format":"csv"}}}}"#,
            serde_json::to_string(out.to_str().unwrap()).unwrap()
        ),
    );
    let o = fconv(&["verify", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut r = csv::Reader::from_path(out.join("vertical_invariance.csv")).unwrap();
    assert_eq!(&r.headers().unwrap()[0], "suite");
    assert!(r.records().count() > 0);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for (name, text) in [
        ("res.json", r#"{"resolutions":[31]}"#),
        ("even.json", r#"{"resolutions":[64]}"#),
        ("dim.json", r#"{"dims":[4]}"#),
        ("suite.json", r#"{"suites":["nope"]}"#),
        ("field.json", r#"{"seeds":1}"#),
        ("tol.json", r#"{"tolerances":{"nope":1.0}}"#),
        ("syntax.json", r#"{"dims":[1"#),
    ] {
        let p = write(dir.path(), name, text);
        let o = fconv(&["verify", "--config", &p, "--out", d]);
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
    }
    let o = fconv(&["verify", "--only", "nope", "--out", d]);
    assert_eq!(code(&o), 2);
    let o = fconv(&["verify", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(code(&o), 2);
    let o = fconv(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn steiner_worked_example() {
    let o = fconv(&[
        "steiner",
        "--fn",
        r#"{"dim":1,"function":{"type":"quadratic","center":[1]}}"#,
        "--density",
        HAT,
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c: Vec<f64> = s["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c[0].as_f64().unwrap())
        .collect();
    for (got, want) in c.iter().zip([-1.0, -1.0, 0.0]) {
        assert!((got - want).abs() <= 1e-6, "{c:?}");
    }
    for a in s["attributed"].as_array().unwrap() {
        assert!(a["cross_check_residual"].as_f64().unwrap() <= 1e-6);
    }
}

#[test]
fn steiner_table_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("samples.csv");
    let o = fconv(&[
        "steiner",
        "--fn",
        r#"{"dim":1,"function":{"type":"quadratic","center":[1]}}"#,
        "--density",
        HAT,
        "--r-values",
        "0,0.5,1,1.5",
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("coefficients"));
    assert!(stdout(&o).contains("cross-check"));
    let mut r = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(r.headers().unwrap(), vec!["r", "m0"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    // m*(v + r q) for v = (x − 1)²/2 and the hat density is −(1 + r) exactly.
    for row in rows {
        let r: f64 = row[0].parse().unwrap();
        let m: f64 = row[1].parse().unwrap();
        assert!((m + 1.0 + r).abs() < 1e-6, "r = {r}, m = {m}");
    }
}

#[test]
fn steiner_of_q_vanishes() {
    let o = fconv(&[
        "steiner",
        "--fn",
        r#"{"dim":2,"function":{"type":"quadratic"}}"#,
        "--density",
        HAT,
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for c in s["coefficients"].as_array().unwrap() {
        for x in c.as_array().unwrap() {
            assert!(x.as_f64().unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn steiner_usage_errors() {
    for (f, d) in [
        (r#"{"dim":1,"function":{"type":"quad"}}"#, HAT),
        (r#"{"dim":1,"function":{"type":"quadratic","center":[1,2]}}"#, HAT),
        (r#"{"function":{"type":"quadratic"}}"#, HAT),
        (
            r#"{"dim":1,"function":{"type":"quadratic"}}"#,
            r#"{"kind":"xi","profile":"hat","radius":1}"#,
        ),
        (r#"{"dim":1,"function":{"type":"quadratic"}}"#, r#"{"kind":"alpha"}"#),
        ("/nonexistent/fn.json", HAT),
    ] {
        let o = fconv(&["steiner", "--fn", f, "--density", d]);
        assert_eq!(code(&o), 2, "{f} {d}: {}", stderr(&o));
    }
    let o = fconv(&[
        "steiner",
        "--fn",
        r#"{"dim":1,"function":{"type":"quadratic"}}"#,
        "--density",
        HAT,
        "--r-values",
        "0,1",
    ]);
    assert_eq!(code(&o), 2);
}

fn conjugate(spec: &str) -> Value {
    let o = fconv(&["conjugate", "--fn", spec]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn conjugate_of_abs() {
    for spec in [
        r#"{"dim":1,"function":{"type":"support","vertices":[[-1],[1]]}}"#,
        r#"{"dim":1,"function":{"type":"max_affine","pieces":[{"slope":[1],"offset":0},{"slope":[-1],"offset":0}]}}"#,
    ] {
        let c = conjugate(spec);
        assert_eq!(c["representation"], "complex");
        let cells = c["cells"].as_array().unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0]["gradient_point"], serde_json::json!([0.0]));
        assert_eq!(cells[0]["mass"], 2.0);
        let mut v: Vec<f64> = cells[0]["vertices"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| p[0].as_f64().unwrap())
            .collect();
        v.sort_by(f64::total_cmp);
        assert_eq!(v, vec![-1.0, 1.0]);
    }
}

#[test]
fn conjugate_of_unit_square_support() {
    let c = conjugate(r#"{"dim":2,"function":{"type":"support","vertices":[[0,0],[1,0],[1,1],[0,1]]}}"#);
    let cells = c["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 1);
    assert_eq!(cells[0]["gradient_point"], serde_json::json!([0.0, 0.0]));
    assert!((cells[0]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let m = cells[0]["cell_moment"].as_array().unwrap();
    assert!((m[0].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert!((m[1].as_f64().unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn conjugate_cells_partition_the_domain() {
    let c = conjugate(
        r#"{"dim":2,"function":{"type":"max_affine","pieces":[
            {"slope":[1,0],"offset":0},{"slope":[0,1],"offset":-0.5},
            {"slope":[-1,-1],"offset":0.25},{"slope":[0.2,0.1],"offset":0.3}]}}"#,
    );
    let masses: f64 = c["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["mass"].as_f64().unwrap())
        .sum();
    assert!((masses - c["total_mass"].as_f64().unwrap()).abs() < 1e-12);
    assert!((c["total_mass"].as_f64().unwrap() - 1.5).abs() < 1e-12);
}

#[test]
fn conjugate_of_smooth_input_is_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.json");
    let o = fconv(&[
        "conjugate",
        "--fn",
        r#"{"dim":1,"function":{"type":"quadratic"}}"#,
        "--nodes",
        "65",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let c = read_json(&out);
    assert_eq!(c["representation"], "grid");
    let lo = c["lower"][0].as_f64().unwrap();
    let hi = c["upper"][0].as_f64().unwrap();
    let vals = c["values"].as_array().unwrap();
    let count = vals.len();
    assert_eq!(count, c["resolution"][0].as_u64().unwrap() as usize);
    // q is self-conjugate.
    for (i, v) in vals.iter().enumerate() {
        let y = lo + (hi - lo) * i as f64 / (count - 1) as f64;
        if y.abs() <= 1.5 {
            assert!((v.as_f64().unwrap() - 0.5 * y * y).abs() < 1e-2, "y = {y}");
        }
    }
}

#[test]
fn conjugate_rejects_dimension_4() {
    let o = fconv(&["conjugate", "--fn", r#"{"dim":4,"function":{"type":"quadratic"}}"#]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("dimension"));
}

#[test]
fn bundled_assets() {
    let o = fconv(&["schema"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), include_str!("../assets/report.schema.json"));
    let cfg: Value = serde_json::from_str(include_str!("../assets/default_config.json")).unwrap();
    assert_eq!(cfg["seed"], 42);
    assert_eq!(cfg["dims"], serde_json::json!([1, 2]));
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = validator();
    let good = serde_json::json!({
        "tool": "fconv", "version": "0", "generated_at": 0, "suite": "simplicity", "seed": 1,
        "dims": [1], "mode": "credited", "case_count": 1, "max_residual": null,
        "max_raw_residual": null, "tolerance": 0.0, "pass": false,
        "cases": [{"index": 0, "dim": 1, "operator": "m", "check": "c", "inputs": {},
                   "pathway": "grid", "raw_residual": null, "error_estimate": 0.0,
                   "allowance": 0.0, "residual": null, "note": "non-finite"}]
    });
    assert!(v.is_valid(&good));
    let mut bad = good.clone();
    bad["suite"] = "other".into();
    assert!(!v.is_valid(&bad));
    let mut bad = good.clone();
    bad["max_residual"] = "big".into();
    assert!(!v.is_valid(&bad));
    let mut bad = good;
    bad.as_object_mut().unwrap().remove("cases");
    assert!(!v.is_valid(&bad));
}
