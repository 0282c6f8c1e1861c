use std::fs;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_liquid-drop"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ball_reports_both_routes() {
    let o = run(&["ball", "--r", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let want = 16.0 * std::f64::consts::PI.powi(2) / 15.0;
    for k in ["closed_form", "quadrature"] {
        let d = v[k]["coulomb"].as_f64().unwrap();
        assert!((d - want).abs() < 1e-8 * want);
    }
    assert!(v["max_rel_discrepancy"].as_f64().unwrap() <= 1e-8);
    let o = run(&["ball", "--r", "1.3365"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["quadrature"]["volume"].as_f64().unwrap() - 10.0).abs() < 1e-3);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(run(&["ball", "--r", "0"]).status.code(), Some(2));
    assert_eq!(run(&["ball"]).status.code(), Some(2));
    assert_eq!(run(&["branch", "--lmax", "7"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--only", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn spectrum_rows() {
    let o = run(&["spectrum"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("l,analytic,numeric,abs_diff"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[1][0], 2.0);
    assert!(rows[1][2].abs() <= 1e-6);
    assert!((rows[0][1] - 18.0).abs() < 1e-12);
    let o = run(&["spectrum", "--r", "1"]);
    let second: Vec<f64> = stdout(&o).lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((second[1] - (4.0 - 8.0 * std::f64::consts::PI / 15.0)).abs() < 1e-12);
}

#[test]
fn trivial_branch_is_one_row() {
    let o = run(&["branch", "--s-start", "0.0", "--s-end", "0.0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(f[1].parse::<f64>().unwrap(), liquid_drop::operator::R_STAR);
    // the manifest goes to stderr when there is no output file
    let m: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(m["command"], "branch");
    assert_eq!(m["status"], "ok");
}

#[test]
fn branch_file_output_is_deterministic_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &std::path::Path| {
        vec![
            "branch".to_string(),
            "--s-start=-0.03".into(),
            "--s-end".into(),
            "0.03".into(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    assert_eq!(bin().args(args(&a)).status().unwrap().code(), Some(0));
    assert_eq!(bin().args(args(&b)).arg("--threads").arg("1").status().unwrap().code(), Some(0));
    let (ta, tb) = (fs::read_to_string(&a).unwrap(), fs::read_to_string(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(ta.lines().count(), 8);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["s_start"], -0.03);
    assert_eq!(m["outputs"][0], a.display().to_string());
    assert!(m["version"].is_string() && m["wall_time_s"].is_number());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "lmax = 8\ngrid_order = 40\ns_start = 0.0\ns_end = 0.02\n").unwrap();
    let out = dir.path().join("b.csv");
    let o = bin()
        .args(["branch", "--config"])
        .arg(&cfg)
        .args(["--lmax", "10", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().ends_with(",c8,c10"));
    assert_eq!(text.lines().count(), 4);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["lmax"], 10);
    assert_eq!(m["config"]["grid_order"], 40);
}

#[test]
fn malformed_config_writes_no_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "lmax = \"sixteen\"\n").unwrap();
    let out = dir.path().join("b.csv");
    let o = bin().args(["branch", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn divergence_exits_one_and_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("hard.toml");
    fs::write(&cfg, "max_iter = 1\ntol = 1e-15\ns_start = 0.0\ns_end = 0.02\n").unwrap();
    let out = dir.path().join("b.csv");
    let o = bin().args(["branch", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 2);
}

#[test]
fn verify_filter_and_tolerance_scale() {
    let o = run(&["verify", "--only", "virial"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("virial defect")).count(), 5);
    assert!(!text.contains("funk-hecke"));
    let o = run(&["verify", "--tol-scale", "1e-6"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL") && text.contains("PASS"));
}

#[test]
fn eval_reads_shape_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("shape.json");
    let s = liquid_drop::Shape::from_pairs(1.3, &[(2, 0.1), (4, 0.01)]).unwrap();
    fs::write(&p, s.to_text()).unwrap();
    let o = bin().arg("eval").arg(&p).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["energy"]["volume"].as_f64().unwrap() > 9.0);
    assert_eq!(v["prolate"], true);
    fs::write(&p, "{\"R\": -1}").unwrap();
    assert_eq!(bin().arg("eval").arg(&p).output().unwrap().status.code(), Some(2));
}
