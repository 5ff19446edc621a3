use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn monogenic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monogenic"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn hilbert_csv_has_one_row_per_triangle_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = monogenic(dir.path(), &["hilbert", "--mesh", "sphere", "--level", "2", "--phi", "Y1", "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("a/hilbert.csv")).unwrap();
    let b = fs::read(dir.path().join("b/hilbert.csv")).unwrap();
    assert_eq!(a, b);
    let rows = String::from_utf8(a).unwrap().lines().count() - 1;
    assert_eq!(rows, 320);
    assert_eq!(json(&dir.path().join("a/hilbert.json"))["triangles"], 320);
}

#[test]
fn vekua_residual_json_lists_all_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = monogenic(dir.path(), &["vekua", "--h", "0.6", "--f", "radial-quadratic", "--out", "v"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("v/residual.json"));
    for k in ["div", "curl", "double_curl", "conductivity"] {
        assert!(r["residual"][k].is_f64(), "missing {k}");
    }
    assert!(dir.path().join("v/vekua.vtk").is_file());
    assert!(dir.path().join("v/vekua_trace.csv").is_file());
}

#[test]
fn missing_mesh_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = monogenic(dir.path(), &["dn", "--mesh", "meshes/absent.msh"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("meshes/absent.msh"));
}

#[test]
fn single_level_schedule_warns_but_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = monogenic(
        dir.path(),
        &["verify", "--level", "2", "--h", "0.5", "--suite", "quat,mesh,boundary_ops", "--seed", "11", "--out", "r"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("decay unassessed"));
    let r = json(&dir.path().join("r/report.json"));
    let records = r["records"].as_array().unwrap();
    assert!(!records.is_empty());
    for rec in records {
        for k in ["suite", "invariant", "value", "cap", "pass", "mesh", "seed"] {
            assert!(!rec[k].is_null(), "record lacks {k}");
        }
        assert_eq!(rec["seed"], 11);
        assert_eq!(rec["pass"], true);
    }
}

#[test]
fn failing_cap_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"tolerances": {"mesh/closed normal sum": 1e-300}, "suites": ["mesh"], "level": 1, "h": 0.6}"#,
    )
    .unwrap();
    let o = monogenic(dir.path(), &["verify", "--config", "c.json", "--out", "r"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("closed normal sum"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"mesh": "sphere", "level": 1, "phi": "x1", "out": "fromfile"}"#).unwrap();
    let o = monogenic(dir.path(), &["hilbert", "--config", "c.json", "--phi", "x3", "--out", "a"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = monogenic(dir.path(), &["hilbert", "--level", "1", "--phi", "x3", "--out", "b"]);
    assert!(o.status.success());
    assert!(!dir.path().join("fromfile").exists());
    assert_eq!(
        fs::read(dir.path().join("a/hilbert.csv")).unwrap(),
        fs::read(dir.path().join("b/hilbert.csv")).unwrap()
    );
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"schedule": {"ball_h": [0.3, 0.5]}}"#).unwrap();
    let o = monogenic(dir.path(), &["verify", "--config", "c.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schedule.ball_h"));
}

#[test]
fn mesh_info_reads_off_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = monogenic::mesh::unit_sphere(1);
    monogenic::mesh::io::save_surface_mesh(&m, &dir.path().join("s.off")).unwrap();
    let o = monogenic(dir.path(), &["mesh-info", "--mesh", "s.off"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["triangles"], 80);
    assert_eq!(v["euler_characteristic"], 2);
}

#[test]
fn divcurl_writes_cell_field_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let o = monogenic(dir.path(), &["divcurl", "--h", "0.6", "--source", "div3", "--out", "d"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("d/residual.json"));
    assert!(r["div"].as_f64().unwrap() < 0.1);
    let vtk = fs::read_to_string(dir.path().join("d/divcurl.vtk")).unwrap();
    assert!(vtk.contains("CELL_DATA"));
}
