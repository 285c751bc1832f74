//! End-to-end runs of the `polyvem` binary.

use std::path::Path;
use std::process::{Command, Output};

use polyvem::mesh::{unit_square, write_mesh, StructuredKind};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyvem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().skip(2).collect()
}

#[test]
fn study_writes_csv_and_vtk() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--family", "pcc", "--order", "2", "--mesh", "quads", "--refinements", "3", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("pcc_k2.csv")).unwrap();
    assert_eq!(csv, String::from_utf8(o.stdout).unwrap());
    assert_eq!(csv.lines().nth(1), Some("h,ndof,err_l2,err_h1,rate_l2,rate_h1"));
    let rows = data_lines(&csv);
    assert_eq!(rows.len(), 3);
    // L2 and H1 rates near 3 and 2 on the last row.
    let last: Vec<f64> = rows[2].split(',').skip(4).map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 3.0).abs() < 0.2 && (last[1] - 2.0).abs() < 0.2, "{last:?}");
    let vtk = std::fs::read_to_string(dir.path().join("pcc_k2.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0"));
    assert!(vtk.contains("SCALARS u double 1"));
}

#[test]
fn reduced_flag_selects_the_reduced_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["--family", "df_stokes", "--reduced", "--refinements", "2", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("df_stokes_reduced_k2.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",max_div"));
    assert!(dir.path().join("df_stokes_reduced_k2.vtk").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    std::fs::write(&cfg, "# mixed study\nfamily = mcc\norder = 1\nrefinements = 3\nmesh = triangles\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = run(&["--config", cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_lines(&csv).len(), 3);
    assert!(csv.lines().nth(1).unwrap().contains("err_pi_p"));
    let o = run(&["--config", cfg, "--refinements", "2"]);
    assert_eq!(data_lines(&String::from_utf8(o.stdout).unwrap()).len(), 2);
}

#[test]
fn mesh_file_is_a_single_level() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    write_mesh(&unit_square(StructuredKind::HangingQuads, 3).unwrap(), &path).unwrap();
    let mesh = format!("file:{}", path.display());
    let o = run(&["--family", "elasticity", "--order", "1", "--mesh", &mesh]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(data_lines(&csv).len(), 1);
    assert!(data_lines(&csv)[0].ends_with(",,"));
}

#[test]
fn invalid_input_exits_with_code_two() {
    let missing = Path::new("/nonexistent/mesh.txt").display().to_string();
    let cases: Vec<Vec<String>> = vec![
        vec!["--family", "pcc", "--bogus"],
        vec!["--family", "pcc", "--order", "0"],
        vec!["--family", "df_stokes", "--order", "1"],
        vec!["--family", "mcc", "--stabilization", "d_recipe"],
        vec!["--family", "pcc", "--reduced"],
        vec!["--family", "heat"],
        vec!["--order", "2"],
        vec!["--family", "pcc", "--mesh", "hexes"],
        vec!["--family", "pcc", "--config", "/nonexistent/study.cfg"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .chain(std::iter::once(vec!["--family".into(), "pcc".into(), "--mesh".into(), format!("file:{missing}")]))
    .collect();
    for args in cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = run(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
    let o = run(&["--family", "pcc", "--bogus"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}
