use std::ffi::{CStr, CString};
use std::ptr;

use transonic_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ts_last_error()) }.to_string_lossy().into_owned()
}

fn config(json: &str) -> *mut TsConfig {
    let text = CString::new(json).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ts_config_from_json(text.as_ptr(), &mut cfg) }, TsStatus::Ok, "{}", last_error());
    cfg
}

#[test]
fn perturbed_solve_through_the_c_interface() {
    let cfg = config(r#"{"solver": {"n_y": 33, "n_t": 17}}"#);
    for a in ["inflow.eps_swirl=0.02", "inflow.eps_entropy=0.01"] {
        let a = CString::new(a).unwrap();
        assert_eq!(unsafe { ts_config_set(cfg, a.as_ptr()) }, TsStatus::Ok);
    }
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { ts_solve(cfg, &mut sol) }, TsStatus::Ok, "{}", last_error());
    let (mut ny, mut nt) = (0usize, 0usize);
    assert_eq!(unsafe { ts_solution_grid(sol, &mut ny, &mut nt) }, TsStatus::Ok);
    assert_eq!((ny, nt), (33, 17));

    let mut f = vec![0.0; nt];
    assert_eq!(unsafe { ts_solution_shock(sol, f.as_mut_ptr(), nt) }, TsStatus::Ok);
    assert!(f.iter().any(|v| v.abs() > 1e-5));

    let mut rho = vec![0.0; ny * nt];
    assert_eq!(unsafe { ts_solution_field(sol, TsField::Rho as i32, rho.as_mut_ptr(), rho.len()) }, TsStatus::Ok);
    assert!(rho.iter().all(|r| (r - 8.0 / 3.0).abs() < 0.2));

    let mut short = vec![0.0; 3];
    assert_eq!(
        unsafe { ts_solution_field(sol, TsField::P as i32, short.as_mut_ptr(), 3) },
        TsStatus::InvalidArgument
    );
    assert_eq!(unsafe { ts_solution_field(sol, 99, rho.as_mut_ptr(), rho.len()) }, TsStatus::InvalidArgument);
    assert!(last_error().contains("99"));

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ts_solution_report_json(sol, &mut json) }, TsStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(doc["iteration"]["converged"], true);
    unsafe {
        ts_string_free(json);
        ts_solution_free(sol);
        ts_config_free(cfg);
    }
}

#[test]
fn config_errors_are_reported() {
    let text = CString::new(r#"{"inflow": {"epsSwirl": 1}}"#).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { ts_config_from_json(text.as_ptr(), &mut cfg) }, TsStatus::Config);
    assert!(last_error().contains("eps_swirl"));
    assert!(cfg.is_null());

    let cfg = config("{}");
    let bad = CString::new("solver.n_y=3").unwrap();
    assert_eq!(unsafe { ts_config_set(cfg, bad.as_ptr()) }, TsStatus::Config);
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { ts_config_to_json(cfg, &mut json) }, TsStatus::Ok);
    let doc: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(json) }.to_str().unwrap()).unwrap();
    assert_eq!(doc["solver"]["n_y"], 129);
    unsafe {
        ts_string_free(json);
        ts_config_free(cfg);
    }
}

#[test]
fn null_arguments_are_rejected() {
    let mut sol = ptr::null_mut();
    assert_eq!(unsafe { ts_solve(ptr::null(), &mut sol) }, TsStatus::InvalidArgument);
    assert_eq!(unsafe { ts_config_default(ptr::null_mut()) }, TsStatus::InvalidArgument);
    unsafe {
        ts_config_free(ptr::null_mut());
        ts_solution_free(ptr::null_mut());
        ts_string_free(ptr::null_mut());
    }
}

#[test]
fn divergence_writes_a_failure_report() {
    let cfg = config(r#"{"inflow": {"eps_swirl": 0.2, "eps_entropy": 0.1}, "solver": {"n_y": 33, "n_t": 17}}"#);
    let tmp = tempfile::tempdir().unwrap();
    let dir = CString::new(tmp.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ts_run(cfg, dir.as_ptr()) }, TsStatus::Diverged);
    assert!(!last_error().is_empty());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert!(report["failure"]["proxy"].is_string());
    unsafe { ts_config_free(cfg) };
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(ts_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
