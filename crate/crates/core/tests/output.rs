use std::fs;

use transonic::cli_io::{parse_config, read_fields_csv, recompute_diagnostics, write_failure_report, write_solution, RunConfig};
use transonic::{build_parallel_swirl_inflow, solve_transonic_shock, SmallnessProxy};

fn config() -> RunConfig {
    parse_config(
        r#"{"inflow": {"eps_swirl": 0.02, "eps_entropy": 0.01}, "solver": {"n_y": 33, "n_t": 17}, "output": {"emit_plots": true, "dump_matrices": true}}"#,
    )
    .unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + b.abs())
}

#[test]
fn csv_roundtrip_reproduces_the_diagnostics() {
    let cfg = config();
    let up = build_parallel_swirl_inflow(&cfg.inflow, cfg.gas.gamma).unwrap();
    let sol = solve_transonic_shock(&up, &cfg.solver).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let art = write_solution(&sol, &up, &cfg, tmp.path(), 1).unwrap();
    for f in &art.files {
        assert!(fs::metadata(tmp.path().join(&f.path)).unwrap().len() > 0, "{}", f.path);
    }

    let stored = read_fields_csv(&tmp.path().join("fields.csv"), &tmp.path().join("shock.csv")).unwrap();
    assert_eq!(stored.grid, sol.grid);
    let d = recompute_diagnostics(&stored, &up).unwrap();
    let a = serde_json::to_value(&d).unwrap();
    let b = serde_json::to_value(&sol.diagnostics).unwrap();
    let (a, b) = (a.as_object().unwrap(), b.as_object().unwrap());
    for (key, va) in a {
        let vb = &b[key];
        let (xs, ys): (Vec<f64>, Vec<f64>) = match (va, vb) {
            (serde_json::Value::Array(x), serde_json::Value::Array(y)) => {
                (x.iter().map(|v| v.as_f64().unwrap()).collect(), y.iter().map(|v| v.as_f64().unwrap()).collect())
            }
            _ => (vec![va.as_f64().unwrap()], vec![vb.as_f64().unwrap()]),
        };
        for (x, y) in xs.iter().zip(&ys) {
            assert!(close(*x, *y), "{key}: {x} vs {y}");
        }
    }

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["config_hash"], art.metadata.config_hash);
    let mtx = fs::read_to_string(tmp.path().join("matrices/potential.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real"));
}

#[test]
fn failure_report_names_the_proxy() {
    let cfg = config();
    let tmp = tempfile::tempdir().unwrap();
    write_failure_report(&cfg, tmp.path(), 1, Some(SmallnessProxy::ShockEscape), "escaped", None).unwrap();
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["failure"]["proxy"], "shock_escape");
    assert_eq!(report["converged"], false);
}
