use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{config_hash, RunConfig};
use super::plots::{convergence_svg, mach_svg, shock_svg};
use crate::diagnostics::{evaluate, Diagnostics};
use crate::driver::{linear_systems, IterationReport, PrimitiveFields, Solution};
use crate::error::{Error, Result, SmallnessProxy};
use crate::fields::FlowFields;
use crate::geometry::{unflatten, FlattenedGrid, ShockCurve};
use crate::upstream::{UpstreamSampler, UpstreamSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactFile {
    /// Path relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config_hash: String,
    pub threads: usize,
}

impl RunMetadata {
    pub fn new(config: &RunConfig, threads: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config_hash: config_hash(config),
            threads,
        }
    }
}

/// Files written for one run. `report.json` is listed last and is not hashed inside itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub files: Vec<ArtifactFile>,
    pub metadata: RunMetadata,
}

/// Writes via a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn record(dir: &Path, name: &str, bytes: &[u8], files: &mut Vec<ArtifactFile>) -> Result<()> {
    write_atomic(&dir.join(name), bytes)?;
    files.push(ArtifactFile {
        path: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes).as_slice()),
    });
    Ok(())
}

fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

const FIELD_COLUMNS: [&str; 14] = [
    "y", "t", "x", "r", "u_x", "u_r", "u_theta", "rho", "p", "S", "Lambda", "phi", "psi", "Mach",
];

fn fields_csv(sol: &Solution) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(FIELD_COLUMNS).map_err(csv_err)?;
    let (g, p, f) = (&sol.grid, &sol.primitive, &sol.fields);
    let gamma = sol.background.gamma;
    for i in 0..g.ny {
        for j in 0..g.nt {
            let (x, r) = unflatten(g.y(i), g.t(j), &sol.shock);
            let mach = p.state(i, j).mach(gamma).unwrap_or(f64::NAN);
            let row = [
                g.y(i),
                g.t(j),
                x,
                r,
                p.u_x[[i, j]],
                p.u_r[[i, j]],
                p.u_theta[[i, j]],
                p.rho[[i, j]],
                p.p[[i, j]],
                f.entropy[[i, j]],
                f.lambda[[i, j]],
                f.phi[[i, j]],
                f.psi[[i, j]],
                mach,
            ];
            w.write_record(row.iter().map(|v| g17(*v))).map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

fn shock_csv(shock: &ShockCurve) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record(["r", "f", "fprime"]).map_err(csv_err)?;
    let fp = shock.fprime_nodes();
    for (k, (r, f)) in shock.radii().iter().zip(shock.values()).enumerate() {
        w.write_record([g17(*r), g17(*f), g17(fp[k])]).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes the fields, shock, report and optional plots and matrices of a converged run.
pub fn write_solution(
    sol: &Solution,
    upstream: &UpstreamSolution,
    config: &RunConfig,
    dir: &Path,
    threads: usize,
) -> Result<RunArtifacts> {
    let metadata = RunMetadata::new(config, threads);
    let mut files = Vec::new();
    record(dir, "fields.csv", &fields_csv(sol)?, &mut files)?;
    record(dir, "shock.csv", &shock_csv(&sol.shock)?, &mut files)?;
    if config.output.emit_plots {
        record(dir, "plots/shock.svg", shock_svg(&sol.shock).as_bytes(), &mut files)?;
        record(dir, "plots/mach.svg", mach_svg(sol).as_bytes(), &mut files)?;
        record(dir, "plots/convergence.svg", convergence_svg(&sol.report).as_bytes(), &mut files)?;
    }
    if config.output.dump_matrices {
        let (potential, swirl) = linear_systems(upstream, sol, &config.solver)?;
        let mdir = dir.join("matrices");
        fs::create_dir_all(&mdir).map_err(|e| Error::io(&mdir, e))?;
        potential.write_matrix_market(&mdir.join("potential"))?;
        swirl.write_matrix_market(&mdir.join("swirl"))?;
        for name in ["potential.mtx", "potential_rhs.mtx", "swirl.mtx", "swirl_rhs.mtx"] {
            let path = mdir.join(name);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            files.push(ArtifactFile {
                path: format!("matrices/{name}"),
                bytes: bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&bytes).as_slice()),
            });
        }
    }
    let report = serde_json::json!({
        "metadata": metadata,
        "config": config,
        "converged": true,
        "iteration": sol.report,
        "diagnostics": sol.diagnostics,
        "diagnostic_failures": sol.diagnostics.failures(),
        "shock_max": sol.shock.max_abs(),
        "timing": sol.timing,
        "files": files,
    });
    record(dir, "report.json", &to_json(&report)?, &mut files)?;
    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        files,
        metadata,
    })
}

/// Writes `report.json` (and the convergence plot when requested) for a failed run.
pub fn write_failure_report(
    config: &RunConfig,
    dir: &Path,
    threads: usize,
    proxy: Option<SmallnessProxy>,
    message: &str,
    report: Option<&IterationReport>,
) -> Result<RunArtifacts> {
    let metadata = RunMetadata::new(config, threads);
    let mut files = Vec::new();
    if let (true, Some(r)) = (config.output.emit_plots, report) {
        record(dir, "plots/convergence.svg", convergence_svg(r).as_bytes(), &mut files)?;
    }
    let doc = serde_json::json!({
        "metadata": metadata,
        "config": config,
        "converged": false,
        "failure": { "proxy": proxy, "message": message },
        "iteration": report,
        "files": files,
    });
    record(dir, "report.json", &to_json(&doc)?, &mut files)?;
    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        files,
        metadata,
    })
}

/// Fields re-read from `fields.csv` and `shock.csv`.
#[derive(Debug, Clone)]
pub struct StoredFields {
    pub grid: FlattenedGrid,
    pub shock: ShockCurve,
    pub fields: FlowFields,
    pub primitive: PrimitiveFields,
}

fn read_table(path: &Path, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!("{}: unexpected columns {headers:?}", path.display())));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{}: {s:?}: {e}", path.display()))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_shock_csv(path: &Path) -> Result<ShockCurve> {
    let rows = read_table(path, &["r", "f", "fprime"])?;
    ShockCurve::new(rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
}

pub fn read_fields_csv(fields: &Path, shock: &Path) -> Result<StoredFields> {
    let shock = read_shock_csv(shock)?;
    let rows = read_table(fields, &FIELD_COLUMNS)?;
    let nt = shock.len();
    if nt == 0 || rows.len() % nt != 0 {
        return Err(Error::Parse("fields.csv does not match the shock node count".into()));
    }
    let ny = rows.len() / nt;
    let grid = FlattenedGrid::new(ny, nt)?;
    let col = |c: usize| Array2::from_shape_fn((ny, nt), |(i, j)| rows[i * nt + j][c]);
    Ok(StoredFields {
        grid,
        shock,
        fields: FlowFields {
            phi: col(11),
            psi: col(12),
            entropy: col(9),
            lambda: col(10),
        },
        primitive: PrimitiveFields {
            u_x: col(4),
            u_r: col(5),
            u_theta: col(6),
            rho: col(7),
            p: col(8),
        },
    })
}

/// Diagnostics of re-read fields against the inflow they were computed for.
pub fn recompute_diagnostics(stored: &StoredFields, upstream: &UpstreamSolution) -> Result<Diagnostics> {
    let sampler = UpstreamSampler::new(upstream)?;
    Ok(evaluate(
        &stored.grid,
        &stored.shock,
        &stored.fields,
        &stored.primitive,
        &upstream.background,
        &sampler,
    ))
}
