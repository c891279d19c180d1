use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use transonic::cli_io::{
    apply_override, config_hash, exit_code, parse_config_value, write_atomic, write_failure_report,
    write_solution, RunConfig,
};
use transonic::diagnostics::{sigma_scaling_study, ScalingTable};
use transonic::verify::{run_battery, Battery, VerifyOptions};
use transonic::{build_parallel_swirl_inflow, solve_transonic_shock, Error};

/// Environment variable naming the directory under which runs are written when `--out` is absent.
const OUT_ROOT_VAR: &str = "TRANSONIC_OUT_ROOT";

#[derive(Parser)]
#[command(name = "transonic", version, about = "Shock-fitting solver for axisymmetric transonic flow in a cylinder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write fields, shock, report and plots.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        emit_plots: bool,
        /// Write the final linear systems in Matrix Market format.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Run the built-in oracle batteries and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Battery to run; repeat for several. All batteries run when omitted.
        #[arg(long = "battery", value_name = "NAME")]
        batteries: Vec<Battery>,
        /// Amplitude factors of the scaling battery.
        #[arg(long, value_delimiter = ',')]
        factors: Option<Vec<f64>>,
    },
    /// Solve a family of scaled inflows and print deviation-to-sigma ratios.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25")]
        factors: Vec<f64>,
        /// Directory for `sweep.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override such as `inflow.eps_swirl=0.02`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Grid size as `NYxNT`.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NYxNT, got {s:?}"))?;
    let n = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((n(a)?, n(b)?))
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(e: impl ToString) -> Self {
        Self { code: exit_code::CONFIG_ERROR, message: e.to_string() }
    }
    fn io(e: impl ToString) -> Self {
        Self { code: exit_code::IO_ERROR, message: e.to_string() }
    }
}

impl Common {
    fn load(&self, extra: &[String]) -> Result<RunConfig, Failure> {
        let mut doc = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::config(format!("{}: malformed JSON: {e}", path.display())))?
            }
            None => Value::Object(Default::default()),
        };
        for o in self.overrides.iter().chain(extra) {
            apply_override(&mut doc, o).map_err(Failure::config)?;
        }
        if let Some((ny, nt)) = self.grid {
            apply_override(&mut doc, &format!("solver.n_y={ny}")).map_err(Failure::config)?;
            apply_override(&mut doc, &format!("solver.n_t={nt}")).map_err(Failure::config)?;
        }
        parse_config_value(&doc).map_err(Failure::config)
    }

    fn init_threads(&self) -> Result<(), Failure> {
        if self.threads == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build_global()
            .map_err(Failure::config)
    }
}

fn output_dir(cli_out: Option<PathBuf>, config: &RunConfig, prefix: &str) -> PathBuf {
    if let Some(dir) = cli_out.or_else(|| config.output.dir.clone().map(PathBuf::from)) {
        return dir;
    }
    let root = std::env::var_os(OUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
    root.join(format!("{prefix}-{}", &config_hash(config)[..12]))
}

fn solve(common: Common, out: Option<PathBuf>, emit_plots: bool, dump_matrices: bool) -> Result<(), Failure> {
    let mut flags = Vec::new();
    if emit_plots {
        flags.push("output.emit_plots=true".to_string());
    }
    if dump_matrices {
        flags.push("output.dump_matrices=true".to_string());
    }
    let config = common.load(&flags)?;
    common.init_threads()?;
    let dir = output_dir(out, &config, "run");
    let threads = common.threads;

    let result = build_parallel_swirl_inflow(&config.inflow, config.gas.gamma)
        .and_then(|up| solve_transonic_shock(&up, &config.solver).map(|sol| (up, sol)));
    match result {
        Ok((up, sol)) => {
            let artifacts = write_solution(&sol, &up, &config, &dir, threads).map_err(Failure::io)?;
            let d = &sol.diagnostics;
            println!(
                "converged: {} outer / {} inner sweeps, sigma {:.3e}, max|f| {:.3e}, {:.2} s",
                sol.report.outer_sweeps,
                sol.report.inner_sweeps,
                sol.report.sigma,
                sol.shock.max_abs(),
                sol.timing.wall_seconds
            );
            println!(
                "euler {:.3e}, rh {:.3e}, bernoulli {:.3e}, max downstream Mach {:.4}",
                d.euler_max_norm(),
                d.rh_max_norm(),
                d.bernoulli_deviation,
                d.mach_downstream_max
            );
            for f in d.failures() {
                eprintln!("warning: {f}");
            }
            println!("wrote {} files to {}", artifacts.files.len(), artifacts.dir.display());
            Ok(())
        }
        Err(e) => {
            let (proxy, report) = match &e {
                Error::Diverged { proxy, report, .. } => (Some(*proxy), Some(report.as_ref())),
                other => (other.proxy(), None),
            };
            write_failure_report(&config, &dir, threads, proxy, &e.to_string(), report).map_err(Failure::io)?;
            Err(Failure {
                code: exit_code::DIVERGED,
                message: format!("{e}\nreport written to {}", dir.join("report.json").display()),
            })
        }
    }
}

fn verify(common: Common, batteries: Vec<Battery>, factors: Option<Vec<f64>>) -> Result<(), Failure> {
    let mut opts = VerifyOptions::default();
    if common.config.is_some() || !common.overrides.is_empty() || common.grid.is_some() {
        let config = common.load(&[])?;
        opts.inflow = config.inflow;
        opts.gamma = config.gas.gamma;
        if common.config.is_some() || common.grid.is_some() || common.overrides.iter().any(|o| o.starts_with("solver.")) {
            opts.solver = config.solver;
        }
    }
    if let Some(f) = factors {
        opts.factors = f;
    }
    common.init_threads()?;
    let batteries = if batteries.is_empty() { Battery::ALL.to_vec() } else { batteries };
    let mut failed = 0;
    let mut total = 0;
    for b in batteries {
        for c in run_battery(b, &opts) {
            total += 1;
            if !c.passed {
                failed += 1;
            }
            println!(
                "{:<4} {:<10} {:<34} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.battery.name(),
                c.name,
                c.detail
            );
        }
    }
    println!("{} of {total} checks passed", total - failed);
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure { code: exit_code::VERIFY_FAILED, message: format!("{failed} checks failed") })
    }
}

fn print_table(table: &ScalingTable) {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4e}"));
    println!(
        "{:>8} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "factor", "sigma", "max|f|", "state", "sl", "f/sigma", "state/sig", "sl/sigma"
    );
    for r in &table.rows {
        println!(
            "{:>8} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11} {:>11} {:>11}",
            r.factor,
            r.sigma,
            r.shock_max,
            r.state_deviation,
            r.sl_deviation,
            opt(r.shock_ratio),
            opt(r.state_ratio),
            opt(r.sl_ratio)
        );
    }
    println!(
        "relative spread: shock {:.4}, state {:.4}, streamline {:.4}",
        table.shock_spread, table.state_spread, table.sl_spread
    );
}

fn sweep(common: Common, factors: Vec<f64>, out: Option<PathBuf>) -> Result<(), Failure> {
    let config = common.load(&[])?;
    common.init_threads()?;
    let table = sigma_scaling_study(&config.inflow, &factors, &config.solver, config.gas.gamma).map_err(|e| Failure {
        code: exit_code::DIVERGED,
        message: e.to_string(),
    })?;
    print_table(&table);
    let dir = output_dir(out, &config, "sweep");
    let doc = serde_json::json!({ "config": config, "factors": factors, "table": table });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(Failure::io)?;
    bytes.push(b'\n');
    write_atomic(&dir.join("sweep.json"), &bytes).map_err(Failure::io)?;
    println!("wrote {}", Path::new(&dir).join("sweep.json").display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the configuration exit code; 2 is reserved for divergence.
            return if e.use_stderr() { ExitCode::from(exit_code::CONFIG_ERROR as u8) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve { common, out, emit_plots, dump_matrices } => solve(common, out, emit_plots, dump_matrices),
        Command::Verify { common, batteries, factors } => verify(common, batteries, factors),
        Command::Sweep { common, factors, out } => sweep(common, factors, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
