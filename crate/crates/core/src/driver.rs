//! Nested fixed-point iteration for `(f, φ, S, Λ, ψ)` and reconstruction of the
//! primitive flow.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnostics, evaluate, Diagnostics};
use crate::elliptic::{
    assemble_A, assemble_B, assemble_F, assemble_G, linearized_coefficients, EllipticProblem,
    LinearizedCoefficients, SolveStats, System,
};
use crate::error::{Error, Result, SmallnessProxy};
use crate::fields::{kinematics, physical_gradient, FlowFields, Metric};
use crate::gasdyn::{density_h, s_sh, BackgroundShock, GasState, Normal};
use crate::geometry::{update_shock, FlattenedGrid, ShockCurve, ShockUpdate};
use crate::transport::{mass_flux, stream_function, trace_to_shock, transport_from_shock};
use crate::upstream::{UpstreamSampler, UpstreamSolution};

/// How the three fixed-point levels are arranged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Nesting {
    /// φ/f loop inside the (S, Λ) loop inside the ψ loop.
    #[default]
    Nested,
    /// One sweep updates every unknown once.
    FlattenedPicard,
}

fn d_ny() -> usize {
    129
}
fn d_nt() -> usize {
    65
}
fn d_tol() -> f64 {
    1e-9
}
fn d_sweeps() -> usize {
    200
}
fn d_omega_shock() -> f64 {
    0.7
}
fn d_one() -> f64 {
    1.0
}
fn d_linear_tol() -> f64 {
    1e-11
}

/// Grid, tolerances and relaxation of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "d_ny")]
    pub n_y: usize,
    #[serde(default = "d_nt")]
    pub n_t: usize,
    /// Relative max-norm change tolerances.
    #[serde(default = "d_tol")]
    pub tol_phi: f64,
    #[serde(default = "d_tol")]
    pub tol_sl: f64,
    #[serde(default = "d_tol")]
    pub tol_psi: f64,
    #[serde(default = "d_tol")]
    pub tol_f: f64,
    /// Sweep cap of every level.
    #[serde(default = "d_sweeps")]
    pub max_sweeps: usize,
    #[serde(default = "d_omega_shock")]
    pub omega_shock: f64,
    #[serde(default = "d_one")]
    pub omega_sl: f64,
    #[serde(default = "d_one")]
    pub omega_psi: f64,
    #[serde(default)]
    pub nesting: Nesting,
    /// Relative residual of every CG solve.
    #[serde(default = "d_linear_tol")]
    pub linear_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_y: d_ny(),
            n_t: d_nt(),
            tol_phi: d_tol(),
            tol_sl: d_tol(),
            tol_psi: d_tol(),
            tol_f: d_tol(),
            max_sweeps: d_sweeps(),
            omega_shock: d_omega_shock(),
            omega_sl: 1.0,
            omega_psi: 1.0,
            nesting: Nesting::Nested,
            linear_tol: d_linear_tol(),
        }
    }
}

impl SolverConfig {
    pub fn with_grid(n_y: usize, n_t: usize) -> Self {
        Self {
            n_y,
            n_t,
            ..Self::default()
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.n_y < 9 {
            v.push(format!("solver.n_y must be at least 9, got {}", self.n_y));
        }
        if self.n_t < 9 {
            v.push(format!("solver.n_t must be at least 9, got {}", self.n_t));
        }
        for (name, tol) in [
            ("tol_phi", self.tol_phi),
            ("tol_sl", self.tol_sl),
            ("tol_psi", self.tol_psi),
            ("tol_f", self.tol_f),
            ("linear_tol", self.linear_tol),
        ] {
            if !(tol > 0.0 && tol.is_finite()) {
                v.push(format!("solver.{name} must be positive, got {tol}"));
            }
        }
        if self.max_sweeps == 0 {
            v.push("solver.max_sweeps must be at least 1".into());
        }
        for (name, w) in [
            ("omega_shock", self.omega_shock),
            ("omega_sl", self.omega_sl),
            ("omega_psi", self.omega_psi),
        ] {
            if !(w > 0.0 && w <= 1.0) {
                v.push(format!("solver.{name} must lie in (0, 1], got {w}"));
            }
        }
        v
    }
}

/// Reconstructed `(u, ρ, p)` on the flattened grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveFields {
    pub u_x: Array2<f64>,
    pub u_r: Array2<f64>,
    pub u_theta: Array2<f64>,
    pub rho: Array2<f64>,
    pub p: Array2<f64>,
}

impl PrimitiveFields {
    pub fn state(&self, i: usize, j: usize) -> GasState {
        GasState::new(
            self.u_x[[i, j]],
            self.u_r[[i, j]],
            self.u_theta[[i, j]],
            self.rho[[i, j]],
            self.p[[i, j]],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Inner,
    Middle,
    Outer,
    Picard,
}

/// One sweep of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub level: Level,
    pub outer: usize,
    pub middle: usize,
    pub inner: usize,
    pub change_phi: Option<f64>,
    pub change_f: Option<f64>,
    pub change_sl: Option<f64>,
    pub change_psi: Option<f64>,
    pub max_abs_f: f64,
    pub cg_iterations: usize,
    pub linear_residual: f64,
    /// Residuals of the state after the sweep; absent when it cannot be reconstructed.
    pub euler_max: Option<f64>,
    pub rh_max: Option<f64>,
    pub bernoulli_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub proxy: SmallnessProxy,
    pub message: String,
}

/// Convergence history of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub converged: bool,
    pub nesting: Nesting,
    pub n_y: usize,
    pub n_t: usize,
    pub sigma: f64,
    pub outer_sweeps: usize,
    pub middle_sweeps: usize,
    pub inner_sweeps: usize,
    pub linear_solves: usize,
    pub cg_iterations: usize,
    /// Worst relative residual over all accepted linear solves.
    pub max_linear_residual: f64,
    /// `change[n-3] / change[n]` over the last sweeps of the first inner loop that ran at
    /// least four sweeps.
    pub inner_contraction: Option<f64>,
    pub sweeps: Vec<SweepRecord>,
    pub failure: Option<Failure>,
}

impl IterationReport {
    fn new(cfg: &SolverConfig, sigma: f64) -> Self {
        Self {
            converged: false,
            nesting: cfg.nesting,
            n_y: cfg.n_y,
            n_t: cfg.n_t,
            sigma,
            outer_sweeps: 0,
            middle_sweeps: 0,
            inner_sweeps: 0,
            linear_solves: 0,
            cg_iterations: 0,
            max_linear_residual: 0.0,
            inner_contraction: None,
            sweeps: Vec::new(),
            failure: None,
        }
    }

    fn linear(&mut self, s: &SolveStats) {
        self.linear_solves += 1;
        self.cg_iterations += s.cg_iterations;
        self.max_linear_residual = self.max_linear_residual.max(s.relative_residual);
    }
}

/// Wall-clock timing, kept apart from the deterministic report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Timing {
    pub wall_seconds: f64,
    /// Wall-clock of each entry of [`IterationReport::sweeps`].
    pub sweep_seconds: Vec<f64>,
}

/// Converged shock and downstream flow.
#[derive(Debug, Clone)]
pub struct Solution {
    pub grid: FlattenedGrid,
    pub shock: ShockCurve,
    pub fields: FlowFields,
    pub primitive: PrimitiveFields,
    pub coefficients: LinearizedCoefficients,
    pub background: BackgroundShock,
    pub report: IterationReport,
    pub diagnostics: Diagnostics,
    pub timing: Timing,
}

/// `u = ∇φ + t`, `ρ = H(S, u)`, `p = Sρ^γ` at every node.
pub fn reconstruct_primitive(
    fields: &FlowFields,
    grid: &FlattenedGrid,
    shock: &ShockCurve,
    lc: &LinearizedCoefficients,
) -> Result<PrimitiveFields> {
    let kin = kinematics(fields, grid, &Metric::new(shock), lc.u0p);
    let mut rho = grid.zeros();
    let mut p = grid.zeros();
    for i in 0..grid.ny {
        for j in 0..grid.nt {
            let s = fields.entropy[[i, j]];
            let r = density_h(s, kin.q(i, j), &lc.consts)?;
            rho[[i, j]] = r;
            p[[i, j]] = s * r.powf(lc.consts.gamma);
        }
    }
    Ok(PrimitiveFields {
        u_x: kin.q_x,
        u_r: kin.q_r,
        u_theta: kin.t_theta,
        rho,
        p,
    })
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

struct Iteration<'a> {
    grid: FlattenedGrid,
    cfg: &'a SolverConfig,
    lc: LinearizedCoefficients,
    bg: BackgroundShock,
    sampler: UpstreamSampler,
    /// Upstream data at the radial nodes.
    up_states: Vec<GasState>,
    up_lambda: Vec<f64>,
    up_psi: Vec<f64>,
    up_dpsi: Vec<f64>,
    fields: FlowFields,
    shock: ShockCurve,
    report: IterationReport,
    last_stats: SolveStats,
    start: Instant,
    timing_marks: Vec<f64>,
    sweep_seconds: Vec<f64>,
}

impl<'a> Iteration<'a> {
    fn new(upstream: &UpstreamSolution, cfg: &'a SolverConfig) -> Result<Self> {
        let grid = FlattenedGrid::new(cfg.n_y, cfg.n_t)?;
        let bg = upstream.background;
        let lc = linearized_coefficients(&bg)?;
        let sampler = UpstreamSampler::new(upstream)?;
        let radii = grid.t_nodes();
        Ok(Self {
            grid,
            cfg,
            lc,
            bg,
            up_states: radii.iter().map(|&r| sampler.state(r)).collect(),
            up_lambda: radii.iter().map(|&r| sampler.lambda.eval(r)).collect(),
            up_psi: radii.iter().map(|&r| sampler.psi.eval(r)).collect(),
            up_dpsi: radii.iter().map(|&r| sampler.dpsi.eval(r)).collect(),
            sampler,
            fields: FlowFields::background(&grid, bg.s0p),
            shock: ShockCurve::flat(radii),
            report: IterationReport::new(cfg, upstream.sigma),
            last_stats: SolveStats::default(),
            start: Instant::now(),
            timing_marks: vec![0.0],
            sweep_seconds: Vec::new(),
        })
    }

    /// Potential solve followed by the shock update. Returns the relative changes of φ and f.
    fn potential_problem(&self) -> Result<EllipticProblem> {
        let grid = &self.grid;
        let metric = Metric::new(&self.shock);
        let kin = kinematics(&self.fields, grid, &metric, self.lc.u0p);
        let s_dev = self.fields.entropy.mapv(|s| s - self.lc.s0p);
        let flux = assemble_F(&s_dev, &kin, &self.lc)?;
        let t_shock: Vec<[f64; 2]> =
            (0..grid.nt).map(|j| [kin.t_x[[0, j]], kin.t_r[[0, j]]]).collect();
        let dphi_r: Vec<f64> = (0..grid.nt).map(|j| kin.dphi_r[[0, j]]).collect();
        let b = assemble_B(&t_shock, &metric.fprime, &dphi_r, &self.up_states, &self.lc)?;
        Ok(EllipticProblem::potential(grid, flux, b))
    }

    fn swirl_problem(&self) -> Result<EllipticProblem> {
        let grid = &self.grid;
        let metric = Metric::new(&self.shock);
        let kin = kinematics(&self.fields, grid, &metric, self.lc.u0p);
        let (_, ds_dr) = physical_gradient(&self.fields.entropy, grid, &metric);
        let (_, dl_dr) = physical_gradient(&self.fields.lambda, grid, &metric);
        let g = assemble_G(
            &self.fields.entropy,
            &self.fields.lambda,
            &ds_dr,
            &dl_dr,
            &kin,
            grid,
            &self.lc,
        )?;
        let (_, dpsi_r) = physical_gradient(&self.fields.psi, grid, &metric);
        let psi_row: Vec<f64> = self.fields.psi.row(0).to_vec();
        let dpsi_row: Vec<f64> = dpsi_r.row(0).to_vec();
        let zeros = vec![0.0; grid.nt];
        let a = assemble_A(
            &psi_row,
            &dpsi_row,
            &self.up_psi,
            &self.up_dpsi,
            &zeros,
            &metric.fprime,
            &grid.t_nodes(),
        );
        Ok(EllipticProblem::swirl(grid, g, a))
    }

    fn potential_step(&mut self) -> Result<(f64, f64)> {
        let grid = &self.grid;
        let problem = self.potential_problem()?;
        let (phi, stats) = System::assemble(&problem, grid, &self.shock, &self.lc)?
            .solve(Some(&self.fields.phi), self.cfg.linear_tol)?;
        self.report.linear(&stats);
        self.last_stats = stats;
        let dphi = max_abs_diff(&phi, &self.fields.phi) / self.lc.u0p;
        self.fields.phi = phi;
        let shock = update_shock(
            &self.fields.phi,
            grid,
            &self.shock,
            &self.sampler,
            &self.bg,
            ShockUpdate {
                omega: self.cfg.omega_shock,
            },
        )?;
        let df = shock
            .values()
            .iter()
            .zip(self.shock.values())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        self.shock = shock;
        Ok((dphi, df))
    }

    /// Post-shock entropy at the radial nodes for the current shock slope.
    fn shock_entropy(&self) -> Result<Vec<f64>> {
        let fp = self.shock.fprime_nodes();
        (0..self.grid.nt)
            .map(|j| s_sh(&self.up_states[j], Normal::of_shock(fp[j]), self.bg.gamma))
            .collect()
    }

    /// Streamline transport of (S, Λ). Returns the relative change.
    fn transport_step(&mut self) -> Result<f64> {
        let grid = &self.grid;
        let metric = Metric::new(&self.shock);
        let kin = kinematics(&self.fields, grid, &metric, self.lc.u0p);
        let floor = 0.5 * self.lc.rho0p * self.lc.u0p;
        let flux = mass_flux(&self.fields.entropy, &kin, grid, &metric, &self.lc.consts, floor)?;
        let trace = stream_function(&flux, grid)?;
        let rsh = trace_to_shock(&trace, grid)?;
        let s_shock = self.shock_entropy()?;
        let (s_new, l_new) = transport_from_shock(&s_shock, &self.up_lambda, &grid.t_nodes(), &rsh)?;
        let w = self.cfg.omega_sl;
        let s_new = &self.fields.entropy * (1.0 - w) + &s_new * w;
        let l_new = &self.fields.lambda * (1.0 - w) + &l_new * w;
        let change = (max_abs_diff(&s_new, &self.fields.entropy) / self.lc.s0p)
            .max(max_abs_diff(&l_new, &self.fields.lambda) / self.lc.u0p);
        self.fields.entropy = s_new;
        self.fields.lambda = l_new;
        Ok(change)
    }

    /// Swirl-potential solve. Returns the relative change of ψ.
    fn swirl_step(&mut self) -> Result<f64> {
        let grid = &self.grid;
        let problem = self.swirl_problem()?;
        let (psi, stats) = System::assemble(&problem, grid, &self.shock, &self.lc)?
            .solve(Some(&self.fields.psi), self.cfg.linear_tol)?;
        self.report.linear(&stats);
        self.last_stats = stats;
        let w = self.cfg.omega_psi;
        let psi = &self.fields.psi * (1.0 - w) + &psi * w;
        let change = max_abs_diff(&psi, &self.fields.psi) / self.lc.u0p;
        self.fields.psi = psi;
        Ok(change)
    }

    fn record(&mut self, level: Level, counters: (usize, usize, usize), changes: [Option<f64>; 4]) {
        let index = self.report.sweeps.len();
        let d = reconstruct_primitive(&self.fields, &self.grid, &self.shock, &self.lc)
            .ok()
            .map(|prim| {
                evaluate(&self.grid, &self.shock, &self.fields, &prim, &self.bg, &self.sampler)
            });
        self.report.sweeps.push(SweepRecord {
            index,
            level,
            outer: counters.0,
            middle: counters.1,
            inner: counters.2,
            change_phi: changes[0],
            change_f: changes[1],
            change_sl: changes[2],
            change_psi: changes[3],
            max_abs_f: self.shock.max_abs(),
            cg_iterations: self.last_stats.cg_iterations,
            linear_residual: self.last_stats.relative_residual,
            euler_max: d.as_ref().map(|d| d.euler_max_norm()),
            rh_max: d.as_ref().map(|d| d.rh_max_norm()),
            bernoulli_deviation: d.as_ref().map(|d| d.bernoulli_deviation),
        });
        if let Some(last) = self.timing_marks.last().copied() {
            let now = self.start.elapsed().as_secs_f64();
            self.timing_marks.push(now);
            self.sweep_seconds.push(now - last);
        }
        log::debug!(
            "sweep {index} {level:?} ({}, {}, {}): changes {changes:?}, max|f| {:.3e}",
            counters.0,
            counters.1,
            counters.2,
            self.shock.max_abs()
        );
        for c in changes.iter().flatten() {
            if !c.is_finite() {
                self.report.failure = Some(Failure {
                    proxy: SmallnessProxy::Vacuum,
                    message: "non-finite field change".into(),
                });
            }
        }
    }

    fn check_finite(&self) -> Result<()> {
        if self.report.failure.is_some() {
            return Err(Error::Domain("non-finite field change".into()));
        }
        Ok(())
    }

    fn run_nested(&mut self) -> Result<()> {
        let cap = self.cfg.max_sweeps;
        for outer in 1..=cap {
            self.report.outer_sweeps = outer;
            let mut middle_done = false;
            for middle in 1..=cap {
                self.report.middle_sweeps += 1;
                let mut inner_done = false;
                let mut history = Vec::new();
                for inner in 1..=cap {
                    self.report.inner_sweeps += 1;
                    let (dphi, df) = self.potential_step()?;
                    self.record(Level::Inner, (outer, middle, inner), [Some(dphi), Some(df), None, None]);
                    self.check_finite()?;
                    history.push(dphi.max(df));
                    if dphi <= self.cfg.tol_phi && df <= self.cfg.tol_f {
                        inner_done = true;
                        break;
                    }
                }
                if self.report.inner_contraction.is_none() && history.len() >= 4 {
                    let n = history.len() - 1;
                    self.report.inner_contraction = Some(history[n - 3] / history[n]);
                }
                if !inner_done {
                    return Err(sweep_cap("inner φ/f loop", cap));
                }
                let dsl = self.transport_step()?;
                self.record(Level::Middle, (outer, middle, 0), [None, None, Some(dsl), None]);
                self.check_finite()?;
                if dsl <= self.cfg.tol_sl {
                    middle_done = true;
                    break;
                }
            }
            if !middle_done {
                return Err(sweep_cap("middle (S, Λ) loop", cap));
            }
            let dpsi = self.swirl_step()?;
            self.record(Level::Outer, (outer, 0, 0), [None, None, None, Some(dpsi)]);
            self.check_finite()?;
            if dpsi <= self.cfg.tol_psi {
                return Ok(());
            }
        }
        Err(sweep_cap("outer ψ loop", cap))
    }

    fn run_flattened(&mut self) -> Result<()> {
        let cap = self.cfg.max_sweeps;
        let mut history = Vec::new();
        for sweep in 1..=cap {
            self.report.outer_sweeps = sweep;
            self.report.middle_sweeps = sweep;
            self.report.inner_sweeps = sweep;
            let (dphi, df) = self.potential_step()?;
            let dsl = self.transport_step()?;
            let dpsi = self.swirl_step()?;
            self.record(Level::Picard, (sweep, sweep, sweep), [Some(dphi), Some(df), Some(dsl), Some(dpsi)]);
            self.check_finite()?;
            history.push(dphi.max(df));
            if dphi <= self.cfg.tol_phi
                && df <= self.cfg.tol_f
                && dsl <= self.cfg.tol_sl
                && dpsi <= self.cfg.tol_psi
            {
                if history.len() >= 4 {
                    let n = history.len() - 1;
                    self.report.inner_contraction = Some(history[n - 3] / history[n]);
                }
                return Ok(());
            }
        }
        Err(sweep_cap("flattened Picard loop", cap))
    }
}

/// The potential and swirl systems assembled at a converged state, for inspection.
pub fn linear_systems(upstream: &UpstreamSolution, solution: &Solution, config: &SolverConfig) -> Result<(System, System)> {
    let mut it = Iteration::new(upstream, config)?;
    it.fields = solution.fields.clone();
    it.shock = solution.shock.clone();
    let potential = System::assemble(&it.potential_problem()?, &it.grid, &it.shock, &it.lc)?;
    let swirl = System::assemble(&it.swirl_problem()?, &it.grid, &it.shock, &it.lc)?;
    Ok((potential, swirl))
}

fn sweep_cap(what: &str, cap: usize) -> Error {
    Error::Degeneracy {
        proxy: SmallnessProxy::SweepCap,
        location: what.to_string(),
        reason: format!("no convergence within {cap} sweeps"),
    }
}

fn divergence_proxy(e: &Error) -> SmallnessProxy {
    match e.proxy() {
        Some(p) => p,
        None => match e {
            Error::Precondition(_) => SmallnessProxy::ShockEscape,
            _ => SmallnessProxy::Vacuum,
        },
    }
}

/// Runs the fixed-point iteration from the background state.
///
/// Divergence of any level, and every failure of a smallness proxy along the way, is
/// returned as [`Error::Diverged`] carrying the history up to that point.
pub fn solve_transonic_shock(upstream: &UpstreamSolution, config: &SolverConfig) -> Result<Solution> {
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let mut it = Iteration::new(upstream, config)?;
    let outcome = match config.nesting {
        Nesting::Nested => it.run_nested(),
        Nesting::FlattenedPicard => it.run_flattened(),
    };
    if let Err(e) = outcome {
        let proxy = divergence_proxy(&e);
        let message = e.to_string();
        it.report.failure = Some(Failure {
            proxy,
            message: message.clone(),
        });
        return Err(Error::Diverged {
            proxy,
            message,
            report: Box::new(it.report),
        });
    }
    it.report.converged = true;
    log::info!(
        "converged after {} outer, {} middle, {} inner sweeps",
        it.report.outer_sweeps,
        it.report.middle_sweeps,
        it.report.inner_sweeps
    );
    let primitive = reconstruct_primitive(&it.fields, &it.grid, &it.shock, &it.lc)?;
    let timing = Timing {
        wall_seconds: 0.0,
        sweep_seconds: std::mem::take(&mut it.sweep_seconds),
    };
    let start = it.start;
    let mut solution = Solution {
        grid: it.grid,
        shock: it.shock,
        fields: it.fields,
        primitive,
        coefficients: it.lc,
        background: it.bg,
        report: it.report,
        diagnostics: Diagnostics::default(),
        timing,
    };
    solution.diagnostics = diagnostics(&solution, upstream)?;
    solution.timing.wall_seconds = start.elapsed().as_secs_f64();
    Ok(solution)
}
