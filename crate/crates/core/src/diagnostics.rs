//! Measurements on a reconstructed solution: Euler and Rankine–Hugoniot residuals,
//! Bernoulli deviation, flow classification, and the σ-scaling study.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::driver::{solve_transonic_shock, PrimitiveFields, Solution, SolverConfig};
use crate::error::Result;
use crate::fields::{d_t, d_y, FlowFields};
use crate::gasdyn::{rh_residual, BackgroundShock, Normal};
use crate::geometry::{FlattenedGrid, ShockCurve};
use crate::upstream::{build_parallel_swirl_inflow, InflowSpec, UpstreamSampler, UpstreamSolution};

/// Residual and admissibility measurements of one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    /// Max and RMS over interior nodes of the continuity, r-momentum, entropy and swirl
    /// transport equations.
    pub euler_max: [f64; 4],
    pub euler_rms: [f64; 4],
    /// Max over shock nodes of each component of the jump residual.
    pub rh_max: [f64; 5],
    pub bernoulli_deviation: f64,
    pub mach_downstream_max: f64,
    pub mach_upstream_min: f64,
    /// `min_j min(u⁻·n − u·n, u·n)` on the shock.
    pub admissibility_margin: f64,
    pub rho_min: f64,
    pub axial_velocity_min: f64,
    pub axial_velocity_floor: f64,
    /// Max of `(N_y ∂_y + N_t ∂_t) S` over interior nodes.
    pub streamline_residual: f64,
    /// `max_i |w(y_i, 1) − w(0, 1)|`.
    pub mass_flux_variation: f64,
    /// Max over y of the one-sided `∂_t²ψ` at the axis.
    pub psi_tt_axis: f64,
    /// `min S_sh − min S`; positive means the entropy dipped below its shock values.
    pub entropy_undershoot: f64,
    pub shock_max: f64,
    /// `‖(u, ρ, p) − (u₀⁺, 0, 0, ρ₀⁺, p₀⁺)‖∞`.
    pub state_deviation: f64,
    /// `max(‖S − S₀⁺‖∞, ‖Λ‖∞)`.
    pub sl_deviation: f64,
}

impl Diagnostics {
    /// Checks that must hold for an accepted solution.
    pub fn failures(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.bernoulli_deviation <= 1e-10) {
            v.push(format!("Bernoulli deviation {:.3e}", self.bernoulli_deviation));
        }
        if !(self.mach_downstream_max < 1.0) {
            v.push(format!("downstream Mach reaches {:.4}", self.mach_downstream_max));
        }
        if !(self.mach_upstream_min > 1.0) {
            v.push(format!("upstream Mach drops to {:.4}", self.mach_upstream_min));
        }
        if !(self.admissibility_margin > 0.0) {
            v.push(format!("admissibility margin {:.3e}", self.admissibility_margin));
        }
        if !(self.rho_min > 0.0) {
            v.push(format!("density minimum {:.3e}", self.rho_min));
        }
        if !(self.axial_velocity_min > self.axial_velocity_floor) {
            v.push(format!(
                "axial velocity {:.4} below {:.4}",
                self.axial_velocity_min, self.axial_velocity_floor
            ));
        }
        v
    }

    pub fn healthy(&self) -> bool {
        self.failures().is_empty()
    }

    pub fn euler_max_norm(&self) -> f64 {
        self.euler_max.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn rh_max_norm(&self) -> f64 {
        self.rh_max.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Diagnostics of a solver result.
pub fn diagnostics(solution: &Solution, upstream: &UpstreamSolution) -> Result<Diagnostics> {
    let sampler = UpstreamSampler::new(upstream)?;
    Ok(evaluate(
        &solution.grid,
        &solution.shock,
        &solution.fields,
        &solution.primitive,
        &solution.background,
        &sampler,
    ))
}

/// Physical gradient of a nodal field with centered differences (one-sided at the ends).
fn gradient(
    field: &Array2<f64>,
    grid: &FlattenedGrid,
    l: &[f64],
    fp: &[f64],
) -> (Array2<f64>, Array2<f64>) {
    let fy = d_y(field, grid.hy());
    let ft = d_t(field, grid.ht());
    let dx = Array2::from_shape_fn(field.dim(), |(i, j)| fy[[i, j]] / l[j]);
    let dr = Array2::from_shape_fn(field.dim(), |(i, j)| {
        ft[[i, j]] + (grid.y(i) - 1.0) * fp[j] * fy[[i, j]] / l[j]
    });
    (dx, dr)
}

/// Pointwise residuals of the four axisymmetric equations at interior nodes.
pub fn euler_residuals(
    grid: &FlattenedGrid,
    shock: &ShockCurve,
    prim: &PrimitiveFields,
    gamma: f64,
) -> [Array2<f64>; 4] {
    let l: Vec<f64> = shock.values().iter().map(|f| 1.0 - f).collect();
    let fp = shock.fprime_nodes();
    let mx = &prim.rho * &prim.u_x;
    let mr = &prim.rho * &prim.u_r;
    let entropy = Array2::from_shape_fn(prim.rho.dim(), |(i, j)| {
        prim.p[[i, j]] / prim.rho[[i, j]].powf(gamma)
    });
    let lambda = Array2::from_shape_fn(prim.rho.dim(), |(i, j)| grid.t(j) * prim.u_theta[[i, j]]);
    let (mx_x, _) = gradient(&mx, grid, &l, &fp);
    let (_, mr_r) = gradient(&mr, grid, &l, &fp);
    let (ur_x, ur_r) = gradient(&prim.u_r, grid, &l, &fp);
    let (_, p_r) = gradient(&prim.p, grid, &l, &fp);
    let (s_x, s_r) = gradient(&entropy, grid, &l, &fp);
    let (lam_x, lam_r) = gradient(&lambda, grid, &l, &fp);
    let mut out = [grid.zeros(), grid.zeros(), grid.zeros(), grid.zeros()];
    for i in 1..grid.ny - 1 {
        for j in 1..grid.nt - 1 {
            let r = grid.t(j);
            let (rho, ux, ur, ut) = (
                prim.rho[[i, j]],
                prim.u_x[[i, j]],
                prim.u_r[[i, j]],
                prim.u_theta[[i, j]],
            );
            out[0][[i, j]] = mx_x[[i, j]] + mr_r[[i, j]] + mr[[i, j]] / r;
            out[1][[i, j]] =
                rho * (ux * ur_x[[i, j]] + ur * ur_r[[i, j]]) - rho * ut * ut / r + p_r[[i, j]];
            out[2][[i, j]] = rho * (ux * s_x[[i, j]] + ur * s_r[[i, j]]);
            out[3][[i, j]] = rho * (ux * lam_x[[i, j]] + ur * lam_r[[i, j]]);
        }
    }
    out
}

/// Jump residuals between the upstream state at `r_j` and the shock row of `prim`.
pub fn shock_jump_residuals(
    grid: &FlattenedGrid,
    shock: &ShockCurve,
    prim: &PrimitiveFields,
    sampler: &UpstreamSampler,
    gamma: f64,
) -> Vec<[f64; 5]> {
    let fp = shock.fprime_nodes();
    (0..grid.nt)
        .map(|j| {
            let up = sampler.state(grid.t(j));
            rh_residual(&up, &prim.state(0, j), Normal::of_shock(fp[j]), gamma)
        })
        .collect()
}

/// All measurements from the stored fields. Works equally on freshly solved and on re-read
/// data.
pub fn evaluate(
    grid: &FlattenedGrid,
    shock: &ShockCurve,
    fields: &FlowFields,
    prim: &PrimitiveFields,
    bg: &BackgroundShock,
    sampler: &UpstreamSampler,
) -> Diagnostics {
    let gamma = bg.gamma;
    let (ny, nt) = (grid.ny, grid.nt);
    let mut d = Diagnostics {
        axial_velocity_floor: 0.5 * bg.u0p,
        shock_max: shock.max_abs(),
        ..Diagnostics::default()
    };

    let euler = euler_residuals(grid, shock, prim, gamma);
    let interior = ((ny - 2) * (nt - 2)).max(1) as f64;
    for (k, e) in euler.iter().enumerate() {
        d.euler_max[k] = e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d.euler_rms[k] = (e.iter().map(|v| v * v).sum::<f64>() / interior).sqrt();
    }

    let fp = shock.fprime_nodes();
    d.admissibility_margin = f64::INFINITY;
    let mut s_sh_min = f64::INFINITY;
    for (j, jump) in shock_jump_residuals(grid, shock, prim, sampler, gamma).iter().enumerate() {
        for k in 0..5 {
            d.rh_max[k] = d.rh_max[k].max(jump[k].abs());
        }
        let n = Normal::of_shock(fp[j]);
        let up = sampler.state(grid.t(j));
        let un = prim.state(0, j).normal_velocity(n);
        d.admissibility_margin = d.admissibility_margin.min((up.normal_velocity(n) - un).min(un));
        s_sh_min = s_sh_min.min(fields.entropy[[0, j]]);
    }

    d.mach_downstream_max = 0.0;
    d.rho_min = f64::INFINITY;
    d.axial_velocity_min = f64::INFINITY;
    let mut s_min = f64::INFINITY;
    for i in 0..ny {
        for j in 0..nt {
            let s = prim.state(i, j);
            let b = 0.5 * s.speed_sq() + gamma * s.p / ((gamma - 1.0) * s.rho);
            d.bernoulli_deviation = d.bernoulli_deviation.max((b - bg.b0).abs());
            let mach = (s.speed_sq() * s.rho / (gamma * s.p)).sqrt();
            d.mach_downstream_max = d.mach_downstream_max.max(if mach.is_nan() { f64::INFINITY } else { mach });
            d.rho_min = d.rho_min.min(s.rho);
            d.axial_velocity_min = d.axial_velocity_min.min(s.u_x);
            s_min = s_min.min(fields.entropy[[i, j]]);
            let dev = [
                (s.u_x - bg.u0p).abs(),
                s.u_r.abs(),
                s.u_theta.abs(),
                (s.rho - bg.rho0p()).abs(),
                (s.p - bg.p0p()).abs(),
            ];
            d.state_deviation = dev.iter().fold(d.state_deviation, |m, v| m.max(*v));
            d.sl_deviation = d
                .sl_deviation
                .max((fields.entropy[[i, j]] - bg.s0p).abs())
                .max(fields.lambda[[i, j]].abs());
        }
    }
    d.entropy_undershoot = s_sh_min - s_min;

    d.mach_upstream_min = f64::INFINITY;
    for j in 0..nt {
        let s = sampler.state(grid.t(j));
        let mach = (s.speed_sq() * s.rho / (gamma * s.p)).sqrt();
        d.mach_upstream_min = d.mach_upstream_min.min(mach);
    }

    // Flattened mass flux from the primitive fields.
    let l: Vec<f64> = shock.values().iter().map(|f| 1.0 - f).collect();
    let n_y = Array2::from_shape_fn((ny, nt), |(i, j)| {
        prim.rho[[i, j]] * (prim.u_x[[i, j]] + (grid.y(i) - 1.0) * fp[j] * prim.u_r[[i, j]])
    });
    let n_t = Array2::from_shape_fn((ny, nt), |(i, j)| l[j] * prim.rho[[i, j]] * prim.u_r[[i, j]]);
    let sy = d_y(&fields.entropy, grid.hy());
    let st = d_t(&fields.entropy, grid.ht());
    for i in 1..ny - 1 {
        for j in 1..nt - 1 {
            let v = n_y[[i, j]] * sy[[i, j]] + n_t[[i, j]] * st[[i, j]];
            d.streamline_residual = d.streamline_residual.max(v.abs());
        }
    }
    let ht = grid.ht();
    let total = |i: usize| {
        (1..nt).fold(0.0, |w, j| {
            w + 0.5 * ht * (grid.t(j - 1) * n_y[[i, j - 1]] + grid.t(j) * n_y[[i, j]])
        })
    };
    let w0 = total(0);
    d.mass_flux_variation = (0..ny).fold(0.0f64, |m, i| m.max((total(i) - w0).abs()));

    let psi = &fields.psi;
    d.psi_tt_axis = (0..ny).fold(0.0f64, |m, i| {
        let v = (2.0 * psi[[i, 0]] - 5.0 * psi[[i, 1]] + 4.0 * psi[[i, 2]] - psi[[i, 3]]) / (ht * ht);
        m.max(v.abs())
    });
    d
}

/// One amplitude of a σ-scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub factor: f64,
    pub sigma: f64,
    pub shock_max: f64,
    pub state_deviation: f64,
    pub sl_deviation: f64,
    /// Deviations divided by σ; `None` when σ = 0.
    pub shock_ratio: Option<f64>,
    pub state_ratio: Option<f64>,
    pub sl_ratio: Option<f64>,
}

/// Deviation-to-σ ratios over a family of scaled inflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// `max_k |ratio_k / ratio_ref − 1|` with the first nonzero-σ row as reference.
    pub shock_spread: f64,
    pub state_spread: f64,
    pub sl_spread: f64,
}

impl ScalingTable {
    pub fn max_spread(&self) -> f64 {
        self.shock_spread.max(self.state_spread).max(self.sl_spread)
    }
}

fn spread(ratios: impl Iterator<Item = Option<f64>>) -> f64 {
    let vals: Vec<f64> = ratios.flatten().collect();
    match vals.first() {
        Some(&r0) if r0 != 0.0 => vals.iter().fold(0.0f64, |m, r| m.max((r / r0 - 1.0).abs())),
        _ => 0.0,
    }
}

/// Solves with the amplitudes of `base` scaled by each factor and tabulates the response.
pub fn sigma_scaling_study(
    base: &InflowSpec,
    factors: &[f64],
    config: &SolverConfig,
    gamma: f64,
) -> Result<ScalingTable> {
    let mut rows = Vec::with_capacity(factors.len());
    for &factor in factors {
        let upstream = build_parallel_swirl_inflow(&base.scaled(factor), gamma)?;
        let sol = solve_transonic_shock(&upstream, config)?;
        let d = &sol.diagnostics;
        let sigma = upstream.sigma;
        let ratio = |v: f64| (sigma > 0.0).then(|| v / sigma);
        rows.push(ScalingRow {
            factor,
            sigma,
            shock_max: d.shock_max,
            state_deviation: d.state_deviation,
            sl_deviation: d.sl_deviation,
            shock_ratio: ratio(d.shock_max),
            state_ratio: ratio(d.state_deviation),
            sl_ratio: ratio(d.sl_deviation),
        });
    }
    Ok(ScalingTable {
        shock_spread: spread(rows.iter().map(|r| r.shock_ratio)),
        state_spread: spread(rows.iter().map(|r| r.state_ratio)),
        sl_spread: spread(rows.iter().map(|r| r.sl_ratio)),
        rows,
    })
}
