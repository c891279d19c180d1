//! Built-in oracle batteries behind `transonic verify`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::diagnostics::sigma_scaling_study;
use crate::driver::{solve_transonic_shock, SolverConfig};
use crate::elliptic::{
    linearized_coefficients, solve_potential, solve_swirl, EdgeCondition, EllipticProblem,
    LinearizedCoefficients, OperatorKind,
};
use crate::error::{Error, Result};
use crate::gasdyn::{background_downstream, post_shock_state, rh_residual, s_sh, BackgroundShock, GasState, Normal};
use crate::geometry::{extend_field, unflatten, FlattenedGrid, ShockCurve, EXTENSION_COEFFS};
use crate::upstream::{
    build_parallel_swirl_inflow, integrate_radial_pressure, radial_momentum_residual, InflowSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Battery {
    Jump,
    Mms,
    Extension,
    Scaling,
    Upstream,
    Background,
}

impl Battery {
    pub const ALL: [Battery; 6] = [
        Battery::Jump,
        Battery::Extension,
        Battery::Upstream,
        Battery::Mms,
        Battery::Background,
        Battery::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Battery::Jump => "jump",
            Battery::Mms => "mms",
            Battery::Extension => "extension",
            Battery::Scaling => "scaling",
            Battery::Upstream => "upstream",
            Battery::Background => "background",
        }
    }
}

impl fmt::Display for Battery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Battery {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Battery::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown battery {s:?}")))
    }
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub battery: Battery,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(battery: Battery, name: &str, passed: bool, detail: String) -> Self {
        Self {
            battery,
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Settings of the batteries that run the nonlinear solver.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub inflow: InflowSpec,
    pub solver: SolverConfig,
    pub gamma: f64,
    pub factors: Vec<f64>,
    /// Column counts of the MMS refinement.
    pub mms_sizes: Vec<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            inflow: InflowSpec::new(0.02, 0.01),
            solver: SolverConfig::with_grid(65, 33),
            gamma: 1.4,
            factors: vec![1.0, 0.5, 0.25],
            mms_sizes: vec![65, 129, 257],
        }
    }
}

pub fn run_battery(battery: Battery, opts: &VerifyOptions) -> Vec<Check> {
    let out = match battery {
        Battery::Jump => jump_battery(),
        Battery::Mms => mms_battery(&opts.mms_sizes),
        Battery::Extension => extension_battery(),
        Battery::Scaling => scaling_battery(opts),
        Battery::Upstream => upstream_battery(opts.gamma),
        Battery::Background => background_battery(opts),
    };
    out.unwrap_or_else(|e| vec![Check::new(battery, "battery", false, e.to_string())])
}

fn jump_battery() -> Result<Vec<Check>> {
    let b = Battery::Jump;
    let bg = background_downstream(2.0, 1.0, 1.0 / 1.4, 1.4)?;
    let err = (bg.u0p - 0.75).abs().max((bg.rho0p() - 8.0 / 3.0).abs()).max((bg.p0p() - 45.0 / 14.0).abs());
    let mut out = vec![Check::new(
        b,
        "background downstream state",
        err <= 1e-12,
        format!("max error {err:.2e}"),
    )];
    let mut worst: f64 = 0.0;
    let mut entropy_ok = true;
    for a in 0..20 {
        let mach = 1.05 + (4.0 - 1.05) * a as f64 / 19.0;
        for k in 0..20 {
            let fp = -0.3 + 0.6 * k as f64 / 19.0;
            let n = Normal::of_shock(fp);
            // Normal Mach number `mach`; the tangential part is a fixed fraction of it.
            let (rho, p): (f64, f64) = (1.0, 1.0 / 1.4);
            let c = (1.4 * p / rho).sqrt();
            let un = mach * c;
            let ut = 0.3 * un;
            let tau = n.tangent();
            let up = GasState::new(un * n.x + ut * tau[0], un * n.r + ut * tau[1], 0.1, rho, p);
            let down = post_shock_state(&up, n, 1.4)?;
            let res = rh_residual(&up, &down, n, 1.4);
            worst = res.iter().fold(worst, |m, v| m.max(v.abs()));
            entropy_ok &= s_sh(&up, n, 1.4)? >= up.entropy(1.4);
        }
    }
    out.push(Check::new(b, "Rankine-Hugoniot sweep", worst < 1e-12, format!("max residual {worst:.2e}")));
    out.push(Check::new(b, "entropy increase", entropy_ok, String::new()));
    Ok(out)
}

fn extension_battery() -> Result<Vec<Check>> {
    let b = Battery::Extension;
    let moment = |m: i32| {
        EXTENSION_COEFFS
            .iter()
            .enumerate()
            .map(|(k, c)| c * (-1.0 / (k + 1) as f64).powi(m))
            .sum::<f64>()
    };
    let mut out = Vec::new();
    let err = (0..3).map(|m| (moment(m) - 1.0).abs()).fold(0.0, f64::max);
    out.push(Check::new(b, "moment identities m = 0, 1, 2", err <= 1e-13, format!("max error {err:.2e}")));
    let defect = moment(3);
    out.push(Check::new(
        b,
        "cubic moment defect",
        (defect + 3.0).abs() <= 1e-13,
        format!("m = 3 sum {defect}"),
    ));
    let grid = FlattenedGrid::new(33, 9)?;
    let check = |g: &dyn Fn(f64) -> f64| {
        let field = Array2::from_shape_fn((grid.ny, grid.nt), |(i, _)| g(grid.y(i)));
        let (ext, ys) = extend_field(&field, &grid);
        ys.iter()
            .enumerate()
            .fold(0.0f64, |m, (k, &y)| m.max((ext[[k, 3]] - g(y)).abs()))
    };
    let quad = check(&|y| 1.0 - 2.0 * y + 3.0 * y * y);
    out.push(Check::new(b, "quadratics extended exactly", quad <= 1e-12, format!("max error {quad:.2e}")));
    let cubic = check(&|y| y * y * y);
    out.push(Check::new(b, "cubics not reproduced", cubic > 1e-3, format!("max error {cubic:.2e}")));
    Ok(out)
}

fn upstream_battery(gamma: f64) -> Result<Vec<Check>> {
    let b = Battery::Upstream;
    let spec = InflowSpec {
        n_radial: 513,
        ..InflowSpec::new(0.05, 0.02)
    };
    let coarse = integrate_radial_pressure(&spec, gamma, 513);
    let fine = integrate_radial_pressure(&spec, gamma, 1025);
    let rk = coarse
        .iter()
        .enumerate()
        .fold(0.0f64, |m, (j, p)| m.max((p - fine[2 * j]).abs()));
    let sol = build_parallel_swirl_inflow(&spec, gamma)?;
    let mom = radial_momentum_residual(&sol).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = vec![
        Check::new(b, "RK4 against double resolution", rk < 1e-8, format!("max difference {rk:.2e}")),
        Check::new(b, "radial momentum residual", mom < 1e-8, format!("max residual {mom:.2e}")),
    ];
    let err = |n: usize| -> Result<f64> {
        let s = build_parallel_swirl_inflow(&InflowSpec { n_radial: n, ..spec.clone() }, gamma)?;
        Ok(roundtrip_error(&s.r, &s.u_x, &s.psi))
    };
    let (e1, e2) = (err(65)?, err(129)?);
    let ratio = e1 / e2;
    out.push(Check::new(
        b,
        "decomposition roundtrip is second order",
        (3.4..=4.6).contains(&ratio),
        format!("errors {e1:.2e}, {e2:.2e}, ratio {ratio:.2}"),
    ));
    Ok(out)
}

/// Max over interior samples of `|c + ψ/r + ∂_rψ − u_x|`, with `c = 2∫₀¹ r u_x dr` the
/// constant axial slope of `φ⁻` and `∂_rψ` by centred differences.
fn roundtrip_error(r: &[f64], u_x: &[f64], psi: &[f64]) -> f64 {
    let n = r.len();
    let h = r[1] - r[0];
    let c = 2.0 * (1..n).map(|j| 0.5 * h * (r[j - 1] * u_x[j - 1] + r[j] * u_x[j])).sum::<f64>();
    (1..n - 1).fold(0.0f64, |m, j| {
        let dpsi = (psi[j + 1] - psi[j - 1]) / (2.0 * h);
        m.max((c + psi[j] / r[j] + dpsi - u_x[j]).abs())
    })
}

/// Manufactured solution with its gradient and the forcing of its operator.
struct Manufactured {
    value: fn(f64, f64) -> f64,
    grad: fn(f64, f64) -> [f64; 2],
    forcing: fn(f64, f64, &LinearizedCoefficients) -> f64,
}

fn potential_mms() -> Manufactured {
    // φ = cos(πx)(1 − r²)²
    Manufactured {
        value: |x, r| (PI * x).cos() * (1.0 - r * r).powi(2),
        grad: |x, r| {
            [
                -PI * (PI * x).sin() * (1.0 - r * r).powi(2),
                -4.0 * r * (1.0 - r * r) * (PI * x).cos(),
            ]
        },
        forcing: |x, r, lc| {
            let c = (PI * x).cos();
            lc.a11 * (-PI * PI) * c * (1.0 - r * r).powi(2) + lc.a22 * c * (16.0 * r * r - 8.0)
        },
    }
}

fn swirl_mms() -> Manufactured {
    // ψ = r(1 − r²)cos(πx/2)
    Manufactured {
        value: |x, r| r * (1.0 - r * r) * (0.5 * PI * x).cos(),
        grad: |x, r| {
            [
                -0.5 * PI * r * (1.0 - r * r) * (0.5 * PI * x).sin(),
                (1.0 - 3.0 * r * r) * (0.5 * PI * x).cos(),
            ]
        },
        forcing: |x, r, _| {
            let c = (0.5 * PI * x).cos();
            -8.0 * r * c - 0.25 * PI * PI * r * (1.0 - r * r) * c
        },
    }
}

/// Max nodal error of the manufactured problem on an `n × (n-1)/2+1` grid.
pub fn mms_error(kind: OperatorKind, shock_amplitude: f64, n: usize) -> Result<f64> {
    let grid = FlattenedGrid::new(n, (n - 1) / 2 + 1)?;
    let radii = grid.t_nodes();
    let f: Vec<f64> = radii.iter().map(|&r| shock_amplitude * (PI * r).cos()).collect();
    let shock = ShockCurve::new(radii.clone(), f)?;
    let lc = linearized_coefficients(&BackgroundShock::reference())?;
    let m = match kind {
        OperatorKind::Potential => potential_mms(),
        OperatorKind::Swirl => swirl_mms(),
    };
    let (ax, ar) = match kind {
        OperatorKind::Potential => (lc.a11, lc.a22),
        OperatorKind::Swirl => (1.0, 1.0),
    };
    let phys = |i: usize, j: usize| unflatten(grid.y(i), grid.t(j), &shock);
    let source = Array2::from_shape_fn((grid.ny, grid.nt), |(i, j)| {
        let (x, r) = phys(i, j);
        (m.forcing)(x, r, &lc)
    });
    let fp = shock.fprime_nodes();
    let shock_flux: Vec<f64> = (0..grid.nt)
        .map(|j| {
            let (x, r) = phys(0, j);
            let g = (m.grad)(x, r);
            (-ax * g[0] + ar * fp[j] * g[1]) / (1.0 + fp[j] * fp[j]).sqrt()
        })
        .collect();
    let exact = Array2::from_shape_fn((grid.ny, grid.nt), |(i, j)| {
        let (x, r) = phys(i, j);
        (m.value)(x, r)
    });
    let solution = match kind {
        OperatorKind::Potential => {
            let problem = EllipticProblem {
                kind,
                flux: None,
                source: Some(source),
                shock: EdgeCondition::Flux(shock_flux),
                exit: EdgeCondition::Dirichlet((0..grid.nt).map(|j| exact[[grid.ny - 1, j]]).collect()),
                wall: EdgeCondition::Flux((0..grid.ny).map(|i| ar * (m.grad)(phys(i, grid.nt - 1).0, 1.0)[1]).collect()),
                axis: EdgeCondition::Flux(vec![0.0; grid.ny]),
            };
            solve_potential(&problem, &grid, &shock, &lc, None)?.0
        }
        OperatorKind::Swirl => {
            let problem = EllipticProblem {
                kind,
                flux: None,
                source: Some(source),
                shock: EdgeCondition::Flux(shock_flux),
                exit: EdgeCondition::Flux((0..grid.nt).map(|j| (m.grad)(1.0, grid.t(j))[0]).collect()),
                wall: EdgeCondition::Dirichlet(vec![0.0; grid.ny]),
                axis: EdgeCondition::Dirichlet(vec![0.0; grid.ny]),
            };
            solve_swirl(&problem, &grid, &shock, &lc, None)?.0
        }
    };
    Ok(solution
        .iter()
        .zip(exact.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

fn mms_battery(sizes: &[usize]) -> Result<Vec<Check>> {
    let b = Battery::Mms;
    let mut out = Vec::new();
    for (kind, label) in [(OperatorKind::Potential, "potential"), (OperatorKind::Swirl, "swirl")] {
        for (amp, shape) in [(0.0, "flat"), (0.05, "curved")] {
            let errs: Vec<f64> = sizes.iter().map(|&n| mms_error(kind, amp, n)).collect::<Result<_>>()?;
            let ratios: Vec<f64> = errs.windows(2).map(|w| w[0] / w[1]).collect();
            let ok = ratios.iter().all(|r| (3.4..=4.6).contains(r));
            out.push(Check::new(
                b,
                &format!("{label} solver, {shape} shock"),
                ok,
                format!(
                    "errors {}; ratios {}",
                    errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", "),
                    ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
                ),
            ));
        }
    }
    Ok(out)
}

fn background_battery(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let b = Battery::Background;
    let up = build_parallel_swirl_inflow(&opts.inflow.scaled(0.0), opts.gamma)?;
    let sol = solve_transonic_shock(&up, &opts.solver)?;
    let f = sol.shock.max_abs();
    let dev = sol.diagnostics.state_deviation.max(sol.diagnostics.sl_deviation);
    Ok(vec![
        Check::new(b, "shock stays flat", f <= 1e-10, format!("max |f| {f:.2e}")),
        Check::new(b, "fields stay at the background", dev <= 1e-10, format!("max deviation {dev:.2e}")),
        Check::new(
            b,
            "converges in at most two outer sweeps",
            sol.report.outer_sweeps <= 2,
            format!("{} outer sweeps", sol.report.outer_sweeps),
        ),
    ])
}

fn scaling_battery(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let b = Battery::Scaling;
    let table = sigma_scaling_study(&opts.inflow, &opts.factors, &opts.solver, opts.gamma)?;
    let mut out: Vec<Check> = table
        .rows
        .iter()
        .map(|r| {
            Check::new(
                b,
                &format!("factor {}", r.factor),
                true,
                format!(
                    "sigma {:.4e}  |f| {:.4e}  |U-U0| {:.4e}  |(S,L)-(S0,0)| {:.4e}  ratios {}",
                    r.sigma,
                    r.shock_max,
                    r.state_deviation,
                    r.sl_deviation,
                    match (r.shock_ratio, r.state_ratio, r.sl_ratio) {
                        (Some(a), Some(c), Some(d)) => format!("{a:.4} {c:.4} {d:.4}"),
                        _ => "-".into(),
                    }
                ),
            )
        })
        .collect();
    for (name, spread) in [
        ("|f|/sigma constant within 20%", table.shock_spread),
        ("|U-U0|/sigma constant within 20%", table.state_spread),
        ("|(S,L)-(S0,0)|/sigma constant within 20%", table.sl_spread),
    ] {
        out.push(Check::new(b, name, spread <= 0.2, format!("spread {spread:.3}")));
    }
    Ok(out)
}
