#![allow(clippy::needless_range_loop)]
//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero when any
//! criterion fails. Every reference value is computed here, independently of the library.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use ndarray::Array2;

use transonic::elliptic::{linearized_coefficients, EdgeCondition, EllipticProblem, OperatorKind, System};
use transonic::gasdyn::{background_downstream, post_shock_state, s_sh, Normal};
use transonic::geometry::{extend_field, FlattenedGrid, ShockCurve, EXTENSION_COEFFS};
use transonic::upstream::UpstreamSolution;
use transonic::{build_parallel_swirl_inflow, solve_transonic_shock, BackgroundShock, GasState, InflowSpec, Solution, SolverConfig};

const GAMMA: f64 = 1.4;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn max_abs<'a>(it: impl IntoIterator<Item = &'a f64>) -> f64 {
    it.into_iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

// Criterion 1: normal-shock tables at Mach 2.
fn jump_relations() -> Outcome {
    let m2 = 4.0;
    let rho_ratio = (GAMMA + 1.0) * m2 / ((GAMMA - 1.0) * m2 + 2.0);
    let p_ratio = 1.0 + 2.0 * GAMMA / (GAMMA + 1.0) * (m2 - 1.0);
    let mach_down_sq = (1.0 + 0.5 * (GAMMA - 1.0) * m2) / (GAMMA * m2 - 0.5 * (GAMMA - 1.0));
    let table_ok = (rho_ratio - 8.0 / 3.0).abs() < 1e-14
        && (p_ratio - 4.5).abs() < 1e-14
        && (mach_down_sq - 1.0 / 3.0).abs() < 1e-14;
    let p0m = 1.0 / GAMMA;
    let bg = match background_downstream(2.0, 1.0, p0m, GAMMA) {
        Ok(bg) => bg,
        Err(e) => return outcome(false, e.to_string()),
    };
    let d = bg.downstream;
    let err = [d.u_x - 2.0 / rho_ratio, d.rho - rho_ratio, d.p - p_ratio * p0m, d.p - 45.0 / 14.0]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let mach_err = (d.u_x * d.u_x / (GAMMA * d.p / d.rho) - mach_down_sq).abs();
    outcome(
        table_ok && err <= 1e-12 && mach_err <= 1e-12,
        format!("state error {err:.2e}, M2^2 error {mach_err:.2e}"),
    )
}

/// Jumps of (mass flux, normal momentum flux, energy flux, tangential velocity, swirl).
fn jumps(a: &GasState, b: &GasState, fprime: f64) -> [f64; 5] {
    let s = (1.0 + fprime * fprime).sqrt();
    let (nx, nr) = (1.0 / s, -fprime / s);
    let f = |g: &GasState| {
        let un = g.u_x * nx + g.u_r * nr;
        let ut = -g.u_x * nr + g.u_r * nx;
        let q2 = g.u_x * g.u_x + g.u_r * g.u_r + g.u_theta * g.u_theta;
        let enthalpy = GAMMA * g.p / ((GAMMA - 1.0) * g.rho);
        [g.rho * un, g.rho * un * un + g.p, g.rho * un * (enthalpy + 0.5 * q2), ut, g.u_theta]
    };
    let (x, y) = (f(a), f(b));
    [x[0] - y[0], x[1] - y[1], x[2] - y[2], x[3] - y[3], x[4] - y[4]]
}

// Criterion 2: post-shock states against independently written flux balances.
fn rh_sweep() -> Outcome {
    let mut worst = 0.0f64;
    let mut entropy_ok = true;
    for a in 1..=20 {
        let mach = 1.05 + (4.0 - 1.05) * a as f64 / 20.0;
        for k in 0..20 {
            let fp = -0.3 + 0.6 * k as f64 / 19.0;
            let (rho, p) = (1.0 + 0.01 * k as f64, 0.7 + 0.02 * a as f64);
            let c = (GAMMA * p / rho).sqrt();
            let s = (1.0 + fp * fp).sqrt();
            let (nx, nr) = (1.0 / s, -fp / s);
            let (un, ut) = (mach * c, 0.2 * c);
            let up = GasState::new(un * nx - ut * nr, un * nr + ut * nx, 0.05 * c, rho, p);
            let down = match post_shock_state(&up, Normal::of_shock(fp), GAMMA) {
                Ok(d) => d,
                Err(e) => return outcome(false, format!("Mach {mach}, f' {fp}: {e}")),
            };
            let scale = [rho * un, rho * un * un + p, rho * un * c * c, c, c];
            for (r, sc) in jumps(&up, &down, fp).iter().zip(scale) {
                worst = worst.max(r.abs() / sc.max(1.0));
            }
            let s_minus = p / rho.powf(GAMMA);
            let s_plus = down.p / down.rho.powf(GAMMA);
            let s_lib = s_sh(&up, Normal::of_shock(fp), GAMMA).unwrap_or(f64::NAN);
            entropy_ok &= s_plus >= s_minus && (s_lib - s_plus).abs() <= 1e-12 * s_plus;
        }
    }
    outcome(
        worst < 1e-12 && entropy_ok,
        format!("max residual {worst:.2e}, entropy increase {entropy_ok}"),
    )
}

// Criterion 3: reflection coefficients and exactness of the extension.
fn extension() -> Outcome {
    let c = [6.0, -32.0, 27.0];
    let coeffs_ok = EXTENSION_COEFFS == c;
    let moment = |m: i32| c.iter().enumerate().map(|(k, ci)| ci * (-1.0 / (k + 1) as f64).powi(m)).sum::<f64>();
    let identities = (0..3).all(|m| moment(m) == 1.0);
    let defect = moment(3);
    let grid = FlattenedGrid::new(41, 9).expect("grid");
    let run = |g: &dyn Fn(f64) -> f64, want: &dyn Fn(f64) -> f64| {
        let field = Array2::from_shape_fn((grid.ny, grid.nt), |(i, _)| g(grid.y(i)));
        let (ext, ys) = extend_field(&field, &grid);
        ys.iter()
            .enumerate()
            .filter(|(_, y)| **y < 0.0)
            .fold(0.0f64, |m, (k, &y)| m.max((ext[[k, 2]] - want(y)).abs()))
    };
    let quad = |y: f64| 0.3 - 1.7 * y + 2.2 * y * y;
    let quad_err = run(&quad, &quad);
    // For y < 0 the reflection of y³ is Σ cᵢ(-y/i)³ = -3y³.
    let cubic_vs_reflection = run(&|y| y * y * y, &|y| -3.0 * y * y * y);
    let cubic_vs_exact = run(&|y| y * y * y, &|y| y * y * y);
    outcome(
        coeffs_ok && identities && defect == -3.0 && quad_err <= 1e-12 && cubic_vs_reflection <= 1e-12 && cubic_vs_exact > 0.1,
        format!(
            "m=3 sum {defect}, quadratic error {quad_err:.2e}, cubic error {cubic_vs_exact:.3}"
        ),
    )
}

/// Manufactured solution with its physical gradient and operator image.
struct Mms {
    u: fn(f64, f64) -> f64,
    ux: fn(f64, f64) -> f64,
    ur: fn(f64, f64) -> f64,
    lu: fn(f64, f64, f64, f64) -> f64,
}

fn sinc_pi(r: f64) -> f64 {
    // sin(πr)/r with its limit at the axis.
    if r == 0.0 {
        PI
    } else {
        (PI * r).sin() / r
    }
}

// u = eˣ cos(πr): a11 u_xx + a22 (u_rr + u_r/r).
const POTENTIAL: Mms = Mms {
    u: |x, r| x.exp() * (PI * r).cos(),
    ux: |x, r| x.exp() * (PI * r).cos(),
    ur: |x, r| -PI * x.exp() * (PI * r).sin(),
    lu: |x, r, a11, a22| x.exp() * (a11 * (PI * r).cos() - a22 * (PI * PI * (PI * r).cos() + PI * sinc_pi(r))),
};

// u = e^{x/2} sin(πr): u_xx + u_rr + u_r/r - u/r².
const SWIRL: Mms = Mms {
    u: |x, r| (0.5 * x).exp() * (PI * r).sin(),
    ux: |x, r| 0.5 * (0.5 * x).exp() * (PI * r).sin(),
    ur: |x, r| PI * (0.5 * x).exp() * (PI * r).cos(),
    lu: |x, r, _, _| {
        if r == 0.0 {
            return 0.0;
        }
        let (s, c) = (PI * r).sin_cos();
        (0.5 * x).exp() * (0.25 * s - PI * PI * s + PI * c / r - s / (r * r))
    },
};

fn mms_error(kind: OperatorKind, amplitude: f64, n: usize) -> Result<f64, String> {
    let grid = FlattenedGrid::new(n, (n - 1) / 2 + 1).map_err(|e| e.to_string())?;
    let radii = grid.t_nodes();
    let f = |r: f64| amplitude * (1.0 - r * r);
    let fp = |r: f64| -2.0 * amplitude * r;
    let shock = ShockCurve::new(radii.clone(), radii.iter().map(|&r| f(r)).collect()).map_err(|e| e.to_string())?;
    let lc = linearized_coefficients(&BackgroundShock::reference()).map_err(|e| e.to_string())?;
    let (m, ax, ar) = match kind {
        OperatorKind::Potential => (POTENTIAL, lc.a11, lc.a22),
        OperatorKind::Swirl => (SWIRL, 1.0, 1.0),
    };
    let x_of = |i: usize, j: usize| 1.0 + (grid.y(i) - 1.0) * (1.0 - f(grid.t(j)));
    let exact = Array2::from_shape_fn((grid.ny, grid.nt), |(i, j)| (m.u)(x_of(i, j), grid.t(j)));
    let source = Array2::from_shape_fn((grid.ny, grid.nt), |(i, j)| (m.lu)(x_of(i, j), grid.t(j), ax, ar));
    // Outward normal of the shock face is (-1, f')/sqrt(1 + f'²).
    let shock_flux = (0..grid.nt)
        .map(|j| {
            let (x, r) = (x_of(0, j), grid.t(j));
            let s = fp(r);
            (-ax * (m.ux)(x, r) + ar * s * (m.ur)(x, r)) / (1.0 + s * s).sqrt()
        })
        .collect();
    let problem = match kind {
        OperatorKind::Potential => EllipticProblem {
            kind,
            flux: None,
            source: Some(source),
            shock: EdgeCondition::Flux(shock_flux),
            exit: EdgeCondition::Dirichlet(exact.row(grid.ny - 1).to_vec()),
            wall: EdgeCondition::Flux((0..grid.ny).map(|i| ar * (m.ur)(x_of(i, grid.nt - 1), 1.0)).collect()),
            axis: EdgeCondition::Flux(vec![0.0; grid.ny]),
        },
        OperatorKind::Swirl => EllipticProblem {
            kind,
            flux: None,
            source: Some(source),
            shock: EdgeCondition::Flux(shock_flux),
            exit: EdgeCondition::Flux(radii.iter().map(|&r| ax * (m.ux)(1.0, r)).collect()),
            wall: EdgeCondition::Dirichlet(exact.column(grid.nt - 1).to_vec()),
            axis: EdgeCondition::Dirichlet(exact.column(0).to_vec()),
        },
    };
    let system = System::assemble(&problem, &grid, &shock, &lc).map_err(|e| e.to_string())?;
    let (u, _) = system.solve(None, 1e-13).map_err(|e| e.to_string())?;
    Ok(max_abs((&u - &exact).iter()))
}

// Criterion 4: grid-doubling ratios of both solvers on flat and curved shocks.
fn elliptic_mms() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (kind, name) in [(OperatorKind::Potential, "potential"), (OperatorKind::Swirl, "swirl")] {
        for amp in [0.0, 0.04] {
            let errs: Result<Vec<f64>, String> = [65, 129, 257].iter().map(|&n| mms_error(kind, amp, n)).collect();
            match errs {
                Ok(e) => {
                    let ratios = [e[0] / e[1], e[1] / e[2]];
                    passed &= ratios.iter().all(|r| (3.4..=4.6).contains(r));
                    parts.push(format!("{name}/f={amp}: {:.2}, {:.2}", ratios[0], ratios[1]));
                }
                Err(e) => {
                    passed = false;
                    parts.push(format!("{name}/f={amp}: {e}"));
                }
            }
        }
    }
    outcome(passed, parts.join("; "))
}

/// Largest deviation of (u_x, u_r, u_θ, ρ, p) from the downstream background.
fn state_deviation(sol: &Solution, bg: &BackgroundShock) -> f64 {
    let p = &sol.primitive;
    let d = bg.downstream;
    let mut m = 0.0f64;
    for ((((ux, ur), ut), rho), pr) in p.u_x.iter().zip(&p.u_r).zip(&p.u_theta).zip(&p.rho).zip(&p.p) {
        m = m.max((ux - d.u_x).abs()).max(ur.abs()).max(ut.abs()).max((rho - d.rho).abs()).max((pr - d.p).abs());
    }
    m
}

// Criterion 5: the uniform background is reproduced on the 129×65 grid.
fn background_fixed_point() -> Outcome {
    let up = match build_parallel_swirl_inflow(&InflowSpec::new(0.0, 0.0), GAMMA) {
        Ok(u) => u,
        Err(e) => return outcome(false, e.to_string()),
    };
    let sol = match solve_transonic_shock(&up, &SolverConfig::with_grid(129, 65)) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    // Closed-form downstream state of the Mach-2 shock.
    let (u0p, rho0p, p0p): (f64, f64, f64) = (0.75, 8.0 / 3.0, 45.0 / 14.0);
    let s0p = p0p / rho0p.powf(GAMMA);
    let f = max_abs(sol.shock.values());
    let fields = &sol.fields;
    let dev = [
        state_deviation(&sol, &sol.background),
        max_abs(sol.primitive.u_x.iter()) - u0p,
        max_abs(fields.phi.iter()),
        max_abs(fields.psi.iter()),
        max_abs(fields.lambda.iter()),
        max_abs(fields.entropy.mapv(|s| s - s0p).iter()),
        max_abs(sol.primitive.rho.mapv(|r| r - rho0p).iter()),
    ]
    .iter()
    .fold(0.0f64, |m, v| m.max(v.abs()));
    outcome(
        sol.report.converged && f <= 1e-10 && dev <= 1e-10,
        format!("max|f| {f:.2e}, max deviation {dev:.2e}, {} outer sweeps", sol.report.outer_sweeps),
    )
}

/// Derivatives on the flattened grid mapped to physical `∂_x`, `∂_r` at interior nodes.
struct Chain<'a> {
    grid: &'a FlattenedGrid,
    l: Vec<f64>,
    fp: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(sol: &'a Solution) -> Self {
        let h = sol.grid.ht();
        let f = sol.shock.values();
        let n = f.len();
        let fp = (0..n)
            .map(|j| match j {
                0 => 0.0,
                _ if j == n - 1 => (3.0 * f[j] - 4.0 * f[j - 1] + f[j - 2]) / (2.0 * h),
                _ => (f[j + 1] - f[j - 1]) / (2.0 * h),
            })
            .collect();
        Self { grid: &sol.grid, l: f.iter().map(|v| 1.0 - v).collect(), fp }
    }

    fn d(&self, v: &Array2<f64>, i: usize, j: usize) -> (f64, f64) {
        let g = self.grid;
        let dy = (v[[i + 1, j]] - v[[i - 1, j]]) / (2.0 * g.hy());
        let dt = (v[[i, j + 1]] - v[[i, j - 1]]) / (2.0 * g.ht());
        (dy / self.l[j], dt + (g.y(i) - 1.0) * self.fp[j] * dy / self.l[j])
    }
}

/// Largest interior residuals of the four axisymmetric equations, each written as
/// `∂_x(ρu_x) + ∂_r(ρu_r) + ρu_r/r`, `ρ(u·∇)u_r - ρΛ²/r³ + ∂_r(Sρ^γ)`, `ρ(u·∇)S`, `ρ(u·∇)Λ`.
fn euler_max(sol: &Solution) -> [f64; 4] {
    let g = &sol.grid;
    let p = &sol.primitive;
    let ch = Chain::new(sol);
    let m_x = &p.rho * &p.u_x;
    let m_r = &p.rho * &p.u_r;
    let s = Array2::from_shape_fn(p.rho.dim(), |(i, j)| p.p[[i, j]] / p.rho[[i, j]].powf(GAMMA));
    let lam = Array2::from_shape_fn(p.rho.dim(), |(i, j)| g.t(j) * p.u_theta[[i, j]]);
    let s_rho_gamma = Array2::from_shape_fn(p.rho.dim(), |(i, j)| s[[i, j]] * p.rho[[i, j]].powf(GAMMA));
    let mut out = [0.0f64; 4];
    for i in 1..g.ny - 1 {
        for j in 1..g.nt - 1 {
            let r = g.t(j);
            let (rho, ux, ur) = (p.rho[[i, j]], p.u_x[[i, j]], p.u_r[[i, j]]);
            let mass = ch.d(&m_x, i, j).0 + ch.d(&m_r, i, j).1 + m_r[[i, j]] / r;
            let (urx, urr) = ch.d(&p.u_r, i, j);
            let radial = rho * (ux * urx + ur * urr) - rho * lam[[i, j]].powi(2) / r.powi(3)
                + ch.d(&s_rho_gamma, i, j).1;
            let (sx, sr) = ch.d(&s, i, j);
            let (lx, lr) = ch.d(&lam, i, j);
            let res = [mass, radial, rho * (ux * sx + ur * sr), rho * (ux * lx + ur * lr)];
            for k in 0..4 {
                out[k] = out[k].max(res[k].abs());
            }
        }
    }
    out
}

/// Jump residuals between the inflow at each shock node and the shock row of the solution.
fn rh_max(sol: &Solution, up: &UpstreamSolution) -> f64 {
    let fp = sol.shock.fprime_nodes();
    let stride = (up.r.len() - 1) / (sol.grid.nt - 1);
    let mut m = 0.0f64;
    for j in 0..sol.grid.nt {
        let k = j * stride;
        let a = GasState::new(up.u_x[k], 0.0, up.u_theta[k], up.rho[k], up.p[k]);
        m = jumps(&a, &sol.primitive.state(0, j), fp[j]).iter().fold(m, |m, v| m.max(v.abs()));
    }
    m
}

/// `max |(N_y ∂_y + N_t ∂_t) S|` over interior nodes; equals `L ρ u·∇S`.
fn streamline_residual(sol: &Solution) -> f64 {
    let g = &sol.grid;
    let p = &sol.primitive;
    let ch = Chain::new(sol);
    let mut m = 0.0f64;
    for i in 1..g.ny - 1 {
        for j in 1..g.nt - 1 {
            let (sx, sr) = ch.d(&sol.fields.entropy, i, j);
            let v = ch.l[j] * p.rho[[i, j]] * (p.u_x[[i, j]] * sx + p.u_r[[i, j]] * sr);
            m = m.max(v.abs());
        }
    }
    m
}

struct Health {
    bernoulli: f64,
    euler: [f64; 4],
    rh: f64,
    streamline: f64,
    mach_down_max: f64,
    mach_up_min: f64,
    admissible: bool,
}

fn health(sol: &Solution, up: &UpstreamSolution) -> Health {
    let p = &sol.primitive;
    let b0 = 0.5 * 4.0 + GAMMA / (GAMMA - 1.0) / GAMMA;
    let mut bernoulli = 0.0f64;
    let mut mach_down_max = 0.0f64;
    for i in 0..sol.grid.ny {
        for j in 0..sol.grid.nt {
            let s = p.state(i, j);
            let q2 = s.u_x * s.u_x + s.u_r * s.u_r + s.u_theta * s.u_theta;
            let c2 = GAMMA * s.p / s.rho;
            bernoulli = bernoulli.max((0.5 * q2 + c2 / (GAMMA - 1.0) - b0).abs());
            mach_down_max = mach_down_max.max((q2 / c2).sqrt());
        }
    }
    let mach_up_min = (0..up.r.len())
        .map(|k| ((up.u_x[k].powi(2) + up.u_theta[k].powi(2)) * up.rho[k] / (GAMMA * up.p[k])).sqrt())
        .fold(f64::INFINITY, f64::min);
    let fp = sol.shock.fprime_nodes();
    let stride = (up.r.len() - 1) / (sol.grid.nt - 1);
    let admissible = (0..sol.grid.nt).all(|j| {
        let s = (1.0 + fp[j] * fp[j]).sqrt();
        let (nx, nr) = (1.0 / s, -fp[j] / s);
        let un_minus = up.u_x[j * stride] * nx;
        let un = p.u_x[[0, j]] * nx + p.u_r[[0, j]] * nr;
        un_minus > un && un > 0.0
    });
    Health {
        bernoulli,
        euler: euler_max(sol),
        rh: rh_max(sol, up),
        streamline: streamline_residual(sol),
        mach_down_max,
        mach_up_min,
        admissible,
    }
}

fn perturbed(factor: f64, n_y: usize, n_t: usize) -> Result<(UpstreamSolution, Solution), String> {
    let up = build_parallel_swirl_inflow(&InflowSpec::new(0.02 * factor, 0.01 * factor), GAMMA).map_err(|e| e.to_string())?;
    let sol = solve_transonic_shock(&up, &SolverConfig::with_grid(n_y, n_t)).map_err(|e| e.to_string())?;
    Ok((up, sol))
}

// Criterion 6: health of the perturbed run and residual decay under refinement.
fn perturbed_health(coarse: &(UpstreamSolution, Solution), fine: &(UpstreamSolution, Solution)) -> Outcome {
    let hc = health(&coarse.1, &coarse.0);
    let hf = health(&fine.1, &fine.0);
    let band = |a: f64, b: f64| (1.7..=4.6).contains(&(a / b));
    let euler_c = hc.euler.iter().fold(0.0f64, |m, v| m.max(*v));
    let euler_f = hf.euler.iter().fold(0.0f64, |m, v| m.max(*v));
    let checks = [
        ("converged", fine.1.report.converged),
        ("bernoulli", hf.bernoulli <= 1e-10),
        ("euler ratio", band(euler_c, euler_f)),
        ("rh ratio", band(hc.rh, hf.rh)),
        ("mach", hf.mach_down_max < 1.0 && hf.mach_up_min > 1.0),
        ("admissibility", hf.admissible),
        ("streamline ratio", band(hc.streamline, hf.streamline)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        format!(
            "bernoulli {:.1e}, euler ratio {:.2} (per equation {}), rh ratio {:.2}, streamline ratio {:.2}, Mach down max {:.3}, up min {:.3}{}",
            hf.bernoulli,
            euler_c / euler_f,
            (0..4).map(|k| format!("{:.2}", hc.euler[k] / hf.euler[k])).collect::<Vec<_>>().join("/"),
            hc.rh / hf.rh,
            hc.streamline / hf.streamline,
            hf.mach_down_max,
            hf.mach_up_min,
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

// Criterion 7: deviations proportional to the inflow amplitude.
fn linear_response(runs: &[(f64, UpstreamSolution, Solution)]) -> Outcome {
    let mut shock = Vec::new();
    let mut state = Vec::new();
    for (_, up, sol) in runs {
        shock.push(max_abs(sol.shock.values()) / up.sigma);
        state.push(state_deviation(sol, &sol.background) / up.sigma);
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        hi / lo - 1.0
    };
    let (a, b) = (spread(&shock), spread(&state));
    outcome(
        a <= 0.2 && b <= 0.2,
        format!(
            "|f|/sigma {} (spread {a:.3}); |U-U0|/sigma {} (spread {b:.3})",
            shock.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            state.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

/// Pressure of the parallel inflow by RK4 on `n` nodes.
fn oracle_pressure(spec: &InflowSpec, n: usize) -> Vec<f64> {
    let s0 = spec.p0m / spec.rho0m.powf(GAMMA);
    let rhs = |r: f64, p: f64| {
        let s = s0 * (1.0 + spec.eps_entropy * (PI * r).cos());
        let rho = (p / s).powf(1.0 / GAMMA);
        // ρ u_θ²/r with u_θ = ε r(1 - r²).
        rho * spec.eps_swirl * spec.eps_swirl * r * (1.0 - r * r).powi(2)
    };
    let h = 1.0 / (n - 1) as f64;
    let mut p = vec![spec.p0m; n];
    for j in 0..n - 1 {
        let (r, y) = (j as f64 * h, p[j]);
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, y + 0.5 * h * k1);
        let k3 = rhs(r + 0.5 * h, y + 0.5 * h * k2);
        let k4 = rhs(r + h, y + h * k3);
        p[j + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    p
}

/// `max |c + ψ/r + ψ' - u_x|` over interior samples, `c = 2∫ r u_x dr` by Simpson's rule.
fn roundtrip(up: &UpstreamSolution) -> f64 {
    let n = up.r.len();
    let h = up.r[1] - up.r[0];
    let w = |j: usize| if j == 0 || j == n - 1 { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
    let c = 2.0 * h / 3.0 * (0..n).map(|j| w(j) * up.r[j] * up.u_x[j]).sum::<f64>();
    (1..n - 1).fold(0.0f64, |m, j| {
        let dpsi = (up.psi[j + 1] - up.psi[j - 1]) / (2.0 * h);
        m.max((c + up.psi[j] / up.r[j] + dpsi - up.u_x[j]).abs())
    })
}

// Criterion 8: exact inflows and second-order decomposition.
fn upstream_exactness() -> Outcome {
    let spec = InflowSpec::new(0.05, 0.02);
    let up = match build_parallel_swirl_inflow(&spec, GAMMA) {
        Ok(u) => u,
        Err(e) => return outcome(false, e.to_string()),
    };
    let n = up.r.len();
    let oracle = oracle_pressure(&spec, 2 * n - 1);
    let p_err = (0..n).fold(0.0f64, |m, j| m.max((up.p[j] - oracle[2 * j]).abs()));
    let b0 = 0.5 * spec.u0m * spec.u0m + GAMMA * spec.p0m / ((GAMMA - 1.0) * spec.rho0m);
    let mut residual = 0.0f64;
    for j in 0..n {
        let r = up.r[j];
        let s_expected = spec.p0m / spec.rho0m.powf(GAMMA) * (1.0 + spec.eps_entropy * (PI * r).cos());
        let state_err = [
            up.p[j] / up.rho[j].powf(GAMMA) - s_expected,
            up.u_theta[j] - spec.eps_swirl * r * (1.0 - r * r),
            0.5 * (up.u_x[j].powi(2) + up.u_theta[j].powi(2)) + GAMMA * up.p[j] / ((GAMMA - 1.0) * up.rho[j]) - b0,
            up.p[j] - oracle[2 * j],
        ];
        residual = state_err.iter().fold(residual, |m, v| m.max(v.abs()));
    }
    let errs: Result<Vec<f64>, String> = [129, 257, 513]
        .iter()
        .map(|&n| {
            build_parallel_swirl_inflow(&InflowSpec { n_radial: n, ..spec.clone() }, GAMMA)
                .map(|u| roundtrip(&u))
                .map_err(|e| e.to_string())
        })
        .collect();
    let errs = match errs {
        Ok(e) => e,
        Err(e) => return outcome(false, e),
    };
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    outcome(
        p_err < 1e-8 && residual < 1e-8 && ratios.iter().all(|r| (3.4..=4.6).contains(r)),
        format!(
            "pressure vs RK4 oracle {p_err:.2e}, pointwise residual {residual:.2e}, roundtrip ratios {:.2}, {:.2}",
            ratios[0], ratios[1]
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: usize, name: &str, budget: f64, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let passed = o.passed && secs <= budget;
        all &= passed;
        println!(
            "{} criterion {id}: {name}: {} ({secs:.1} s, budget {budget} s)",
            if passed { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    report(1, "jump relations", 1.0, &mut jump_relations);
    report(2, "Rankine-Hugoniot self-consistency", 1.0, &mut rh_sweep);
    report(3, "extension identities", 1.0, &mut extension);
    report(4, "elliptic MMS", 30.0, &mut elliptic_mms);
    report(5, "background fixed point", 10.0, &mut background_fixed_point);

    let mut runs: Vec<(f64, UpstreamSolution, Solution)> = Vec::new();
    let mut error = None;
    report(6, "perturbed run health", 120.0, &mut || {
        let pair = perturbed(1.0, 65, 33).and_then(|c| perturbed(1.0, 129, 65).map(|f| (c, f)));
        match pair {
            Ok((c, f)) => {
                let o = perturbed_health(&c, &f);
                runs.push((1.0, f.0, f.1));
                o
            }
            Err(e) => {
                error = Some(e.clone());
                outcome(false, e)
            }
        }
    });
    report(7, "linear response", 360.0, &mut || {
        if let Some(e) = &error {
            return outcome(false, e.clone());
        }
        for factor in [0.5, 0.25] {
            match perturbed(factor, 129, 65) {
                Ok((u, s)) => runs.push((factor, u, s)),
                Err(e) => return outcome(false, e),
            }
        }
        linear_response(&runs)
    });
    report(8, "upstream exactness", 5.0, &mut upstream_exactness);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
