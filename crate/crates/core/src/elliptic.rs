//! Finite-volume discretisation of the potential and swirl problems on the flattened
//! grid, the right-hand-side assemblers, and a Jacobi-preconditioned CG solver.
//!
//! Both problems are written as
//!
//! ```text
//! div(A ∇u) - c u / r² = div F + s,     A = diag(a_x, a_r)
//! ```
//!
//! in axisymmetric form and integrated over node-centred control volumes of the
//! flattened grid. Mixed derivatives produced by the flattening are lagged and removed by
//! defect correction, so the matrix handed to CG stays 5-point symmetric.

use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, SmallnessProxy};
use crate::fields::{d_t, d_y, Kinematics};
use crate::gasdyn::{density_h, density_h_with_gradient, BackgroundShock, GasConstants, GasState, Normal};
use crate::geometry::{FlattenedGrid, ShockCurve};
use crate::interp::gauss_legendre_8;

/// Background coefficients `a_ii = ∂_{s_i} A_i(V₀)` of the linearised potential operator,
/// together with the base point they were taken at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizedCoefficients {
    pub a11: f64,
    pub a22: f64,
    pub a33: f64,
    pub s0p: f64,
    pub u0p: f64,
    pub rho0p: f64,
    pub consts: GasConstants,
}

/// `a11 = ρ₀⁺(1 - M₀⁺²)`, `a22 = a33 = ρ₀⁺`.
pub fn linearized_coefficients(bg: &BackgroundShock) -> Result<LinearizedCoefficients> {
    let consts = GasConstants::new(bg.gamma, bg.b0)?;
    let c2 = bg.gamma * bg.p0p() / bg.rho0p();
    let mach_sq = bg.u0p * bg.u0p / c2;
    if !(mach_sq < 1.0) {
        return Err(Error::NotElliptic { mach_sq });
    }
    let rho = density_h(bg.s0p, [bg.u0p, 0.0, 0.0], &consts)?;
    let lc = LinearizedCoefficients {
        a11: rho * (1.0 - mach_sq),
        a22: rho,
        a33: rho,
        s0p: bg.s0p,
        u0p: bg.u0p,
        rho0p: rho,
        consts,
    };
    if !(lc.a11 > 0.0 && lc.a22 > 0.0) {
        return Err(Error::NotElliptic { mach_sq });
    }
    Ok(lc)
}

impl LinearizedCoefficients {
    fn diag(&self) -> [f64; 3] {
        [self.a11, self.a22, self.a33]
    }

    /// `D_s A(V₀)` as a full matrix.
    fn ds_a0(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        let d = self.diag();
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = d[i];
        }
        m
    }
}

/// Nonlinear remainder flux at one point, for `Q = (ξ, s, v)` the deviations of entropy,
/// potential gradient and rotational velocity from the base point. The two parameter
/// integrals are evaluated with 8-point Gauss–Legendre.
pub fn remainder_flux(xi: f64, s: [f64; 3], v: [f64; 3], lc: &LinearizedCoefficients) -> Result<[f64; 3]> {
    let s0 = [lc.u0p, 0.0, 0.0];
    let q_full = [s0[0] + s[0] + v[0], s[1] + v[1], s[2] + v[2]];
    let h_full = density_h(lc.s0p + xi, q_full, &lc.consts)?;
    let a0 = lc.ds_a0();
    let mut lin = [0.0; 3];
    let mut curv = [0.0; 3];
    for (tau, w) in gauss_legendre_8() {
        let st = [s0[0] + tau * s[0], tau * s[1], tau * s[2]];
        let q = [st[0] + tau * v[0], st[1] + tau * v[1], st[2] + tau * v[2]];
        let (h, dh_eta, dh_q) = density_h_with_gradient(lc.s0p + tau * xi, q, &lc.consts)?;
        let dq_v = dh_q[0] * v[0] + dh_q[1] * v[1] + dh_q[2] * v[2];
        for i in 0..3 {
            lin[i] += w * st[i] * (dh_eta * xi + dq_v);
            let mut acc = 0.0;
            for j in 0..3 {
                let dsa = dh_q[j] * st[i] + if i == j { h } else { 0.0 };
                acc += s[j] * (dsa - a0[i][j]);
            }
            curv[i] += w * acc;
        }
    }
    Ok([
        -h_full * v[0] - lin[0] - curv[0],
        -h_full * v[1] - lin[1] - curv[1],
        -h_full * v[2] - lin[2] - curv[2],
    ])
}

/// Nodal remainder flux `(F_x, F_r)` for the current entropy deviation and velocity parts.
#[allow(non_snake_case)]
pub fn assemble_F(
    s_dev: &Array2<f64>,
    kin: &Kinematics,
    lc: &LinearizedCoefficients,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (ny, nt) = s_dev.dim();
    let mut fx = Array2::zeros((ny, nt));
    let mut fr = Array2::zeros((ny, nt));
    for i in 0..ny {
        for j in 0..nt {
            let s = [kin.dphi_x[[i, j]], kin.dphi_r[[i, j]], 0.0];
            let v = [kin.t_x[[i, j]], kin.t_r[[i, j]], kin.t_theta[[i, j]]];
            let f = remainder_flux(s_dev[[i, j]], s, v, lc)?;
            fx[[i, j]] = f[0];
            fr[[i, j]] = f[1];
        }
    }
    Ok((fx, fr))
}

/// Shock boundary data of the potential problem at each radial node.
///
/// `t_shock` holds the meridional rotational velocity `(t_x, t_r)` on the shock, `dphi_r`
/// the radial derivative of the potential deviation there, `upstream` the inflow state.
#[allow(non_snake_case)]
pub fn assemble_B(
    t_shock: &[[f64; 2]],
    fprime: &[f64],
    dphi_r: &[f64],
    upstream: &[GasState],
    lc: &LinearizedCoefficients,
) -> Result<Vec<f64>> {
    let gamma = lc.consts.gamma;
    (0..fprime.len())
        .map(|j| {
            let n = Normal::of_shock(fprime[j]);
            let un = upstream[j].normal_velocity(n);
            let ks = crate::gasdyn::ks(&upstream[j], n, gamma)?;
            if !(un > 0.0) {
                return Err(Error::Precondition(format!(
                    "upstream normal velocity {un} is not positive"
                )));
            }
            let t_n = t_shock[j][0] * n.x + t_shock[j][1] * n.r;
            Ok(lc.a11 * (-ks / un + t_n + lc.u0p * n.x) + (lc.a11 - lc.a22) * dphi_r[j] * n.r)
        })
        .collect()
}

/// Vorticity source `G` of the swirl equation.
///
/// `ds_dr`, `dlambda_dr` are physical radial derivatives. On the axis the swirl term takes
/// its limit value 0. Fails when the axial velocity drops to `u₀⁺/2` or below.
#[allow(non_snake_case)]
pub fn assemble_G(
    entropy: &Array2<f64>,
    lambda: &Array2<f64>,
    ds_dr: &Array2<f64>,
    dlambda_dr: &Array2<f64>,
    kin: &Kinematics,
    grid: &FlattenedGrid,
    lc: &LinearizedCoefficients,
) -> Result<Array2<f64>> {
    let gm1 = lc.consts.gamma - 1.0;
    let mut g = grid.zeros();
    for i in 0..grid.ny {
        for j in 0..grid.nt {
            let ux = kin.q_x[[i, j]];
            if !(ux > 0.5 * lc.u0p) {
                return Err(Error::Degeneracy {
                    proxy: SmallnessProxy::AxialDegeneracy,
                    location: format!("y = {:.4}, t = {:.4}", grid.y(i), grid.t(j)),
                    reason: format!("axial velocity {ux:.4} <= u0+/2"),
                });
            }
            let h = density_h(entropy[[i, j]], kin.q(i, j), &lc.consts)?;
            let swirl = if j == 0 {
                0.0
            } else {
                let r = grid.t(j);
                let v = lambda[[i, j]] / r;
                let dv = (dlambda_dr[[i, j]] - v) / r;
                v * (v / r) + v * dv
            };
            g[[i, j]] = (h.powf(gm1) / gm1 * ds_dr[[i, j]] + swirl) / ux;
        }
    }
    Ok(g)
}

/// Shock boundary data of the swirl problem at each radial node. On the axis `ψ/r` and
/// `ψ⁻/r` take their limits `∂_rψ`, `∂_rψ⁻`.
#[allow(non_snake_case)]
pub fn assemble_A(
    psi: &[f64],
    dpsi_r: &[f64],
    psi_m: &[f64],
    dpsi_m_r: &[f64],
    dpsi_m_x: &[f64],
    fprime: &[f64],
    r: &[f64],
) -> Vec<f64> {
    (0..r.len())
        .map(|j| {
            let (a, b) = if r[j] == 0.0 {
                (dpsi_r[j], dpsi_m_r[j])
            } else {
                (psi[j] / r[j], psi_m[j] / r[j])
            };
            let fp = fprime[j];
            ((-a + b + dpsi_m_r[j]) * fp - dpsi_m_x[j]) / (1.0 + fp * fp).sqrt()
        })
        .collect()
}

/// Data on one edge of the flattened square.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeCondition {
    /// Prescribed values at the edge nodes.
    Dirichlet(Vec<f64>),
    /// Prescribed outward normal flux density `(A∇u)·ν` at the edge nodes.
    Flux(Vec<f64>),
}

impl EdgeCondition {
    fn len(&self) -> usize {
        match self {
            EdgeCondition::Dirichlet(v) | EdgeCondition::Flux(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `div(a∇φ)` with the linearised coefficients.
    Potential,
    /// `Δψ - ψ/r²`.
    Swirl,
}

/// A linear boundary value problem on the flattened grid.
#[derive(Debug, Clone)]
pub struct EllipticProblem {
    pub kind: OperatorKind,
    /// Nodal divergence-form source `(F_x, F_r)` in physical components.
    pub flux: Option<(Array2<f64>, Array2<f64>)>,
    /// Nodal scalar source `s`.
    pub source: Option<Array2<f64>>,
    /// Edge `y = 0` (the shock), indexed by `j`.
    pub shock: EdgeCondition,
    /// Edge `y = 1` (the exit), indexed by `j`.
    pub exit: EdgeCondition,
    /// Edge `t = 1` (the wall), indexed by `i`.
    pub wall: EdgeCondition,
    /// Edge `t = 0` (the axis), indexed by `i`. Fluxes here are multiplied by `r = 0`.
    pub axis: EdgeCondition,
}

impl EllipticProblem {
    /// Potential problem with shock flux data, zero exit value, insulated wall and axis.
    pub fn potential(grid: &FlattenedGrid, flux: (Array2<f64>, Array2<f64>), shock_flux: Vec<f64>) -> Self {
        Self {
            kind: OperatorKind::Potential,
            flux: Some(flux),
            source: None,
            shock: EdgeCondition::Flux(shock_flux),
            exit: EdgeCondition::Dirichlet(vec![0.0; grid.nt]),
            wall: EdgeCondition::Flux(vec![0.0; grid.ny]),
            axis: EdgeCondition::Flux(vec![0.0; grid.ny]),
        }
    }

    /// Swirl problem `-(Δ - 1/r²)ψ = G` with shock flux data, `∂_xψ = 0` at the exit,
    /// `ψ = 0` on wall and axis.
    pub fn swirl(grid: &FlattenedGrid, g: Array2<f64>, shock_flux: Vec<f64>) -> Self {
        Self {
            kind: OperatorKind::Swirl,
            flux: None,
            source: Some(g.mapv(|v| -v)),
            shock: EdgeCondition::Flux(shock_flux),
            exit: EdgeCondition::Flux(vec![0.0; grid.nt]),
            wall: EdgeCondition::Dirichlet(vec![0.0; grid.ny]),
            axis: EdgeCondition::Dirichlet(vec![0.0; grid.ny]),
        }
    }

    fn validate(&self, grid: &FlattenedGrid) -> Result<()> {
        let mut bad = Vec::new();
        for (name, e, n) in [
            ("shock", &self.shock, grid.nt),
            ("exit", &self.exit, grid.nt),
            ("wall", &self.wall, grid.ny),
            ("axis", &self.axis, grid.ny),
        ] {
            if e.len() != n {
                bad.push(format!("{name} data has {} entries, expected {n}", e.len()));
            }
        }
        let dim = (grid.ny, grid.nt);
        if let Some((fx, fr)) = &self.flux {
            if fx.dim() != dim || fr.dim() != dim {
                bad.push("flux field does not match the grid".into());
            }
        }
        if let Some(s) = &self.source {
            if s.dim() != dim {
                bad.push("source field does not match the grid".into());
            }
        }
        if self.kind == OperatorKind::Swirl && !matches!(self.axis, EdgeCondition::Dirichlet(_)) {
            bad.push("the 1/r² term requires Dirichlet data on the axis".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Domain(bad.join("; ")))
        }
    }
}

/// Statistics of one linear solve.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    /// Total CG iterations over all defect-correction passes.
    pub cg_iterations: usize,
    /// Defect-correction passes.
    pub passes: usize,
    /// Relative residual of the last CG solve.
    pub relative_residual: f64,
}

/// Assembled control-volume system for a fixed shock and operator.
#[derive(Debug, Clone)]
pub struct System {
    ny: usize,
    nt: usize,
    hy: f64,
    ht: f64,
    /// y-face coefficients, `(ny-1) × nt`.
    cy: Vec<f64>,
    /// t-face coefficients, `ny × (nt-1)`.
    ct: Vec<f64>,
    /// Lagged mixed-term weights on y-faces and t-faces.
    my: Vec<f64>,
    mt: Vec<f64>,
    zero_order: Vec<f64>,
    /// `None` for unknowns, `Some(value)` for Dirichlet nodes.
    fixed: Vec<Option<f64>>,
    /// Boundary flux minus F flux minus source integral, per control volume.
    load: Vec<f64>,
    /// Given boundary fluxes per control volume, kept for the flux balance.
    boundary: Vec<f64>,
    has_mixed: bool,
}

fn t_weight(grid: &FlattenedGrid, j: usize) -> f64 {
    let h = grid.ht();
    let t = grid.t(j);
    let a = (t - 0.5 * h).max(0.0);
    let b = (t + 0.5 * h).min(1.0);
    0.5 * (b * b - a * a)
}

fn y_weight(grid: &FlattenedGrid, i: usize) -> f64 {
    if i == 0 || i + 1 == grid.ny {
        0.5 * grid.hy()
    } else {
        grid.hy()
    }
}

impl System {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nt + j
    }

    /// Builds the control-volume system of `problem` on the grid flattened by `shock`.
    pub fn assemble(
        problem: &EllipticProblem,
        grid: &FlattenedGrid,
        shock: &ShockCurve,
        lc: &LinearizedCoefficients,
    ) -> Result<Self> {
        problem.validate(grid)?;
        let (ny, nt) = (grid.ny, grid.nt);
        let (hy, ht) = (grid.hy(), grid.ht());
        let (ax, ar, c0) = match problem.kind {
            OperatorKind::Potential => (lc.a11, lc.a22, 0.0),
            OperatorKind::Swirl => (1.0, 1.0, 1.0),
        };
        let l: Vec<f64> = shock.values().iter().map(|f| 1.0 - f).collect();
        let fp = shock.fprime_nodes();
        let tw: Vec<f64> = (0..nt).map(|j| t_weight(grid, j)).collect();
        let wy: Vec<f64> = (0..ny).map(|i| y_weight(grid, i)).collect();

        let mut cy = vec![0.0; (ny - 1) * nt];
        let mut my = vec![0.0; (ny - 1) * nt];
        for i in 0..ny - 1 {
            let ym = 0.5 * (grid.y(i) + grid.y(i + 1)) - 1.0;
            for j in 0..nt {
                let k = i * nt + j;
                cy[k] = tw[j] * (ax + ar * ym * ym * fp[j] * fp[j]) / (l[j] * hy);
                my[k] = tw[j] * ar * ym * fp[j];
            }
        }
        let mut ct = vec![0.0; ny * (nt - 1)];
        let mut mt = vec![0.0; ny * (nt - 1)];
        for j in 0..nt - 1 {
            let tm = 0.5 * (grid.t(j) + grid.t(j + 1));
            let lm = 1.0 - shock.value(tm);
            let fpm = shock.fprime(tm);
            for i in 0..ny {
                let k = i * (nt - 1) + j;
                ct[k] = ar * wy[i] * tm * lm / ht;
                mt[k] = ar * wy[i] * tm * (grid.y(i) - 1.0) * fpm;
            }
        }

        let mut fixed = vec![None; ny * nt];
        let mut set_fixed = |i: usize, j: usize, v: f64| {
            let k = i * nt + j;
            if fixed[k].is_none() {
                fixed[k] = Some(v);
            }
        };
        if let EdgeCondition::Dirichlet(v) = &problem.exit {
            for j in 0..nt {
                set_fixed(ny - 1, j, v[j]);
            }
        }
        if let EdgeCondition::Dirichlet(v) = &problem.wall {
            for i in 0..ny {
                set_fixed(i, nt - 1, v[i]);
            }
        }
        if let EdgeCondition::Dirichlet(v) = &problem.axis {
            for i in 0..ny {
                set_fixed(i, 0, v[i]);
            }
        }
        if let EdgeCondition::Dirichlet(v) = &problem.shock {
            for j in 0..nt {
                set_fixed(0, j, v[j]);
            }
        }

        let mut zero_order = vec![0.0; ny * nt];
        let mut load = vec![0.0; ny * nt];
        let mut boundary = vec![0.0; ny * nt];
        for i in 0..ny {
            for j in 0..nt {
                let k = i * nt + j;
                let vol = wy[i] * tw[j] * l[j];
                if c0 != 0.0 && j > 0 {
                    let t = grid.t(j);
                    zero_order[k] = c0 * vol / (t * t);
                }
                if let Some(s) = &problem.source {
                    load[k] -= s[[i, j]] * vol;
                }
                let mut b = 0.0;
                if i == 0 {
                    if let EdgeCondition::Flux(g) = &problem.shock {
                        b += g[j] * tw[j] * (1.0 + fp[j] * fp[j]).sqrt();
                    }
                }
                if i == ny - 1 {
                    if let EdgeCondition::Flux(g) = &problem.exit {
                        b += g[j] * tw[j];
                    }
                }
                if j == nt - 1 {
                    if let EdgeCondition::Flux(g) = &problem.wall {
                        b += g[i] * wy[i] * l[j];
                    }
                }
                boundary[k] = b;
                load[k] += b;
            }
        }

        if let Some((fx, fr)) = &problem.flux {
            let yf = Array2::from_shape_fn((ny, nt), |(i, j)| {
                fx[[i, j]] + (grid.y(i) - 1.0) * fp[j] * fr[[i, j]]
            });
            let tf = Array2::from_shape_fn((ny, nt), |(i, j)| l[j] * fr[[i, j]]);
            let mut out = vec![0.0; ny * nt];
            for j in 0..nt {
                for i in 0..ny - 1 {
                    let flux = tw[j] * 0.5 * (yf[[i, j]] + yf[[i + 1, j]]);
                    out[i * nt + j] += flux;
                    out[(i + 1) * nt + j] -= flux;
                }
                out[j] -= tw[j] * yf[[0, j]];
                out[(ny - 1) * nt + j] += tw[j] * yf[[ny - 1, j]];
            }
            for i in 0..ny {
                for j in 0..nt - 1 {
                    let tm = 0.5 * (grid.t(j) + grid.t(j + 1));
                    let flux = wy[i] * tm * 0.5 * (tf[[i, j]] + tf[[i, j + 1]]);
                    out[i * nt + j] += flux;
                    out[i * nt + j + 1] -= flux;
                }
                out[i * nt + nt - 1] += wy[i] * tf[[i, nt - 1]];
            }
            for k in 0..ny * nt {
                load[k] -= out[k];
            }
        }

        let has_mixed = fp.iter().any(|v| *v != 0.0);
        Ok(Self {
            ny,
            nt,
            hy,
            ht,
            cy,
            ct,
            my,
            mt,
            zero_order,
            fixed,
            load,
            boundary,
            has_mixed,
        })
    }

    fn diag(&self) -> Vec<f64> {
        let (ny, nt) = (self.ny, self.nt);
        let mut d = self.zero_order.clone();
        for i in 0..ny - 1 {
            for j in 0..nt {
                let c = self.cy[i * nt + j];
                d[self.idx(i, j)] += c;
                d[self.idx(i + 1, j)] += c;
            }
        }
        for i in 0..ny {
            for j in 0..nt - 1 {
                let c = self.ct[i * (nt - 1) + j];
                d[self.idx(i, j)] += c;
                d[self.idx(i, j + 1)] += c;
            }
        }
        d
    }

    /// `Σ_faces c (u_nb - u_P) + mixed fluxes - zero-order term` per control volume.
    fn operator(&self, u: &[f64], mixed: bool) -> Vec<f64> {
        let (ny, nt) = (self.ny, self.nt);
        let mut out: Vec<f64> = (0..ny * nt).map(|k| -self.zero_order[k] * u[k]).collect();
        for i in 0..ny - 1 {
            for j in 0..nt {
                let (p, e) = (self.idx(i, j), self.idx(i + 1, j));
                let flux = self.cy[i * nt + j] * (u[e] - u[p]);
                out[p] += flux;
                out[e] -= flux;
            }
        }
        for i in 0..ny {
            for j in 0..nt - 1 {
                let (p, n) = (self.idx(i, j), self.idx(i, j + 1));
                let flux = self.ct[i * (nt - 1) + j] * (u[n] - u[p]);
                out[p] += flux;
                out[n] -= flux;
            }
        }
        if mixed && self.has_mixed {
            let m = self.mixed_fluxes(u);
            for k in 0..ny * nt {
                out[k] += m[k];
            }
        }
        out
    }

    fn mixed_fluxes(&self, u: &[f64]) -> Vec<f64> {
        let (ny, nt) = (self.ny, self.nt);
        let field = Array2::from_shape_vec((ny, nt), u.to_vec()).expect("shape");
        let uy = d_y(&field, self.hy);
        let ut = d_t(&field, self.ht);
        let mut out = vec![0.0; ny * nt];
        for i in 0..ny - 1 {
            for j in 0..nt {
                let flux = self.my[i * nt + j] * 0.5 * (ut[[i, j]] + ut[[i + 1, j]]);
                out[self.idx(i, j)] += flux;
                out[self.idx(i + 1, j)] -= flux;
            }
        }
        for i in 0..ny {
            for j in 0..nt - 1 {
                let flux = self.mt[i * (nt - 1) + j] * 0.5 * (uy[[i, j]] + uy[[i, j + 1]]);
                out[self.idx(i, j)] += flux;
                out[self.idx(i, j + 1)] -= flux;
            }
        }
        out
    }

    /// Full discrete residual per control volume (zero at Dirichlet nodes).
    pub fn residual(&self, u: &Array2<f64>) -> Array2<f64> {
        let uv: Vec<f64> = u.iter().copied().collect();
        let op = self.operator(&uv, true);
        Array2::from_shape_fn((self.ny, self.nt), |(i, j)| {
            let k = self.idx(i, j);
            if self.fixed[k].is_some() {
                0.0
            } else {
                op[k] + self.load[k]
            }
        })
    }

    /// Applies the symmetric part restricted to unknowns.
    fn apply(&self, x: &[f64], diag: &[f64], y: &mut [f64]) {
        let (ny, nt) = (self.ny, self.nt);
        for k in 0..ny * nt {
            y[k] = if self.fixed[k].is_some() { 0.0 } else { diag[k] * x[k] };
        }
        for i in 0..ny - 1 {
            for j in 0..nt {
                let (p, e) = (self.idx(i, j), self.idx(i + 1, j));
                let c = self.cy[i * nt + j];
                if self.fixed[p].is_none() && self.fixed[e].is_none() {
                    y[p] -= c * x[e];
                    y[e] -= c * x[p];
                }
            }
        }
        for i in 0..ny {
            for j in 0..nt - 1 {
                let (p, n) = (self.idx(i, j), self.idx(i, j + 1));
                let c = self.ct[i * (nt - 1) + j];
                if self.fixed[p].is_none() && self.fixed[n].is_none() {
                    y[p] -= c * x[n];
                    y[n] -= c * x[p];
                }
            }
        }
    }

    /// Right-hand side of the symmetric system given lagged mixed fluxes.
    fn rhs(&self, mixed: Option<&[f64]>) -> Vec<f64> {
        let (ny, nt) = (self.ny, self.nt);
        let mut b = self.load.clone();
        if let Some(m) = mixed {
            for k in 0..ny * nt {
                b[k] += m[k];
            }
        }
        for i in 0..ny - 1 {
            for j in 0..nt {
                let (p, e) = (self.idx(i, j), self.idx(i + 1, j));
                let c = self.cy[i * nt + j];
                match (self.fixed[p], self.fixed[e]) {
                    (None, Some(v)) => b[p] += c * v,
                    (Some(v), None) => b[e] += c * v,
                    _ => {}
                }
            }
        }
        for i in 0..ny {
            for j in 0..nt - 1 {
                let (p, n) = (self.idx(i, j), self.idx(i, j + 1));
                let c = self.ct[i * (nt - 1) + j];
                match (self.fixed[p], self.fixed[n]) {
                    (None, Some(v)) => b[p] += c * v,
                    (Some(v), None) => b[n] += c * v,
                    _ => {}
                }
            }
        }
        for k in 0..ny * nt {
            if self.fixed[k].is_some() {
                b[k] = 0.0;
            }
        }
        b
    }

    fn pcg(&self, b: &[f64], x: &mut [f64], diag: &[f64], tol: f64) -> Result<(usize, f64)> {
        let n = b.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok((0, 0.0));
        }
        let mut ax = vec![0.0; n];
        self.apply(x, diag, &mut ax);
        let mut r: Vec<f64> = (0..n).map(|k| b[k] - ax[k]).collect();
        let inv: Vec<f64> = diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 0.0 }).collect();
        let mut z: Vec<f64> = (0..n).map(|k| r[k] * inv[k]).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut rel = dot(&r, &r).sqrt() / bnorm;
        let cap = 40 * (self.ny + self.nt) + 2000;
        let mut q = vec![0.0; n];
        for it in 0..cap {
            if rel <= tol {
                return Ok((it, rel));
            }
            self.apply(&p, diag, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(Error::LinearSolver { iterations: it, residual: rel });
            }
            let alpha = rz / pq;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * q[k];
            }
            rel = dot(&r, &r).sqrt() / bnorm;
            for k in 0..n {
                z[k] = r[k] * inv[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        if rel <= tol {
            Ok((cap, rel))
        } else {
            Err(Error::LinearSolver { iterations: cap, residual: rel })
        }
    }

    /// Solves the full system, removing the lagged mixed terms by defect correction.
    pub fn solve(&self, guess: Option<&Array2<f64>>, tol: f64) -> Result<(Array2<f64>, SolveStats)> {
        let (ny, nt) = (self.ny, self.nt);
        let diag = self.diag();
        let mut u: Vec<f64> = match guess {
            Some(g) => g.iter().copied().collect(),
            None => vec![0.0; ny * nt],
        };
        for k in 0..ny * nt {
            if let Some(v) = self.fixed[k] {
                u[k] = v;
            }
        }
        let mut stats = SolveStats::default();
        let max_passes = if self.has_mixed { 100 } else { 1 };
        for pass in 0..max_passes {
            let mixed = if self.has_mixed { Some(self.mixed_fluxes(&u)) } else { None };
            let b = self.rhs(mixed.as_deref());
            let mut x: Vec<f64> = (0..ny * nt)
                .map(|k| if self.fixed[k].is_some() { 0.0 } else { u[k] })
                .collect();
            let (its, rel) = self.pcg(&b, &mut x, &diag, tol)?;
            stats.cg_iterations += its;
            stats.passes = pass + 1;
            stats.relative_residual = rel;
            let mut change: f64 = 0.0;
            let mut size: f64 = 0.0;
            for k in 0..ny * nt {
                if self.fixed[k].is_none() {
                    change = change.max((x[k] - u[k]).abs());
                    u[k] = x[k];
                }
                size = size.max(u[k].abs());
            }
            if !self.has_mixed || change <= 1e-13 * size.max(1e-300) || change == 0.0 {
                break;
            }
            if pass + 1 == max_passes {
                return Err(Error::LinearSolver {
                    iterations: stats.cg_iterations,
                    residual: change / size.max(1e-300),
                });
            }
        }
        let field = Array2::from_shape_vec((ny, nt), u).expect("shape");
        Ok((field, stats))
    }

    /// Writes the symmetric matrix (unknowns only) and right-hand side in matrix-market
    /// coordinate format, to `<stem>.mtx` and `<stem>_rhs.mtx`.
    pub fn write_matrix_market(&self, stem: &Path) -> Result<()> {
        let (ny, nt) = (self.ny, self.nt);
        let mut number = vec![usize::MAX; ny * nt];
        let mut count = 0;
        for k in 0..ny * nt {
            if self.fixed[k].is_none() {
                number[k] = count;
                count += 1;
            }
        }
        let diag = self.diag();
        let mut entries = Vec::new();
        for k in 0..ny * nt {
            if number[k] != usize::MAX {
                entries.push((number[k], number[k], diag[k]));
            }
        }
        let mut push = |p: usize, q: usize, c: f64| {
            if number[p] != usize::MAX && number[q] != usize::MAX {
                entries.push((number[p], number[q], -c));
                entries.push((number[q], number[p], -c));
            }
        };
        for i in 0..ny - 1 {
            for j in 0..nt {
                push(i * nt + j, (i + 1) * nt + j, self.cy[i * nt + j]);
            }
        }
        for i in 0..ny {
            for j in 0..nt - 1 {
                push(i * nt + j, i * nt + j + 1, self.ct[i * (nt - 1) + j]);
            }
        }
        let mut text = format!(
            "%%MatrixMarket matrix coordinate real general\n{count} {count} {}\n",
            entries.len()
        );
        for (a, b, v) in &entries {
            text.push_str(&format!("{} {} {:.17e}\n", a + 1, b + 1, v));
        }
        let b = self.rhs(None);
        let mut rhs = format!("%%MatrixMarket matrix array real general\n{count} 1\n");
        for k in 0..ny * nt {
            if number[k] != usize::MAX {
                rhs.push_str(&format!("{:.17e}\n", b[k]));
            }
        }
        let mat_path = stem.with_extension("mtx");
        let rhs_path = stem.with_file_name(format!(
            "{}_rhs.mtx",
            stem.file_name().and_then(|s| s.to_str()).unwrap_or("system")
        ));
        for (path, body) in [(mat_path, text), (rhs_path, rhs)] {
            let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Integrated boundary flux against integrated sources for a solved system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxBalance {
    /// Prescribed boundary fluxes plus the fluxes through Dirichlet boundaries.
    pub boundary: f64,
    /// Integral of `div F + s` plus the zero-order term.
    pub interior: f64,
}

/// Discrete divergence theorem for `system` at `u`.
pub fn flux_balance(system: &System, u: &Array2<f64>) -> FluxBalance {
    let uv: Vec<f64> = u.iter().copied().collect();
    let op = system.operator(&uv, true);
    let mut boundary = 0.0;
    let mut interior = 0.0;
    for k in 0..uv.len() {
        let source = system.boundary[k] - system.load[k];
        interior += source + system.zero_order[k] * uv[k];
        if system.fixed[k].is_some() {
            boundary += source - op[k];
        } else {
            boundary += system.boundary[k];
        }
    }
    FluxBalance { boundary, interior }
}

/// Solves the potential problem; exit data must be Dirichlet.
pub fn solve_potential(
    problem: &EllipticProblem,
    grid: &FlattenedGrid,
    shock: &ShockCurve,
    lc: &LinearizedCoefficients,
    guess: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, SolveStats)> {
    if problem.kind != OperatorKind::Potential {
        return Err(Error::Domain("solve_potential needs a potential problem".into()));
    }
    if !matches!(problem.exit, EdgeCondition::Dirichlet(_)) {
        return Err(Error::Domain("potential problem needs Dirichlet exit data".into()));
    }
    System::assemble(problem, grid, shock, lc)?.solve(guess, 1e-11)
}

/// Solves the swirl problem.
pub fn solve_swirl(
    problem: &EllipticProblem,
    grid: &FlattenedGrid,
    shock: &ShockCurve,
    lc: &LinearizedCoefficients,
    guess: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, SolveStats)> {
    if problem.kind != OperatorKind::Swirl {
        return Err(Error::Domain("solve_swirl needs a swirl problem".into()));
    }
    System::assemble(problem, grid, shock, lc)?.solve(guess, 1e-11)
}
