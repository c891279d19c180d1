//! Exact x-independent supersonic inflows with swirl and variable entropy, and their
//! Helmholtz decomposition into (S⁻, Λ⁻, φ⁻, ψ⁻).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gasdyn::{background_downstream, BackgroundShock, GasState};
use crate::interp::{solve_tridiagonal, EndCondition, Hermite};

/// Radial shape of the angular momentum density `Λ⁻ = eps_swirl · shape(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SwirlProfile {
    /// `r²(1 - r²)`: swirl vanishes on the axis and at the wall.
    #[default]
    Parabolic,
    /// `r²`: solid-body rotation.
    SolidBody,
}

impl SwirlProfile {
    fn shape(self, r: f64) -> f64 {
        match self {
            SwirlProfile::Parabolic => r * r * (1.0 - r * r),
            SwirlProfile::SolidBody => r * r,
        }
    }

    /// `shape² / r³`, regular at the axis.
    fn shape_sq_over_r3(self, r: f64) -> f64 {
        match self {
            SwirlProfile::Parabolic => {
                let w = 1.0 - r * r;
                r * w * w
            }
            SwirlProfile::SolidBody => r,
        }
    }

    /// `shape / r`, i.e. the swirl velocity per unit amplitude.
    fn shape_over_r(self, r: f64) -> f64 {
        match self {
            SwirlProfile::Parabolic => r * (1.0 - r * r),
            SwirlProfile::SolidBody => r,
        }
    }
}

/// Radial shape of the relative entropy perturbation `S⁻ = S₀⁻(1 + eps_entropy · shape(r))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EntropyProfile {
    /// `cos(πr)`.
    #[default]
    Cosine,
    /// `(1 - r²)²`.
    Bump,
}

impl EntropyProfile {
    fn shape(self, r: f64) -> f64 {
        match self {
            EntropyProfile::Cosine => (std::f64::consts::PI * r).cos(),
            EntropyProfile::Bump => (1.0 - r * r).powi(2),
        }
    }
}

fn default_u0m() -> f64 {
    2.0
}
fn default_rho0m() -> f64 {
    1.0
}
fn default_p0m() -> f64 {
    1.0 / 1.4
}
fn default_n_radial() -> usize {
    513
}

/// Parameters of the parallel-swirl inflow family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflowSpec {
    #[serde(default)]
    pub eps_swirl: f64,
    #[serde(default)]
    pub eps_entropy: f64,
    #[serde(default)]
    pub swirl_profile: SwirlProfile,
    #[serde(default)]
    pub entropy_profile: EntropyProfile,
    /// Background upstream velocity, density and pressure.
    #[serde(default = "default_u0m")]
    pub u0m: f64,
    #[serde(default = "default_rho0m")]
    pub rho0m: f64,
    #[serde(default = "default_p0m")]
    pub p0m: f64,
    /// Number of radial samples on [0, 1].
    #[serde(default = "default_n_radial")]
    pub n_radial: usize,
}

impl Default for InflowSpec {
    fn default() -> Self {
        Self {
            eps_swirl: 0.0,
            eps_entropy: 0.0,
            swirl_profile: SwirlProfile::default(),
            entropy_profile: EntropyProfile::default(),
            u0m: default_u0m(),
            rho0m: default_rho0m(),
            p0m: default_p0m(),
            n_radial: default_n_radial(),
        }
    }
}

impl InflowSpec {
    pub fn new(eps_swirl: f64, eps_entropy: f64) -> Self {
        Self {
            eps_swirl,
            eps_entropy,
            ..Self::default()
        }
    }

    /// Same shapes with both amplitudes multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            eps_swirl: self.eps_swirl * factor,
            eps_entropy: self.eps_entropy * factor,
            ..self.clone()
        }
    }

    /// Every violated constraint, with the offending field named.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                v.push(msg);
            }
        };
        check(
            self.eps_swirl >= 0.0 && self.eps_swirl.is_finite(),
            format!("inflow.eps_swirl must be a finite number >= 0, got {}", self.eps_swirl),
        );
        check(
            self.eps_entropy >= 0.0 && self.eps_entropy.is_finite(),
            format!("inflow.eps_entropy must be a finite number >= 0, got {}", self.eps_entropy),
        );
        check(self.u0m > 0.0, format!("inflow.u0m must be positive, got {}", self.u0m));
        check(self.rho0m > 0.0, format!("inflow.rho0m must be positive, got {}", self.rho0m));
        check(self.p0m > 0.0, format!("inflow.p0m must be positive, got {}", self.p0m));
        check(
            self.n_radial >= 9,
            format!("inflow.n_radial must be at least 9, got {}", self.n_radial),
        );
        v
    }
}

/// Radial profiles of an x-independent supersonic inflow and its decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpstreamSolution {
    pub spec: InflowSpec,
    pub background: BackgroundShock,
    pub r: Vec<f64>,
    pub u_x: Vec<f64>,
    pub u_theta: Vec<f64>,
    pub rho: Vec<f64>,
    pub p: Vec<f64>,
    pub entropy: Vec<f64>,
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    /// `∂_r ψ⁻`.
    pub dpsi: Vec<f64>,
    /// `φ⁻(x, r_j) = phi_slope[j] · x`.
    pub phi_slope: Vec<f64>,
    pub sigma: f64,
}

/// RK4 integration of `p' = ρΛ²/r³`, `ρ = (p/S)^(1/γ)` on a uniform grid of `n` nodes.
pub fn integrate_radial_pressure(spec: &InflowSpec, gamma: f64, n: usize) -> Vec<f64> {
    let s0m = spec.p0m / spec.rho0m.powf(gamma);
    let entropy = |r: f64| s0m * (1.0 + spec.eps_entropy * spec.entropy_profile.shape(r));
    let eps2 = spec.eps_swirl * spec.eps_swirl;
    let rhs = |r: f64, p: f64| {
        let rho = (p / entropy(r)).powf(1.0 / gamma);
        rho * eps2 * spec.swirl_profile.shape_sq_over_r3(r)
    };
    let h = 1.0 / (n - 1) as f64;
    let mut p = vec![spec.p0m; n];
    for j in 0..n - 1 {
        let r = j as f64 * h;
        let y = p[j];
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * h, y + 0.5 * h * k1);
        let k3 = rhs(r + 0.5 * h, y + 0.5 * h * k2);
        let k4 = rhs(r + h, y + h * k3);
        p[j + 1] = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    p
}

/// Builds the x-independent inflow of the family described by `spec`.
pub fn build_parallel_swirl_inflow(spec: &InflowSpec, gamma: f64) -> Result<UpstreamSolution> {
    let problems = spec.violations();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let background = background_downstream(spec.u0m, spec.rho0m, spec.p0m, gamma)?;
    let n = spec.n_radial;
    let h = 1.0 / (n - 1) as f64;
    let r: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let p = integrate_radial_pressure(spec, gamma, n);

    let mut u_x = vec![0.0; n];
    let mut u_theta = vec![0.0; n];
    let mut rho = vec![0.0; n];
    let mut entropy = vec![0.0; n];
    let mut lambda = vec![0.0; n];
    for j in 0..n {
        let rj = r[j];
        entropy[j] = background.s0m * (1.0 + spec.eps_entropy * spec.entropy_profile.shape(rj));
        if !(entropy[j] > 0.0) {
            return Err(Error::AmplitudeTooLarge(format!(
                "entropy is non-positive at r = {rj:.4}"
            )));
        }
        lambda[j] = spec.eps_swirl * spec.swirl_profile.shape(rj);
        u_theta[j] = spec.eps_swirl * spec.swirl_profile.shape_over_r(rj);
        rho[j] = (p[j] / entropy[j]).powf(1.0 / gamma);
        // B0 = u0m²/2 + h0, written so that the background is reproduced exactly.
        let h0 = gamma * spec.p0m / ((gamma - 1.0) * spec.rho0m);
        let hj = gamma * p[j] / ((gamma - 1.0) * rho[j]);
        let radicand = spec.u0m * spec.u0m + 2.0 * (h0 - hj) - u_theta[j] * u_theta[j];
        if !(radicand > 0.0) {
            return Err(Error::AmplitudeTooLarge(format!(
                "axial kinetic energy is negative at r = {rj:.4}"
            )));
        }
        u_x[j] = radicand.sqrt();
        let state = GasState::new(u_x[j], 0.0, u_theta[j], rho[j], p[j]);
        let c2 = gamma * p[j] / rho[j];
        if !(state.speed_sq() > c2) {
            return Err(Error::AmplitudeTooLarge(format!(
                "inflow is not supersonic at r = {rj:.4}"
            )));
        }
        if !(u_x[j] > 0.0) {
            return Err(Error::AmplitudeTooLarge(format!("axial velocity vanishes at r = {rj:.4}")));
        }
    }

    let mut sol = UpstreamSolution {
        spec: spec.clone(),
        background,
        r,
        u_x,
        u_theta,
        rho,
        p,
        entropy,
        lambda,
        psi: vec![0.0; n],
        dpsi: vec![0.0; n],
        phi_slope: vec![spec.u0m; n],
        sigma: 0.0,
    };
    helmholtz_decompose_upstream(&mut sol)?;
    sol.sigma = sigma_measure(&sol);
    Ok(sol)
}

fn centered_derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    for j in 1..n - 1 {
        d[j] = (v[j + 1] - v[j - 1]) / (2.0 * h);
    }
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d
}

/// Solves `ψ'' + ψ'/r - ψ/r² = ∂_r u_x⁻`, `ψ(0) = ψ(1) = 0`, and sets `φ⁻ = x(u_x⁻ - ψ/r - ψ')`.
pub fn helmholtz_decompose_upstream(sol: &mut UpstreamSolution) -> Result<()> {
    let n = sol.r.len();
    let h = sol.r[1] - sol.r[0];
    let dux = centered_derivative(&sol.u_x, h);
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for j in 1..n - 1 {
        let r = sol.r[j];
        sub[j] = 1.0 / (h * h) - 1.0 / (2.0 * h * r);
        diag[j] = -2.0 / (h * h) - 1.0 / (r * r);
        sup[j] = 1.0 / (h * h) + 1.0 / (2.0 * h * r);
        rhs[j] = dux[j];
    }
    let psi = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
    let dpsi = centered_derivative(&psi, h);
    let phi_slope = (0..n)
        .map(|j| {
            let psi_over_r = if j == 0 { dpsi[0] } else { psi[j] / sol.r[j] };
            sol.u_x[j] - psi_over_r - dpsi[j]
        })
        .collect();
    sol.psi = psi;
    sol.dpsi = dpsi;
    sol.phi_slope = phi_slope;
    Ok(())
}

/// Discrete C¹ proxy of the deviation from the uniform background:
/// largest deviation plus largest difference quotient of the deviation.
pub fn sigma_measure(sol: &UpstreamSolution) -> f64 {
    let bg = &sol.background;
    let devs: [Vec<f64>; 4] = [
        sol.u_x.iter().map(|v| v - bg.u0m).collect(),
        sol.u_theta.clone(),
        sol.rho.iter().map(|v| v - bg.rho0m()).collect(),
        sol.p.iter().map(|v| v - bg.p0m()).collect(),
    ];
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for d in &devs {
        for j in 0..d.len() {
            c0 = c0.max(d[j].abs());
            if j + 1 < d.len() {
                c1 = c1.max(((d[j + 1] - d[j]) / (sol.r[j + 1] - sol.r[j])).abs());
            }
        }
    }
    c0 + c1
}

/// Residual `∂_r p - ρΛ²/r³` of the radial momentum equation at every sample,
/// with a fourth-order difference for `∂_r p`.
pub fn radial_momentum_residual(sol: &UpstreamSolution) -> Vec<f64> {
    let n = sol.r.len();
    let h = sol.r[1] - sol.r[0];
    let p = &sol.p;
    let eps2 = sol.spec.eps_swirl * sol.spec.eps_swirl;
    (0..n)
        .map(|j| {
            let dp = if j >= 2 && j + 2 < n {
                (p[j - 2] - 8.0 * p[j - 1] + 8.0 * p[j + 1] - p[j + 2]) / (12.0 * h)
            } else if j < 2 {
                (-25.0 * p[j] + 48.0 * p[j + 1] - 36.0 * p[j + 2] + 16.0 * p[j + 3] - 3.0 * p[j + 4])
                    / (12.0 * h)
            } else {
                (25.0 * p[j] - 48.0 * p[j - 1] + 36.0 * p[j - 2] - 16.0 * p[j - 3] + 3.0 * p[j - 4])
                    / (12.0 * h)
            };
            dp - sol.rho[j] * eps2 * sol.spec.swirl_profile.shape_sq_over_r3(sol.r[j])
        })
        .collect()
}

/// Sampled radial profile with exact node lookup and spline interpolation between nodes.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    n: usize,
    values: Vec<f64>,
    spline: Hermite,
}

impl RadialProfile {
    pub fn new(r: &[f64], values: &[f64]) -> Result<Self> {
        Ok(Self {
            n: r.len(),
            values: values.to_vec(),
            spline: Hermite::spline(r, values, EndCondition::NotAKnot, EndCondition::NotAKnot)?,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let pos = r * (self.n - 1) as f64;
        let k = pos.round();
        if (pos - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < self.n {
            self.values[k as usize]
        } else {
            self.spline.eval(r)
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        self.spline.deriv(r)
    }
}

/// Interpolating view of an [`UpstreamSolution`] at arbitrary radii.
#[derive(Debug, Clone)]
pub struct UpstreamSampler {
    pub u_x: RadialProfile,
    pub u_theta: RadialProfile,
    pub rho: RadialProfile,
    pub p: RadialProfile,
    pub lambda: RadialProfile,
    pub entropy: RadialProfile,
    pub psi: RadialProfile,
    pub dpsi: RadialProfile,
    pub phi_slope: RadialProfile,
}

impl UpstreamSampler {
    pub fn new(sol: &UpstreamSolution) -> Result<Self> {
        let r = &sol.r;
        Ok(Self {
            u_x: RadialProfile::new(r, &sol.u_x)?,
            u_theta: RadialProfile::new(r, &sol.u_theta)?,
            rho: RadialProfile::new(r, &sol.rho)?,
            p: RadialProfile::new(r, &sol.p)?,
            lambda: RadialProfile::new(r, &sol.lambda)?,
            entropy: RadialProfile::new(r, &sol.entropy)?,
            psi: RadialProfile::new(r, &sol.psi)?,
            dpsi: RadialProfile::new(r, &sol.dpsi)?,
            phi_slope: RadialProfile::new(r, &sol.phi_slope)?,
        })
    }

    pub fn state(&self, r: f64) -> GasState {
        GasState::new(
            self.u_x.eval(r),
            0.0,
            self.u_theta.eval(r),
            self.rho.eval(r),
            self.p.eval(r),
        )
    }

    /// `φ⁻(x, r)`.
    pub fn phi(&self, x: f64, r: f64) -> f64 {
        self.phi_slope.eval(r) * x
    }
}
