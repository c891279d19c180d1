//! Polytropic-gas thermodynamics, the density closure `H`, and the
//! Rankine–Hugoniot algebra for a shock with normal `n` in the (x, r) plane.
//!
//! Every function here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adiabatic exponent and Bernoulli constant of the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasConstants {
    pub gamma: f64,
    pub b0: f64,
}

impl GasConstants {
    pub fn new(gamma: f64, b0: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
        }
        if !(b0 > 0.0) || !b0.is_finite() {
            return Err(Error::Domain(format!("Bernoulli constant must be positive, got {b0}")));
        }
        Ok(Self { gamma, b0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowRegime {
    Subsonic,
    Sonic,
    Supersonic,
}

/// Primitive state at a point: cylindrical velocity components, density, pressure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasState {
    pub u_x: f64,
    pub u_r: f64,
    pub u_theta: f64,
    pub rho: f64,
    pub p: f64,
}

impl GasState {
    pub fn new(u_x: f64, u_r: f64, u_theta: f64, rho: f64, p: f64) -> Self {
        Self {
            u_x,
            u_r,
            u_theta,
            rho,
            p,
        }
    }

    /// Purely axial state.
    pub fn axial(u_x: f64, rho: f64, p: f64) -> Self {
        Self::new(u_x, 0.0, 0.0, rho, p)
    }

    pub fn speed_sq(&self) -> f64 {
        self.u_x * self.u_x + self.u_r * self.u_r + self.u_theta * self.u_theta
    }

    /// Velocity component along `n` (meridional plane).
    pub fn normal_velocity(&self, n: Normal) -> f64 {
        self.u_x * n.x + self.u_r * n.r
    }

    /// Velocity component along the meridional tangent `(-n_r, n_x)`.
    pub fn tangential_velocity(&self, n: Normal) -> f64 {
        let [tx, tr] = n.tangent();
        self.u_x * tx + self.u_r * tr
    }

    pub fn entropy(&self, gamma: f64) -> f64 {
        self.p / self.rho.powf(gamma)
    }

    pub fn sound_speed(&self, gamma: f64) -> Result<f64> {
        sound_speed(self, gamma)
    }

    pub fn mach(&self, gamma: f64) -> Result<f64> {
        Ok(self.speed_sq().sqrt() / sound_speed(self, gamma)?)
    }

    pub fn regime(&self, gamma: f64) -> Result<FlowRegime> {
        let m = self.mach(gamma)?;
        Ok(if (m - 1.0).abs() <= 1e-12 {
            FlowRegime::Sonic
        } else if m < 1.0 {
            FlowRegime::Subsonic
        } else {
            FlowRegime::Supersonic
        })
    }

    fn check(&self) -> Result<()> {
        if !(self.rho > 0.0) {
            return Err(Error::Domain(format!("density must be positive, got {}", self.rho)));
        }
        if !(self.p > 0.0) {
            return Err(Error::Domain(format!("pressure must be positive, got {}", self.p)));
        }
        Ok(())
    }
}

/// Unit vector in the meridional (x, r) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normal {
    pub x: f64,
    pub r: f64,
}

impl Normal {
    pub const AXIAL: Normal = Normal { x: 1.0, r: 0.0 };

    /// Normalises `(x, r)`.
    pub fn new(x: f64, r: f64) -> Self {
        let len = x.hypot(r);
        Self { x: x / len, r: r / len }
    }

    /// Downstream-pointing normal of the curve `x = f(r)`: `(e_x - f' e_r)/sqrt(1+f'^2)`.
    pub fn of_shock(fprime: f64) -> Self {
        let s = (1.0 + fprime * fprime).sqrt();
        Self {
            x: 1.0 / s,
            r: -fprime / s,
        }
    }

    /// `(f' e_x + e_r)/sqrt(1+f'^2)` when built from [`Normal::of_shock`].
    pub fn tangent(&self) -> [f64; 2] {
        [-self.r, self.x]
    }
}

/// Weak-shock background: uniform supersonic flow jumping to uniform subsonic flow at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundShock {
    pub gamma: f64,
    pub b0: f64,
    pub upstream: GasState,
    pub downstream: GasState,
    /// Entropies `p/rho^gamma` on either side.
    pub s0m: f64,
    pub s0p: f64,
    /// Slopes of the background potentials `u0^± x`.
    pub u0m: f64,
    pub u0p: f64,
}

impl BackgroundShock {
    pub fn consts(&self) -> GasConstants {
        GasConstants {
            gamma: self.gamma,
            b0: self.b0,
        }
    }

    pub fn rho0m(&self) -> f64 {
        self.upstream.rho
    }

    pub fn rho0p(&self) -> f64 {
        self.downstream.rho
    }

    pub fn p0m(&self) -> f64 {
        self.upstream.p
    }

    pub fn p0p(&self) -> f64 {
        self.downstream.p
    }

    /// Reference background: gamma = 1.4, Mach-2 inflow with `u = 2`, `rho = 1`, `p = 1/1.4`.
    pub fn reference() -> Self {
        background_downstream(2.0, 1.0, 1.0 / 1.4, 1.4).expect("reference background is supersonic")
    }
}

pub fn sound_speed(state: &GasState, gamma: f64) -> Result<f64> {
    state.check()?;
    Ok((gamma * state.p / state.rho).sqrt())
}

/// `|u|^2/2 + gamma p / ((gamma-1) rho)`.
pub fn bernoulli(state: &GasState, gamma: f64) -> Result<f64> {
    if !(state.rho > 0.0) {
        return Err(Error::Domain(format!("density must be positive, got {}", state.rho)));
    }
    Ok(0.5 * state.speed_sq() + gamma * state.p / ((gamma - 1.0) * state.rho))
}

/// Density recovered from entropy and velocity under `B = B0`:
/// `[((gamma-1)/(gamma S)) (B0 - |q|^2/2)]^(1/(gamma-1))`.
pub fn density_h(entropy: f64, q: [f64; 3], consts: &GasConstants) -> Result<f64> {
    if !(entropy > 0.0) {
        return Err(Error::Domain(format!("entropy must be positive, got {entropy}")));
    }
    let margin = consts.b0 - 0.5 * (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    if !(margin > 0.0) {
        return Err(Error::Vacuum { margin });
    }
    let g = consts.gamma;
    Ok(((g - 1.0) / (g * entropy) * margin).powf(1.0 / (g - 1.0)))
}

/// `H` together with `dH/dS` and `dH/dq`.
pub fn density_h_with_gradient(
    entropy: f64,
    q: [f64; 3],
    consts: &GasConstants,
) -> Result<(f64, f64, [f64; 3])> {
    let h = density_h(entropy, q, consts)?;
    let gm1 = consts.gamma - 1.0;
    let margin = consts.b0 - 0.5 * (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
    let d_entropy = -h / (gm1 * entropy);
    let k = -h / (gm1 * margin);
    Ok((h, d_entropy, [k * q[0], k * q[1], k * q[2]]))
}

/// Downstream constants of the normal background shock.
pub fn background_downstream(u0m: f64, rho0m: f64, p0m: f64, gamma: f64) -> Result<BackgroundShock> {
    let upstream = GasState::axial(u0m, rho0m, p0m);
    let c = sound_speed(&upstream, gamma)?;
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("gamma must exceed 1, got {gamma}")));
    }
    if !(u0m > c) {
        return Err(Error::Precondition(format!(
            "upstream speed {u0m} is not supersonic (sound speed {c})"
        )));
    }
    let b0 = 0.5 * u0m * u0m + gamma * p0m / ((gamma - 1.0) * rho0m);
    let u0p = 2.0 * (gamma - 1.0) / ((gamma + 1.0) * u0m) * b0;
    let rho0p = rho0m * u0m / u0p;
    let p0p = rho0m * u0m * u0m + p0m - rho0p * u0p * u0p;
    let downstream = GasState::axial(u0p, rho0p, p0p);
    Ok(BackgroundShock {
        gamma,
        b0,
        upstream,
        downstream,
        s0m: p0m / rho0m.powf(gamma),
        s0p: p0p / rho0p.powf(gamma),
        u0m,
        u0p,
    })
}

/// `(2(gamma-1)/(gamma+1)) (|u.n|^2/2 + gamma p/((gamma-1) rho))`; equals the product of the
/// normal velocities on the two sides of the shock.
pub fn ks(upstream: &GasState, n: Normal, gamma: f64) -> Result<f64> {
    upstream.check()?;
    let un = upstream.normal_velocity(n);
    Ok(2.0 * (gamma - 1.0) / (gamma + 1.0)
        * (0.5 * un * un + gamma * upstream.p / ((gamma - 1.0) * upstream.rho)))
}

fn shock_inputs(upstream: &GasState, n: Normal, gamma: f64) -> Result<(f64, f64)> {
    let k = ks(upstream, n, gamma)?;
    let un = upstream.normal_velocity(n);
    if !(un > 0.0) {
        return Err(Error::Precondition(format!(
            "upstream normal velocity must be positive, got {un}"
        )));
    }
    if un * un < k * (1.0 - 1e-12) {
        return Err(Error::Precondition(format!(
            "upstream normal velocity {un} is subsonic (K_s = {k})"
        )));
    }
    Ok((un, k))
}

/// Post-shock entropy.
pub fn s_sh(upstream: &GasState, n: Normal, gamma: f64) -> Result<f64> {
    let (un, k) = shock_inputs(upstream, n, gamma)?;
    let m = upstream.rho * un * un;
    Ok((m + upstream.p - upstream.rho * k) * (m / k).powf(-gamma))
}

/// Downstream state across a shock with normal `n`.
pub fn post_shock_state(upstream: &GasState, n: Normal, gamma: f64) -> Result<GasState> {
    let (un, k) = shock_inputs(upstream, n, gamma)?;
    let entropy = s_sh(upstream, n, gamma)?;
    let un_plus = k / un;
    let ut = upstream.tangential_velocity(n);
    let rho = upstream.rho * un * un / k;
    let [tx, tr] = n.tangent();
    Ok(GasState {
        u_x: un_plus * n.x + ut * tx,
        u_r: un_plus * n.r + ut * tr,
        u_theta: upstream.u_theta,
        rho,
        p: entropy * rho.powf(gamma),
    })
}

/// Jumps `left - right` of (mass flux, normal momentum flux, energy flux, tangential velocity,
/// swirl velocity) across a surface with normal `n`.
pub fn rh_residual(left: &GasState, right: &GasState, n: Normal, gamma: f64) -> [f64; 5] {
    let parts = |s: &GasState| {
        let un = s.normal_velocity(n);
        let b = 0.5 * s.speed_sq() + gamma * s.p / ((gamma - 1.0) * s.rho);
        [
            s.rho * un,
            s.rho * un * un + s.p,
            s.rho * un * b,
            s.tangential_velocity(n),
            s.u_theta,
        ]
    };
    let (l, r) = (parts(left), parts(right));
    [l[0] - r[0], l[1] - r[1], l[2] - r[2], l[3] - r[3], l[4] - r[4]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const G: f64 = 1.4;

    fn reference() -> BackgroundShock {
        BackgroundShock::reference()
    }

    #[test]
    fn sound_speed_examples() {
        let s = GasState::axial(0.0, 1.0, 1.0 / 1.4);
        assert_abs_diff_eq!(sound_speed(&s, G).unwrap(), 1.0, epsilon = 1e-15);
        let s = GasState::axial(0.0, 8.0 / 3.0, 3.2142857);
        assert_abs_diff_eq!(sound_speed(&s, G).unwrap(), 1.299038, epsilon = 1e-6);
        let s = GasState::axial(0.0, 2.0, 1.0);
        assert_eq!(sound_speed(&s, 2.0).unwrap(), 1.0);
        assert!(sound_speed(&GasState::axial(0.0, 0.0, 1.0), G).is_err());
        assert!(sound_speed(&GasState::axial(0.0, 1.0, -1.0), G).is_err());
    }

    #[test]
    fn bernoulli_examples() {
        let s = GasState::axial(2.0, 1.0, 1.0 / 1.4);
        assert_abs_diff_eq!(bernoulli(&s, G).unwrap(), 4.5, epsilon = 1e-14);
        let s = GasState::axial(0.75, 8.0 / 3.0, 45.0 / 14.0);
        assert_abs_diff_eq!(bernoulli(&s, G).unwrap(), 4.5, epsilon = 1e-14);
        let s = GasState::axial(0.0, 1.0, 0.0);
        assert_eq!(bernoulli(&s, G).unwrap(), 0.0);
        assert!(bernoulli(&GasState::axial(1.0, 0.0, 1.0), G).is_err());
    }

    #[test]
    fn density_closure_reproduces_background_densities() {
        let bg = reference();
        let c = bg.consts();
        let rho_p = density_h(bg.s0p, [0.75, 0.0, 0.0], &c).unwrap();
        assert_abs_diff_eq!(rho_p, 8.0 / 3.0, epsilon = 1e-12);
        let rho_m = density_h(1.0 / 1.4, [2.0, 0.0, 0.0], &c).unwrap();
        assert_abs_diff_eq!(rho_m, 1.0, epsilon = 1e-12);
        let q = [3.0, 0.0, 0.0]; // |q|^2 = 2 B0
        assert!(matches!(density_h(1.0, q, &c), Err(Error::Vacuum { .. })));
        assert!(matches!(density_h(0.0, [0.5, 0.0, 0.0], &c), Err(Error::Domain(_))));
    }

    #[test]
    fn density_gradient_matches_central_differences() {
        let c = reference().consts();
        let q = [0.8, 0.05, -0.03];
        let s = 0.82;
        let (_, ds, dq) = density_h_with_gradient(s, q, &c).unwrap();
        let e = 1e-6;
        let fd_s = (density_h(s + e, q, &c).unwrap() - density_h(s - e, q, &c).unwrap()) / (2.0 * e);
        assert_abs_diff_eq!(ds, fd_s, epsilon = 1e-8);
        for k in 0..3 {
            let (mut qp, mut qm) = (q, q);
            qp[k] += e;
            qm[k] -= e;
            let fd = (density_h(s, qp, &c).unwrap() - density_h(s, qm, &c).unwrap()) / (2.0 * e);
            assert_abs_diff_eq!(dq[k], fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn reference_background_matches_mach_two_tables() {
        let bg = reference();
        assert_abs_diff_eq!(bg.u0p, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(bg.rho0p(), 8.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bg.p0p(), 45.0 / 14.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bg.p0p() / bg.p0m(), 4.5, epsilon = 1e-12);
        let m2 = bg.downstream.mach(G).unwrap();
        assert_abs_diff_eq!(m2 * m2, 1.0 / 3.0, epsilon = 1e-12);
        // Prandtl: u0+ u0- = 2 (gamma-1) B0 / (gamma+1)
        assert_abs_diff_eq!(bg.u0p * bg.u0m, 0.8 / 2.4 * 4.5, epsilon = 1e-12);
        assert_abs_diff_eq!(bg.s0p, 0.814_194_666_072_691, epsilon = 1e-12);
    }

    #[test]
    fn weak_shock_limit_is_continuous() {
        let p = 1.0 / 1.4;
        let bg = background_downstream(1.0001, 1.0, p, G).unwrap();
        assert!((bg.u0p - 1.0001).abs() < 1e-3);
        assert!((bg.rho0p() - 1.0).abs() < 1e-3);
        assert!(background_downstream(0.9, 1.0, p, G).is_err());
    }

    #[test]
    fn ks_examples() {
        let bg = reference();
        assert_abs_diff_eq!(ks(&bg.upstream, Normal::AXIAL, G).unwrap(), 1.5, epsilon = 1e-12);
        let n = Normal::of_shock(0.1);
        let un = 2.0 / 1.01f64.sqrt();
        let expected = 2.0 * 0.4 / 2.4 * (0.5 * un * un + 1.4 * (1.0 / 1.4) / 0.4);
        assert_abs_diff_eq!(ks(&bg.upstream, n, G).unwrap(), expected, epsilon = 1e-14);
        let mut swirled = bg.upstream;
        swirled.u_theta = 0.3;
        assert_eq!(ks(&swirled, n, G).unwrap(), ks(&bg.upstream, n, G).unwrap());
    }

    #[test]
    fn post_shock_entropy() {
        let bg = reference();
        assert_abs_diff_eq!(s_sh(&bg.upstream, Normal::AXIAL, G).unwrap(), bg.s0p, epsilon = 1e-12);
        // sonic normal component: vanishing shock
        let c = 1.0;
        let sonic = GasState::axial(c, 1.0, 1.0 / 1.4);
        assert_abs_diff_eq!(s_sh(&sonic, Normal::AXIAL, G).unwrap(), 1.0 / 1.4, epsilon = 1e-12);
        let sub = GasState::axial(0.8, 1.0, 1.0 / 1.4);
        assert!(matches!(s_sh(&sub, Normal::AXIAL, G), Err(Error::Precondition(_))));
    }

    #[test]
    fn entropy_increases_over_mach_sweep() {
        for k in 1..=400 {
            let mach = 1.0 + 4.0 * k as f64 / 400.0;
            let s = GasState::axial(mach, 1.0, 1.0 / 1.4);
            let sm = s.entropy(G);
            assert!(s_sh(&s, Normal::AXIAL, G).unwrap() >= sm * (1.0 - 1e-14), "mach {mach}");
        }
    }

    #[test]
    fn post_shock_state_examples() {
        let bg = reference();
        let d = post_shock_state(&bg.upstream, Normal::AXIAL, G).unwrap();
        assert_abs_diff_eq!(d.u_x, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(d.u_r, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.rho, 8.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.p, 45.0 / 14.0, epsilon = 1e-12);

        let up = GasState::new(2.1, 0.05, 0.2, 1.1, 0.7);
        let n = Normal::of_shock(-0.2);
        let d = post_shock_state(&up, n, G).unwrap();
        assert_eq!(d.u_theta, up.u_theta);
        assert_abs_diff_eq!(d.tangential_velocity(n), up.tangential_velocity(n), epsilon = 1e-14);
    }

    #[test]
    fn rh_residual_examples() {
        let bg = reference();
        let r = rh_residual(&bg.upstream, &bg.downstream, Normal::AXIAL, G);
        for c in r {
            assert!(c.abs() < 1e-12, "{r:?}");
        }
        let s = GasState::new(1.3, 0.2, 0.1, 0.9, 0.6);
        assert_eq!(rh_residual(&s, &s, Normal::of_shock(0.3), G), [0.0; 5]);
        let eps = 1e-3;
        let mut bumped = bg.downstream;
        bumped.p += eps;
        let r = rh_residual(&bg.upstream, &bumped, Normal::AXIAL, G);
        assert_abs_diff_eq!(r[1], -eps, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn post_shock_state_satisfies_jump_relations(
                mach in 1.05f64..4.0,
                fprime in -0.3f64..0.3,
                swirl in -0.3f64..0.3,
                radial in -0.2f64..0.2,
            ) {
                let n = Normal::of_shock(fprime);
                // upstream normal Mach number fixed at `mach`
                let rho = 1.0;
                let p = 1.0 / G;
                let un = mach;
                let ut = radial;
                let [tx, tr] = n.tangent();
                let up = GasState::new(un * n.x + ut * tx, un * n.r + ut * tr, swirl, rho, p);
                let down = post_shock_state(&up, n, G).unwrap();
                for c in rh_residual(&up, &down, n, G) {
                    prop_assert!(c.abs() < 1e-12);
                }
                let k = ks(&up, n, G).unwrap();
                prop_assert!((up.normal_velocity(n) * down.normal_velocity(n) - k).abs() < 1e-12);
                let rho_h = density_h(
                    s_sh(&up, n, G).unwrap(),
                    [down.u_x, down.u_r, down.u_theta],
                    &GasConstants::new(G, bernoulli(&up, G).unwrap()).unwrap(),
                ).unwrap();
                prop_assert!((rho_h - up.rho * un * un / k).abs() < 1e-12);
                prop_assert!((bernoulli(&down, G).unwrap() - bernoulli(&up, G).unwrap()).abs() < 1e-12);
                let c_down = sound_speed(&down, G).unwrap();
                let c_up = sound_speed(&up, G).unwrap();
                prop_assert!(down.normal_velocity(n) / c_down < 1.0);
                prop_assert!(up.normal_velocity(n) / c_up > 1.0);
            }
        }
    }
}
