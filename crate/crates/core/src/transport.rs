//! Transport of `(S, Λ)` from the shock along streamlines, using the mass-flux stream
//! function on the flattened grid.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result, SmallnessProxy};
use crate::fields::{Kinematics, Metric};
use crate::gasdyn::{density_h, GasConstants};
use crate::geometry::FlattenedGrid;
use crate::interp::Hermite;

/// Flattened mass-flux components `N_y = M_x + (y-1) f' M_r`, `N_t = (1-f) M_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassFlux {
    pub n_y: Array2<f64>,
    pub n_t: Array2<f64>,
}

/// Stream function `w(y,t) = ∫₀ᵗ z N_y(y,z) dz`, its shock trace `𝒢(t) = w(0,t)`, and the
/// shock-foot radius field once traced.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTrace {
    pub w: Array2<f64>,
    pub g_table: Vec<f64>,
    /// `max_y |w(y,1) - 𝒢(1)|` before normalisation.
    pub imbalance: f64,
    /// Allowed imbalance `5 h² ‖N‖∞`.
    pub tolerance: f64,
}

/// Mass flux of the current state; `floor` is the smallest admissible `N_y`.
pub fn mass_flux(
    entropy: &Array2<f64>,
    kin: &Kinematics,
    grid: &FlattenedGrid,
    metric: &Metric,
    consts: &GasConstants,
    floor: f64,
) -> Result<MassFlux> {
    let mut n_y = grid.zeros();
    let mut n_t = grid.zeros();
    for i in 0..grid.ny {
        let ym1 = grid.y(i) - 1.0;
        for j in 0..grid.nt {
            let q = kin.q(i, j);
            let h = density_h(entropy[[i, j]], q, consts)?;
            let (mx, mr) = (h * q[0], h * q[1]);
            let ny = mx + ym1 * metric.fprime[j] * mr;
            if !(ny >= floor) {
                return Err(Error::Degeneracy {
                    proxy: SmallnessProxy::MassFluxFloor,
                    location: format!("y = {:.4}, t = {:.4}", grid.y(i), grid.t(j)),
                    reason: format!("axial mass flux {ny:.4} below {floor:.4}"),
                });
            }
            n_y[[i, j]] = ny;
            n_t[[i, j]] = metric.l[j] * mr;
        }
    }
    Ok(MassFlux { n_y, n_t })
}

/// Cumulative trapezoidal `w` in every column.
pub fn stream_function(flux: &MassFlux, grid: &FlattenedGrid) -> Result<StreamTrace> {
    let (ny, nt) = (grid.ny, grid.nt);
    let ht = grid.ht();
    let mut w = grid.zeros();
    for i in 0..ny {
        for j in 1..nt {
            let (t0, t1) = (grid.t(j - 1), grid.t(j));
            let inc = 0.5 * ht * (t0 * flux.n_y[[i, j - 1]] + t1 * flux.n_y[[i, j]]);
            w[[i, j]] = w[[i, j - 1]] + inc;
            if !(w[[i, j]] > w[[i, j - 1]]) {
                return Err(Error::Degeneracy {
                    proxy: SmallnessProxy::MassFluxFloor,
                    location: format!("y = {:.4}, t = {:.4}", grid.y(i), t1),
                    reason: "stream function is not increasing in t".into(),
                });
            }
        }
    }
    let g_table: Vec<f64> = w.row(0).to_vec();
    let total = g_table[nt - 1];
    let imbalance = (0..ny).fold(0.0f64, |m, i| m.max((w[[i, nt - 1]] - total).abs()));
    let nmax = flux.n_y.iter().chain(flux.n_t.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let h = grid.h();
    Ok(StreamTrace {
        w,
        g_table,
        imbalance,
        tolerance: 5.0 * h * h * nmax,
    })
}

/// Shock-foot radius `ℛ_sh = 𝒢⁻¹ ∘ w`.
///
/// Each column is rescaled so that `w(y,1) = 𝒢(1)` when the discrepancy is within the
/// quadrature tolerance; larger discrepancies are a mass-imbalance error. `𝒢` is inverted in
/// the variable `√𝒢`, in which it is regular at the axis.
pub fn trace_to_shock(trace: &StreamTrace, grid: &FlattenedGrid) -> Result<Array2<f64>> {
    if trace.imbalance > trace.tolerance {
        return Err(Error::Degeneracy {
            proxy: SmallnessProxy::MassImbalance,
            location: "cross-section mass flux".into(),
            reason: format!(
                "imbalance {:.3e} exceeds tolerance {:.3e}",
                trace.imbalance, trace.tolerance
            ),
        });
    }
    let nt = grid.nt;
    let total = trace.g_table[nt - 1];
    let sqrt_g: Vec<f64> = trace.g_table.iter().map(|g| g.sqrt()).collect();
    let inverse = Hermite::pchip(&sqrt_g, &grid.t_nodes())?;
    let cols: Vec<Vec<f64>> = (0..grid.ny)
        .into_par_iter()
        .map(|i| {
            let scale = total / trace.w[[i, nt - 1]];
            (0..nt)
                .map(|j| {
                    if j == 0 {
                        0.0
                    } else if j == nt - 1 {
                        1.0
                    } else {
                        inverse.eval((trace.w[[i, j]] * scale).sqrt()).clamp(0.0, 1.0)
                    }
                })
                .collect()
        })
        .collect();
    Ok(Array2::from_shape_fn((grid.ny, nt), |(i, j)| cols[i][j]))
}

/// `(S, Λ)(y,t) = (S_sh, Λ⁻)(ℛ_sh(y,t))` with monotone interpolation of the shock data.
pub fn transport_from_shock(
    shock_entropy: &[f64],
    shock_lambda: &[f64],
    radii: &[f64],
    rsh: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let s = Hermite::pchip(radii, shock_entropy)?;
    let l = Hermite::pchip(radii, shock_lambda)?;
    let entropy = rsh.mapv(|r| s.eval(r));
    let mut lambda = rsh.mapv(|r| l.eval(r));
    lambda.column_mut(0).fill(0.0);
    Ok((entropy, lambda))
}
