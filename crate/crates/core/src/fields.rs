//! Unknowns on the flattened grid and the velocity they represent.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::geometry::{FlattenedGrid, ShockCurve};

/// The discrete unknowns `(φ - φ₀⁺, ψ, S, Λ)` on the flattened grid, indexed `[i_y, j_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowFields {
    pub phi: Array2<f64>,
    pub psi: Array2<f64>,
    pub entropy: Array2<f64>,
    pub lambda: Array2<f64>,
}

impl FlowFields {
    /// The background state: zero potential deviation and swirl potential, `S = S₀⁺`, `Λ = 0`.
    pub fn background(grid: &FlattenedGrid, s0p: f64) -> Self {
        Self {
            phi: grid.zeros(),
            psi: grid.zeros(),
            entropy: grid.filled(s0p),
            lambda: grid.zeros(),
        }
    }
}

/// Second-order derivative along axis 0 (y), one-sided at the ends.
pub fn d_y(field: &Array2<f64>, h: f64) -> Array2<f64> {
    let (ny, nt) = field.dim();
    Array2::from_shape_fn((ny, nt), |(i, j)| {
        if i == 0 {
            (-3.0 * field[[0, j]] + 4.0 * field[[1, j]] - field[[2, j]]) / (2.0 * h)
        } else if i == ny - 1 {
            (3.0 * field[[i, j]] - 4.0 * field[[i - 1, j]] + field[[i - 2, j]]) / (2.0 * h)
        } else {
            (field[[i + 1, j]] - field[[i - 1, j]]) / (2.0 * h)
        }
    })
}

/// Second-order derivative along axis 1 (t), one-sided at the ends.
pub fn d_t(field: &Array2<f64>, h: f64) -> Array2<f64> {
    let (ny, nt) = field.dim();
    Array2::from_shape_fn((ny, nt), |(i, j)| {
        if j == 0 {
            (-3.0 * field[[i, 0]] + 4.0 * field[[i, 1]] - field[[i, 2]]) / (2.0 * h)
        } else if j == nt - 1 {
            (3.0 * field[[i, j]] - 4.0 * field[[i, j - 1]] + field[[i, j - 2]]) / (2.0 * h)
        } else {
            (field[[i, j + 1]] - field[[i, j - 1]]) / (2.0 * h)
        }
    })
}

/// Node-wise metric of the flattening: `L = 1 - f(t_j)` and `f'(t_j)`.
#[derive(Debug, Clone)]
pub struct Metric {
    pub l: Vec<f64>,
    pub fprime: Vec<f64>,
}

impl Metric {
    pub fn new(shock: &ShockCurve) -> Self {
        Self {
            l: shock.values().iter().map(|f| 1.0 - f).collect(),
            fprime: shock.fprime_nodes(),
        }
    }
}

/// Physical `(∂_x, ∂_r)` of a field from its flattened derivatives.
pub fn physical_gradient(
    field: &Array2<f64>,
    grid: &FlattenedGrid,
    metric: &Metric,
) -> (Array2<f64>, Array2<f64>) {
    let fy = d_y(field, grid.hy());
    let ft = d_t(field, grid.ht());
    let dx = Array2::from_shape_fn(field.dim(), |(i, j)| fy[[i, j]] / metric.l[j]);
    let dr = Array2::from_shape_fn(field.dim(), |(i, j)| {
        ft[[i, j]] + (grid.y(i) - 1.0) * metric.fprime[j] * fy[[i, j]] / metric.l[j]
    });
    (dx, dr)
}

/// Velocity `q = ∇φ + t` and its parts at every node.
#[derive(Debug, Clone)]
pub struct Kinematics {
    /// `∂_x φ` of the deviation (without `u₀⁺`).
    pub dphi_x: Array2<f64>,
    pub dphi_r: Array2<f64>,
    /// Rotational part `t = (ψ/r + ∂_rψ, -∂_xψ, Λ/r)`.
    pub t_x: Array2<f64>,
    pub t_r: Array2<f64>,
    pub t_theta: Array2<f64>,
    pub q_x: Array2<f64>,
    pub q_r: Array2<f64>,
}

impl Kinematics {
    pub fn q(&self, i: usize, j: usize) -> [f64; 3] {
        [self.q_x[[i, j]], self.q_r[[i, j]], self.t_theta[[i, j]]]
    }
}

/// Velocity field of `fields`. Boundary rows use `∂_rφ = 0` on the axis and wall and the
/// axis limits `ψ/r → ∂_rψ`, `Λ/r → ∂_rΛ`.
pub fn kinematics(
    fields: &FlowFields,
    grid: &FlattenedGrid,
    metric: &Metric,
    u0p: f64,
) -> Kinematics {
    let (ny, nt) = (grid.ny, grid.nt);
    let (dphi_x, mut dphi_r) = physical_gradient(&fields.phi, grid, metric);
    for i in 0..ny {
        dphi_r[[i, 0]] = 0.0;
        dphi_r[[i, nt - 1]] = 0.0;
    }
    let (dpsi_x, dpsi_r) = physical_gradient(&fields.psi, grid, metric);
    let dlam_t = d_t(&fields.lambda, grid.ht());
    let mut t_x = grid.zeros();
    let mut t_r = grid.zeros();
    let mut t_theta = grid.zeros();
    for i in 0..ny {
        for j in 0..nt {
            let r = grid.t(j);
            let (psi_over_r, lam_over_r) = if j == 0 {
                (dpsi_r[[i, j]], dlam_t[[i, j]])
            } else {
                (fields.psi[[i, j]] / r, fields.lambda[[i, j]] / r)
            };
            t_x[[i, j]] = psi_over_r + dpsi_r[[i, j]];
            t_r[[i, j]] = -dpsi_x[[i, j]];
            t_theta[[i, j]] = lam_over_r;
        }
    }
    let q_x = &dphi_x + &t_x + u0p;
    let q_r = &dphi_r + &t_r;
    Kinematics {
        dphi_x,
        dphi_r,
        t_x,
        t_r,
        t_theta,
        q_x,
        q_r,
    }
}
