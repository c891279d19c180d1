//! The shock curve `x = f(r)`, shock-frame vectors, the flattening map onto the unit
//! square, and the polynomial-reflection extension across `y = 0`.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gasdyn::{BackgroundShock, Normal};
use crate::interp::{lagrange4, lagrange4_deriv, EndCondition, Hermite};
use crate::upstream::UpstreamSampler;

/// Reflection weights `c_i` with `Σ c_i (-1/i)^m = 1` for `m = 0, 1, 2`.
pub const EXTENSION_COEFFS: [f64; 3] = [6.0, -32.0, 27.0];

/// Half-width of the interval in which the shock must stay.
pub const SHOCK_BOUND: f64 = 0.25;

/// Uniform node-centred grid on the flattened square `[0,1]²` in `(y, t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FlattenedGrid {
    pub ny: usize,
    pub nt: usize,
}

impl FlattenedGrid {
    pub fn new(ny: usize, nt: usize) -> Result<Self> {
        if ny < 9 || nt < 9 {
            return Err(Error::Domain(format!("grid must be at least 9x9, got {ny}x{nt}")));
        }
        Ok(Self { ny, nt })
    }

    pub fn hy(&self) -> f64 {
        1.0 / (self.ny - 1) as f64
    }

    pub fn ht(&self) -> f64 {
        1.0 / (self.nt - 1) as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        if i + 1 == self.ny {
            1.0
        } else {
            i as f64 * self.hy()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j + 1 == self.nt {
            1.0
        } else {
            j as f64 * self.ht()
        }
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..self.nt).map(|j| self.t(j)).collect()
    }

    pub fn y_nodes(&self) -> Vec<f64> {
        (0..self.ny).map(|i| self.y(i)).collect()
    }

    pub fn zeros(&self) -> Array2<f64> {
        Array2::zeros((self.ny, self.nt))
    }

    pub fn filled(&self, v: f64) -> Array2<f64> {
        Array2::from_elem((self.ny, self.nt), v)
    }

    /// Largest spacing.
    pub fn h(&self) -> f64 {
        self.hy().max(self.ht())
    }
}

/// The free boundary, sampled at the radial grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockCurve {
    r: Vec<f64>,
    f: Vec<f64>,
    spline: Hermite,
}

impl ShockCurve {
    /// Builds the curve and its spline (zero slope on the axis, not-a-knot at the wall).
    pub fn new(r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        for (rj, fj) in r.iter().zip(&f) {
            if !(fj.abs() < SHOCK_BOUND) {
                return Err(Error::ShockEscape {
                    r: *rj,
                    reason: format!("f = {fj:.6} is outside (-1/4, 1/4)"),
                });
            }
        }
        let spline = Hermite::spline(&r, &f, EndCondition::Clamped(0.0), EndCondition::NotAKnot)?;
        Ok(Self { r, f, spline })
    }

    pub fn flat(r: Vec<f64>) -> Self {
        let f = vec![0.0; r.len()];
        Self::new(r, f).expect("flat shock is valid")
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// `f(r)`; exact at nodes.
    pub fn value(&self, r: f64) -> f64 {
        self.spline.eval(r)
    }

    /// `f'(r)`.
    pub fn fprime(&self, r: f64) -> f64 {
        self.spline.deriv(r)
    }

    pub fn fprime_nodes(&self) -> Vec<f64> {
        self.r.iter().map(|&r| self.fprime(r)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.f.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Downstream normal `n_f` and tangent `τ_f` of the shock at slope `f'`.
pub fn shock_frame(fprime: f64) -> (Normal, [f64; 2]) {
    let n = Normal::of_shock(fprime);
    (n, n.tangent())
}

/// Physical `(x, r)` to flattened `(y, t)`.
pub fn flatten(x: f64, r: f64, shock: &ShockCurve) -> (f64, f64) {
    let l = 1.0 - shock.value(r);
    ((x - 1.0) / l + 1.0, r)
}

/// Flattened `(y, t)` to physical `(x, r)`.
pub fn unflatten(y: f64, t: f64, shock: &ShockCurve) -> (f64, f64) {
    let l = 1.0 - shock.value(t);
    ((y - 1.0) * l + 1.0, t)
}

/// Four-point interpolation of a uniformly sampled column on `[0, 1]`, with its derivative.
pub fn interp_column(values: &[f64], y: f64) -> (f64, f64) {
    let n = values.len();
    let h = 1.0 / (n - 1) as f64;
    let pos = y / h;
    let base = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let xs = [0, 1, 2, 3].map(|k| (base + k) as f64 * h);
    let ys = [0, 1, 2, 3].map(|k| values[base + k]);
    (lagrange4(xs, ys, y), lagrange4_deriv(xs, ys, y))
}

/// Column value at `y ∈ (-1, 1]`, reflected across `y = 0` by [`EXTENSION_COEFFS`].
pub fn extend_column(values: &[f64], y: f64) -> (f64, f64) {
    if y >= 0.0 {
        return interp_column(values, y);
    }
    let mut v = 0.0;
    let mut d = 0.0;
    for (k, c) in EXTENSION_COEFFS.iter().enumerate() {
        let i = (k + 1) as f64;
        let (fv, fd) = interp_column(values, -y / i);
        v += c * fv;
        d -= c * fd / i;
    }
    (v, d)
}

/// Extends a field from `y ∈ [0,1]` to the nodes `y = -(ny-2)h_y, …, 1`.
/// Returns the enlarged field and its y-coordinates.
pub fn extend_field(field: &Array2<f64>, grid: &FlattenedGrid) -> (Array2<f64>, Vec<f64>) {
    let ny = grid.ny;
    let n_neg = ny - 2;
    let ys: Vec<f64> = (0..n_neg + ny)
        .map(|k| {
            if k < n_neg {
                -((n_neg - k) as f64) * grid.hy()
            } else {
                grid.y(k - n_neg)
            }
        })
        .collect();
    let mut out = Array2::zeros((ys.len(), grid.nt));
    for j in 0..grid.nt {
        let col: Vec<f64> = field.column(j).to_vec();
        for (k, &y) in ys.iter().enumerate() {
            out[[k, j]] = if k >= n_neg { col[k - n_neg] } else { extend_column(&col, y).0 };
        }
    }
    (out, ys)
}

/// Options of the shock update.
#[derive(Debug, Clone, Copy)]
pub struct ShockUpdate {
    /// Under-relaxation `f_new = (1-ω) f_old + ω·root`.
    pub omega: f64,
}

impl Default for ShockUpdate {
    fn default() -> Self {
        Self { omega: 0.7 }
    }
}

/// Root of `(φ + φ₀⁺ - φ⁻)(x, r) = 0` along one grid column.
fn column_root(
    col: &[f64],
    l: f64,
    r: f64,
    upstream: &UpstreamSampler,
    bg: &BackgroundShock,
) -> Result<f64> {
    let slope = upstream.phi_slope.eval(r);
    let g = |x: f64| {
        let y = (x - 1.0) / l + 1.0;
        let (v, dv) = extend_column(col, y);
        (v + bg.u0p * x - slope * x, dv / l + bg.u0p - slope)
    };
    let guard = -(bg.u0m - bg.u0p) / 2.0;
    let (mut a, mut b) = (-SHOCK_BOUND, SHOCK_BOUND);
    for k in 0..=8 {
        let x = a + (b - a) * k as f64 / 8.0;
        let (_, dg) = g(x);
        if !(dg <= guard) {
            return Err(Error::ShockEscape {
                r,
                reason: format!("monotonicity guard fails at x = {x:.4}: slope {dg:.4} > {guard:.4}"),
            });
        }
    }
    let (ga, gb) = (g(a).0, g(b).0);
    if !(ga > 0.0 && gb < 0.0) {
        return Err(Error::ShockEscape {
            r,
            reason: format!("no root in (-1/4, 1/4): g(-1/4) = {ga:.3e}, g(1/4) = {gb:.3e}"),
        });
    }
    let mut x = 0.0f64.clamp(a, b);
    for _ in 0..200 {
        let (gx, dgx) = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if gx > 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - gx / dgx;
        let next = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || b - a <= 1e-15 {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// New shock position from the current potential deviation, solved column by column.
pub fn update_shock(
    phi: &Array2<f64>,
    grid: &FlattenedGrid,
    current: &ShockCurve,
    upstream: &UpstreamSampler,
    bg: &BackgroundShock,
    opts: ShockUpdate,
) -> Result<ShockCurve> {
    let roots: Vec<Result<f64>> = (0..grid.nt)
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = phi.column(j).to_vec();
            let r = grid.t(j);
            let l = 1.0 - current.values()[j];
            column_root(&col, l, r, upstream, bg)
        })
        .collect();
    let mut f = Vec::with_capacity(grid.nt);
    for (j, root) in roots.into_iter().enumerate() {
        let root = root?;
        f.push((1.0 - opts.omega) * current.values()[j] + opts.omega * root);
    }
    ShockCurve::new(grid.t_nodes(), f)
}
