//! One-dimensional interpolation and small linear-algebra kernels.

use crate::error::{Error, Result};

/// End condition for [`Hermite::spline`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndCondition {
    /// Prescribed first derivative.
    Clamped(f64),
    /// Vanishing second derivative.
    Natural,
    /// Third derivative continuous across the first interior knot.
    NotAKnot,
}

/// Piecewise cubic Hermite interpolant given by knot values and knot slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    k: Vec<f64>,
}

fn check_knots(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "knot/value length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < min {
        return Err(Error::Domain(format!("need at least {min} knots, got {}", x.len())));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("knots must be strictly increasing".into()));
    }
    Ok(())
}

impl Hermite {
    /// C² cubic spline with the given end conditions.
    pub fn spline(x: &[f64], y: &[f64], left: EndCondition, right: EndCondition) -> Result<Self> {
        check_knots(x, y, 4)?;
        let n = x.len();
        let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / dx[i]).collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            sub[i] = dx[i];
            diag[i] = 2.0 * (dx[i - 1] + dx[i]);
            sup[i] = dx[i - 1];
            rhs[i] = 3.0 * (dx[i] * slope[i - 1] + dx[i - 1] * slope[i]);
        }
        match left {
            EndCondition::Clamped(s) => {
                diag[0] = 1.0;
                rhs[0] = s;
            }
            EndCondition::Natural => {
                diag[0] = 2.0;
                sup[0] = 1.0;
                rhs[0] = 3.0 * slope[0];
            }
            EndCondition::NotAKnot => {
                let d = x[2] - x[0];
                diag[0] = dx[1];
                sup[0] = d;
                rhs[0] = ((dx[0] + 2.0 * d) * dx[1] * slope[0] + dx[0] * dx[0] * slope[1]) / d;
            }
        }
        let m = n - 1;
        match right {
            EndCondition::Clamped(s) => {
                diag[m] = 1.0;
                rhs[m] = s;
            }
            EndCondition::Natural => {
                diag[m] = 2.0;
                sub[m] = 1.0;
                rhs[m] = 3.0 * slope[m - 1];
            }
            EndCondition::NotAKnot => {
                let d = x[m] - x[m - 2];
                diag[m] = dx[m - 2];
                sub[m] = d;
                rhs[m] = (dx[m - 1] * dx[m - 1] * slope[m - 2]
                    + (2.0 * d + dx[m - 1]) * dx[m - 2] * slope[m - 1])
                    / d;
            }
        }
        let k = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            k,
        })
    }

    /// Shape-preserving piecewise cubic (Fritsch–Carlson slopes, three-point ends).
    pub fn pchip(x: &[f64], y: &[f64]) -> Result<Self> {
        check_knots(x, y, 2)?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut k = vec![0.0; n];
        if n == 2 {
            k[0] = d[0];
            k[1] = d[0];
        } else {
            for i in 1..n - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    k[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            k[0] = pchip_end(h[0], h[1], d[0], d[1]);
            k[n - 1] = pchip_end(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            k,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.k
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.x.len();
        let i = self.x.partition_point(|&xi| xi <= x);
        i.saturating_sub(1).min(n - 2)
    }

    /// Value at `x`; outside the knot range the end cubics are continued.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.x[i + 1] - self.x[i];
        let s = (x - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h * h10 * self.k[i] + h01 * self.y[i + 1] + h * h11 * self.k[i + 1]
    }

    /// First derivative at `x`.
    pub fn deriv(&self, x: f64) -> f64 {
        let i = self.locate(x);
        let h = self.x[i + 1] - self.x[i];
        let s = (x - self.x[i]) / h;
        let s2 = s * s;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        d00 * self.y[i] + d10 * self.k[i] + d01 * self.y[i + 1] + d11 * self.k[i + 1]
    }
}

fn pchip_end(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let k = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if k.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && k.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        k
    }
}

/// Thomas algorithm. `sub[0]` and `sup[n-1]` are ignored.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if sub.len() != n || sup.len() != n || rhs.len() != n {
        return Err(Error::Domain("tridiagonal band lengths differ".into()));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    for i in 0..n {
        if i > 0 {
            piv = diag[i] - sub[i] * c[i - 1];
        }
        if piv == 0.0 || !piv.is_finite() {
            return Err(Error::Domain(format!("zero pivot in tridiagonal solve at row {i}")));
        }
        c[i] = sup[i] / piv;
        d[i] = if i == 0 {
            rhs[0] / piv
        } else {
            (rhs[i] - sub[i] * d[i - 1]) / piv
        };
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Lagrange interpolation through four points.
pub fn lagrange4(xs: [f64; 4], ys: [f64; 4], x: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        sum += w * ys[i];
    }
    sum
}

/// Derivative of the four-point Lagrange interpolant.
pub fn lagrange4_deriv(xs: [f64; 4], ys: [f64; 4], x: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        let mut denom = 1.0;
        for j in 0..4 {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut num = 0.0;
        for m in 0..4 {
            if m == i {
                continue;
            }
            let mut prod = 1.0;
            for j in 0..4 {
                if j != i && j != m {
                    prod *= x - xs[j];
                }
            }
            num += prod;
        }
        sum += ys[i] * num / denom;
    }
    sum
}

/// Nodes and weights of the 8-point Gauss–Legendre rule on [0, 1].
pub fn gauss_legendre_8() -> [(f64, f64); 8] {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let mut out = [(0.0, 0.0); 8];
    for k in 0..4 {
        out[2 * k] = (0.5 * (1.0 - X[k]), 0.5 * W[k]);
        out[2 * k + 1] = (0.5 * (1.0 + X[k]), 0.5 * W[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn not_a_knot_reproduces_cubics() {
        let x = grid(9);
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        let dp = |x: f64| -2.0 + x + 9.0 * x * x;
        let y: Vec<f64> = x.iter().map(|&v| p(v)).collect();
        let s = Hermite::spline(&x, &y, EndCondition::NotAKnot, EndCondition::NotAKnot).unwrap();
        for k in 0..50 {
            let t = k as f64 / 49.0;
            assert_abs_diff_eq!(s.eval(t), p(t), epsilon = 1e-12);
            assert_abs_diff_eq!(s.deriv(t), dp(t), epsilon = 1e-10);
        }
        let s = Hermite::spline(&x, &y, EndCondition::Clamped(-2.0), EndCondition::NotAKnot).unwrap();
        assert_abs_diff_eq!(s.eval(0.37), p(0.37), epsilon = 1e-12);
    }

    #[test]
    fn clamped_spline_respects_slope() {
        let x = grid(17);
        let y: Vec<f64> = x.iter().map(|&r| (std::f64::consts::PI * r).cos()).collect();
        let s = Hermite::spline(&x, &y, EndCondition::Clamped(0.0), EndCondition::NotAKnot).unwrap();
        assert_eq!(s.deriv(0.0), 0.0);
        assert_abs_diff_eq!(s.deriv(0.5), -std::f64::consts::PI, epsilon = 1e-3);
        let n = Hermite::spline(&x, &y, EndCondition::Natural, EndCondition::Natural).unwrap();
        assert_abs_diff_eq!(n.eval(0.3), (0.3 * std::f64::consts::PI).cos(), epsilon = 1e-3);
    }

    #[test]
    fn pchip_is_monotone_and_interpolates() {
        let x = vec![0.0, 0.1, 0.5, 0.6, 1.0];
        let y = vec![0.0, 0.0, 0.5, 1.0, 1.0];
        let p = Hermite::pchip(&x, &y).unwrap();
        let mut prev = -1.0;
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let v = p.eval(t);
            assert!(v >= prev - 1e-15 && (-1e-15..=1.0 + 1e-15).contains(&v));
            prev = v;
        }
        for (xi, yi) in x.iter().zip(&y) {
            assert_abs_diff_eq!(p.eval(*xi), *yi, epsilon = 1e-15);
        }
    }

    #[test]
    fn lagrange_is_exact_for_cubics() {
        let xs = [0.0, 0.3, 0.7, 1.2];
        let f = |x: f64| 2.0 * x * x * x - x + 0.5;
        let ys = xs.map(f);
        assert_abs_diff_eq!(lagrange4(xs, ys, 0.55), f(0.55), epsilon = 1e-13);
        assert_abs_diff_eq!(lagrange4_deriv(xs, ys, 0.55), 6.0 * 0.55 * 0.55 - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_degree_15() {
        let s: f64 = gauss_legendre_8().iter().map(|(x, w)| w * x.powi(15)).sum();
        assert_abs_diff_eq!(s, 1.0 / 16.0, epsilon = 1e-14);
        let s: f64 = gauss_legendre_8().iter().map(|(_, w)| w).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn thomas_solves_poisson() {
        let n = 5;
        let x = solve_tridiagonal(&[-1.0; 5], &[2.0; 5], &[-1.0; 5], &[1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        for v in &x {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        assert_eq!(x.len(), n);
    }
}
