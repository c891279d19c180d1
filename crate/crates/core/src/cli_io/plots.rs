use std::fmt::Write;

use crate::driver::{IterationReport, Solution};
use crate::geometry::{unflatten, ShockCurve};

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        M + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * M)
    }
    fn py(&self, y: f64) -> f64 {
        H - M - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * M)
    }
}

fn open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    )
}

fn axes(s: &mut String, fr: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        s,
        "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        W - 2.0 * M,
        H - 2.0 * M
    );
    for k in 0..=4 {
        let xv = fr.x0 + (fr.x1 - fr.x0) * k as f64 / 4.0;
        let yv = fr.y0 + (fr.y1 - fr.y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            fr.px(xv),
            H - M + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            M - 6.0,
            fr.py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{xlabel}</text>", W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{ylabel}</text>",
        H / 2.0,
        H / 2.0
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-14 {
        (lo - 1e-3, hi + 1e-3)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

/// Shock position `x = f(r)`.
pub fn shock_svg(shock: &ShockCurve) -> String {
    let (lo, hi) = shock.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let (x0, x1) = padded(lo, hi);
    let fr = Frame { x0, x1, y0: 0.0, y1: 1.0 };
    let mut s = open("Shock position");
    axes(&mut s, &fr, "x = f(r)", "r");
    let pts: Vec<String> = shock
        .radii()
        .iter()
        .zip(shock.values())
        .map(|(r, f)| format!("{:.2},{:.2}", fr.px(*f), fr.py(*r)))
        .collect();
    let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"{}\"/>", pts.join(" "));
    s.push_str("</svg>\n");
    s
}

fn band_colour(k: usize, n: usize) -> String {
    let a = if n <= 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
    let (r, g, b) = (40.0 + 200.0 * a, 90.0 + 80.0 * (1.0 - (2.0 * a - 1.0).abs()), 220.0 - 180.0 * a);
    format!("rgb({},{},{})", r as u8, g as u8, b as u8)
}

/// Downstream Mach number in ten bands, drawn in physical coordinates.
pub fn mach_svg(sol: &Solution) -> String {
    const BANDS: usize = 10;
    let (g, p) = (&sol.grid, &sol.primitive);
    let gamma = sol.background.gamma;
    let mach = |i: usize, j: usize| p.state(i, j).mach(gamma).unwrap_or(f64::NAN);
    let (lo, hi) = (0..g.ny)
        .flat_map(|i| (0..g.nt).map(move |j| (i, j)))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (i, j)| {
            let m = mach(i, j);
            (a.min(m), b.max(m))
        });
    let xmin = sol.shock.values().iter().fold(0.0f64, |m, v| m.min(*v));
    let fr = Frame { x0: xmin.min(0.0), x1: 1.0, y0: 0.0, y1: 1.0 };
    let mut s = open(&format!("Mach number, {lo:.4} to {hi:.4}"));
    let width = ((hi - lo) / BANDS as f64).max(1e-15);
    for i in 0..g.ny - 1 {
        for j in 0..g.nt - 1 {
            let avg = 0.25 * (mach(i, j) + mach(i + 1, j) + mach(i, j + 1) + mach(i + 1, j + 1));
            let band = (((avg - lo) / width) as usize).min(BANDS - 1);
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(a, b)| {
                let (x, r) = unflatten(g.y(a), g.t(b), &sol.shock);
                format!("{:.2},{:.2}", fr.px(x), fr.py(r))
            });
            let c = band_colour(band, BANDS);
            let _ = writeln!(s, "<polygon points=\"{}\" fill=\"{c}\" stroke=\"{c}\" stroke-width=\"0.3\"/>", corners.join(" "));
        }
    }
    axes(&mut s, &fr, "x", "r");
    for k in 0..BANDS {
        let y = M + k as f64 * 18.0;
        let _ = writeln!(
            s,
            "<rect x=\"{:.1}\" y=\"{y:.1}\" width=\"10\" height=\"14\" fill=\"{}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-size=\"9\">{:.3}</text>",
            W - M + 4.0,
            band_colour(BANDS - 1 - k, BANDS),
            W - M + 16.0,
            y + 11.0,
            lo + width * (BANDS - k) as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

/// `log10` of the largest relative change recorded at each sweep.
pub fn convergence_svg(report: &IterationReport) -> String {
    let pts: Vec<(f64, f64)> = report
        .sweeps
        .iter()
        .filter_map(|r| {
            let c = [r.change_phi, r.change_f, r.change_sl, r.change_psi]
                .into_iter()
                .flatten()
                .fold(0.0f64, f64::max);
            (c > 0.0 && c.is_finite()).then(|| (r.index as f64, c.log10()))
        })
        .collect();
    let n = report.sweeps.len().max(2) as f64;
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (y0, y1) = if pts.is_empty() { (-1.0, 1.0) } else { padded(lo, hi) };
    let fr = Frame { x0: 0.0, x1: n - 1.0, y0, y1 };
    let mut s = open("Convergence history");
    axes(&mut s, &fr, "sweep", "log10 relative change");
    let line: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", fr.px(*x), fr.py(*y))).collect();
    let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"#2c3e50\" stroke-width=\"1.5\" points=\"{}\"/>", line.join(" "));
    s.push_str("</svg>\n");
    s
}
