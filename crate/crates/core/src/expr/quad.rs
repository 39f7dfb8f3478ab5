//! Gauss–Legendre quadrature along straight segments and polylines in ℂ.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::Expr;

const ORDER: usize = 16;
/// Longest panel length; the integrands here are smooth on that scale.
const PANEL: f64 = 0.1;

/// Nodes and weights on [-1, 1], found by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// `∫_a^b f(τ) dτ` along the straight segment.
pub fn integrate_segment(f: impl Fn(Complex64) -> Complex64, a: Complex64, b: Complex64) -> Complex64 {
    let len = (b - a).norm();
    if len == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let panels = (len / PANEL).ceil().max(1.0) as usize;
    let (x, w) = rule();
    let step = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + step * p as f64;
        let mid = lo + step * 0.5;
        for (xi, wi) in x.iter().zip(w) {
            acc += f(mid + step * (0.5 * xi)) * *wi;
        }
    }
    acc * step * 0.5
}

/// Sum of segment integrals along `points[0] → points[1] → …`.
pub fn integrate_polyline(f: impl Fn(Complex64) -> Complex64, points: &[Complex64]) -> Complex64 {
    points
        .windows(2)
        .map(|s| integrate_segment(&f, s[0], s[1]))
        .sum()
}

pub(crate) fn segment(integrand: &Expr, a: Complex64, b: Complex64) -> Complex64 {
    integrate_segment(|t| integrand.eval_raw(t), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_integrate_polynomials() {
        let (x, w) = gauss_legendre(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact through degree 2n-1
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn closed_contour_integral_of_exp_vanishes() {
        let pts = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ];
        let v = integrate_polyline(|t| t.exp(), &pts);
        assert!(v.norm() < 1e-13);
    }
}
