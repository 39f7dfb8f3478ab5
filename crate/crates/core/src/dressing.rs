//! Dressing of normalized potentials `(a, Q) ↦ (ã, Q)` by a positive gauge
//! `Ŵ₊`, solved order by order in `λ` as Taylor series around the basepoint.
//!
//! With `η = [[0, α], [β, 0]]λ⁻¹dz`, `α = −(h/2)a`, `β = Q/a`, and likewise
//! `η̃`, the gauge satisfies `Ŵ₊' = λ⁻¹(Ŵ₊Ã − AŴ₊)` and `det Ŵ₊ = 1`. Writing
//! `Ŵ₊ = Σ [[a_n, b_n], [c_n, d_n]]λⁿ` (diagonal at even `n`, off-diagonal
//! at odd `n`) this becomes
//!
//! - `a_0 = d_0⁻¹ = √(a/ã)`;
//! - `2Q b_n' + b_n(Q' − (a'/a + ã'/ã)Q) = ã(a_{n−1}'' − a_{n−1}'a'/a)`;
//! - `c_n = (2/h)(a_{n−1}'/a − b_nQ/(aã))`;
//! - `a_n = (a_0/2)S_n − b_{n−1}'/(hã)`, `d_n = (d_0/2)S_n + b_{n−1}'/(ha)`,
//!   `S_n = Σ_{odd j} b_j c_{n−j} − Σ_{even 0<j<n} a_j d_{n−j}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{order_at, Expr, Series};
use crate::frames::C64;
use crate::loops::{m2, LoopMat, M2};

/// Default order of the recursion.
pub const DEFAULT_ORDER: usize = 6;
/// Taylor coefficients kept per function.
pub const SERIES_LEN: usize = 48;

/// `(ρ²a, Q)`.
pub fn gauge_potential(a: &Expr, q: &Expr, rho: &Expr) -> (Expr, Expr) {
    (Expr::mul(Expr::powi(rho.clone(), 2), a.clone()), q.clone())
}

/// Checks that `Q(z0) ≠ 0` or that `z0` is a simple root of `Q`. Returns
/// the order of `Q` at `z0`.
fn check_hopf_hypothesis(q: &Expr, z0: Complex64) -> Result<i32> {
    match order_at(q, z0) {
        Ok(o) if o.order == 0 || o.order == 1 => Ok(o.order),
        Ok(o) => Err(Error::Precondition(format!(
            "Q must be nonzero or have a simple root at {z0}, found order {}",
            o.order
        ))),
        Err(Error::IdenticallyZero { .. }) => Err(Error::Precondition("Q vanishes identically".into())),
        Err(e) => Err(e),
    }
}

/// Closed-form `h`-independent gauge `[[a_0, b_1λ], [0, a_0⁻¹]]`.
#[derive(Debug, Clone)]
pub struct HIndependent {
    /// `a_0 = √(a/ã)`.
    pub a0: Expr,
    /// `b_1 = (ã/Q)·a_0'`.
    pub b1: Expr,
    pub a0_z0: Complex64,
    pub b1_z0: Complex64,
    /// Max over the samples of `|b_1'|/(1+|b_1|)`.
    pub max_db1: f64,
    pub pass: bool,
    /// `Ŵ₊(z0)⁻¹ = [[a_0(z0)⁻¹, −b_1(z0)λ], [0, a_0(z0)]]`, present on pass.
    pub h_plus: Option<LoopMat>,
}

impl HIndependent {
    /// `Ŵ₊(z)` as a loop.
    pub fn w_plus(&self, z: Complex64) -> Result<LoopMat> {
        let a0 = self.a0.eval(z)?;
        let b1 = self.b1.eval(z)?;
        let o = Complex64::new(0.0, 0.0);
        Ok(LoopMat::from_terms(&[(0, m2(a0, o, o, a0.inv())), (1, m2(o, b1, o, o))]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HIndependentSummary {
    pub a0_z0: C64,
    pub b1_z0: C64,
    pub max_db1: f64,
    pub pass: bool,
}

impl From<&HIndependent> for HIndependentSummary {
    fn from(h: &HIndependent) -> Self {
        HIndependentSummary {
            a0_z0: h.a0_z0.into(),
            b1_z0: h.b1_z0.into(),
            max_db1: h.max_db1,
            pass: h.pass,
        }
    }
}

/// Tolerance on `|b_1'|` relative to `1 + |b_1|`.
pub const B1_TOL: f64 = 1e-8;

/// Tests whether the data `(a, Q)` and `(ã, Q)` are related by a dressing
/// that extends to `h = 0`, i.e. whether `b_1` is constant.
pub fn h_independent_dressing(a: &Expr, atilde: &Expr, q: &Expr, z0: Complex64, samples: &[Complex64]) -> Result<HIndependent> {
    check_hopf_hypothesis(q, z0)?;
    let a0 = Expr::sqrt(Expr::div(a.clone(), atilde.clone()));
    let b1 = Expr::mul(Expr::div(atilde.clone(), q.clone()), a0.diff());
    // values at z0 from series, where b_1 may be a removable 0/0
    let len = 16;
    let sa0 = Series::from_expr(&a0, z0, len)?;
    let sb1 = Series::from_expr(atilde, z0, len)?
        .div(&Series::from_expr(q, z0, len)?)
        .map(|r| &r * &sa0.derivative())?;
    let (a0_z0, b1_z0) = (sa0.c[0], sb1.c[0]);
    let db1 = b1.diff();
    let mut max_db1: f64 = 0.0;
    for &z in samples {
        let (v, d) = (b1.eval_raw(z), db1.eval_raw(z));
        if v.re.is_finite() && v.im.is_finite() && d.re.is_finite() && d.im.is_finite() {
            max_db1 = max_db1.max(d.norm() / (1.0 + v.norm()));
        }
    }
    let pass = max_db1 <= B1_TOL;
    let o = Complex64::new(0.0, 0.0);
    let h_plus = pass.then(|| LoopMat::from_terms(&[(0, m2(a0_z0.inv(), o, o, a0_z0)), (1, m2(o, -b1_z0, o, o))]));
    Ok(HIndependent {
        a0,
        b1,
        a0_z0,
        b1_z0,
        max_db1,
        pass,
        h_plus,
    })
}

/// Coefficients of `Ŵ₊` as Taylor series around `z0`; index `n` is the
/// power of `λ`. Entries that vanish by parity are zero series.
#[derive(Debug, Clone)]
pub struct DressingCoeffs {
    pub h: f64,
    pub order: usize,
    pub z0: Complex64,
    pub a: Vec<Series>,
    pub b: Vec<Series>,
    pub c: Vec<Series>,
    pub d: Vec<Series>,
    /// Initial values `b_n(z0)` actually used (odd `n`).
    pub b_init: Vec<Complex64>,
    /// Number of trustworthy leading Taylor coefficients.
    pub accurate_len: usize,
}

/// Values of all coefficients at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffValues {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub d: Vec<Complex64>,
}

fn truncated_eval(s: &Series, len: usize, dz: Complex64) -> Complex64 {
    s.c[..len.min(s.len())].iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * dz + c)
}

impl DressingCoeffs {
    /// Coefficients at `z` (values, not derivatives).
    pub fn at(&self, z: Complex64) -> CoeffValues {
        let dz = z - self.z0;
        let ev = |v: &Vec<Series>| v.iter().map(|s| truncated_eval(s, self.accurate_len, dz)).collect();
        CoeffValues {
            a: ev(&self.a),
            b: ev(&self.b),
            c: ev(&self.c),
            d: ev(&self.d),
        }
    }

    /// Derivative values at `z`.
    pub fn derivative_at(&self, z: Complex64) -> CoeffValues {
        let dz = z - self.z0;
        let ev = |v: &Vec<Series>| {
            v.iter()
                .map(|s| truncated_eval(&s.derivative(), self.accurate_len.saturating_sub(1), dz))
                .collect()
        };
        CoeffValues {
            a: ev(&self.a),
            b: ev(&self.b),
            c: ev(&self.c),
            d: ev(&self.d),
        }
    }

    /// Largest value of any coefficient of order ≥ 1 other than `b_1`, over
    /// the given points.
    pub fn max_higher(&self, points: &[Complex64]) -> f64 {
        let mut m: f64 = 0.0;
        for &z in points {
            let v = self.at(z);
            for n in 1..=self.order {
                m = m.max(v.a[n].norm()).max(v.d[n].norm()).max(v.c[n].norm());
                if n > 1 {
                    m = m.max(v.b[n].norm());
                }
            }
        }
        m
    }

    /// `Ŵ₊(z)` as a loop in powers `0..=order`.
    pub fn w_plus(&self, z: Complex64) -> LoopMat {
        let v = self.at(z);
        let terms: Vec<(i32, M2)> = (0..=self.order).map(|n| (n as i32, m2(v.a[n], v.b[n], v.c[n], v.d[n]))).collect();
        LoopMat::from_terms(&terms)
    }
}

/// Solves `2Q b' + P b = R` as a Taylor series. With `Q(z0) ≠ 0` the value
/// `b(z0) = init` is imposed; at a simple root of `Q` it is forced.
fn solve_b(q: &Series, p: &Series, r: &Series, init: Complex64) -> Result<(Series, Complex64)> {
    let n = q.len();
    let mut b = Series::zeros(n);
    if q.c[0].norm() > 0.0 {
        b.c[0] = init;
        for m in 0..n - 1 {
            let mut s = r.c[m];
            for i in 1..=m {
                s -= q.c[i] * 2.0 * (m + 1 - i) as f64 * b.c[m + 1 - i];
            }
            for i in 0..=m {
                s -= p.c[i] * b.c[m - i];
            }
            b.c[m + 1] = s / (q.c[0] * 2.0 * (m + 1) as f64);
        }
    } else {
        let q1 = q.c[1];
        if q1.norm() == 0.0 {
            return Err(Error::Precondition("Q has a multiple root at the basepoint".into()));
        }
        for m in 0..n {
            let mut s = r.c[m];
            for i in 2..=m + 1 {
                if i < n {
                    s -= q.c[i] * 2.0 * (m + 1 - i) as f64 * b.c[m + 1 - i];
                }
            }
            for i in 1..=m {
                s -= p.c[i] * b.c[m - i];
            }
            b.c[m] = s / (q1 * (2 * m) as f64 + p.c[0]);
        }
    }
    let b0 = b.c[0];
    Ok((b, b0))
}

/// Initial values for the `b_n` equation.
#[derive(Debug, Clone, Default)]
pub enum BInit {
    /// `b_n(z0) = a_{n−1}'(z0)ã(z0)/Q(z0)`, the value that survives `h → 0`.
    #[default]
    Regular,
    /// Explicit values for `n = 1, 3, 5, …`; missing entries use `Regular`.
    Values(Vec<Complex64>),
}

/// Solves the recursion up to `order` for `h ≠ 0`.
pub fn wu_recursion(a: &Expr, atilde: &Expr, q: &Expr, z0: Complex64, h: f64, order: usize, init: &BInit) -> Result<DressingCoeffs> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition("the recursion needs finite h ≠ 0; use the h-independent test at h = 0".into()));
    }
    check_hopf_hypothesis(q, z0)?;
    let len = SERIES_LEN;
    let sa = Series::from_expr(a, z0, len)?;
    let st = Series::from_expr(atilde, z0, len)?;
    let sq = Series::from_expr(q, z0, len)?;
    let inv_a = sa.recip()?;
    let inv_t = st.recip()?;
    let la = &sa.derivative() * &inv_a;
    let lt = &st.derivative() * &inv_t;
    // P = Q' − (a'/a + ã'/ã)Q
    let p = sq.derivative() - &(la.clone() + lt) * &sq;
    let q_over_at = &sq * &(&inv_a * &inv_t);

    let zero = Series::zeros(len);
    let (mut av, mut bv, mut cv, mut dv) =
        (vec![zero.clone(); order + 1], vec![zero.clone(); order + 1], vec![zero.clone(); order + 1], vec![zero.clone(); order + 1]);
    av[0] = (&sa * &inv_t).sqrt()?;
    dv[0] = av[0].recip()?;
    let mut b_init = Vec::new();
    let c2h = Complex64::new(2.0 / h, 0.0);
    let mut odd_index = 0;
    for n in 1..=order {
        if n % 2 == 1 {
            let ap = av[n - 1].derivative();
            let rhs = &st * &(ap.derivative() - &ap * &la);
            let regular = if sq.c[0].norm() > 0.0 {
                ap.c[0] * st.c[0] / sq.c[0]
            } else {
                Complex64::new(0.0, 0.0)
            };
            let want = match init {
                BInit::Regular => regular,
                BInit::Values(v) => v.get(odd_index).copied().unwrap_or(regular),
            };
            odd_index += 1;
            let (b, b0) = solve_b(&sq, &p, &rhs, want)?;
            cv[n] = (&ap * &inv_a - &b * &q_over_at).scale(c2h);
            bv[n] = b;
            b_init.push(b0);
        } else {
            let mut s = Series::zeros(len);
            for j in (1..n).step_by(2) {
                s = s + &bv[j] * &cv[n - j];
            }
            for j in (2..n).step_by(2) {
                s = s - &av[j] * &dv[n - j];
            }
            let bp = bv[n - 1].derivative();
            let half = Complex64::new(0.5, 0.0);
            av[n] = &av[0] * &s.scale(half) - (&bp * &inv_t).scale(Complex64::new(1.0 / h, 0.0));
            dv[n] = &dv[0] * &s.scale(half) + (&bp * &inv_a).scale(Complex64::new(1.0 / h, 0.0));
        }
    }
    // each order costs at most two derivatives
    let accurate_len = len.saturating_sub(2 * order + 2).max(4);
    Ok(DressingCoeffs {
        h,
        order,
        z0,
        a: av,
        b: bv,
        c: cv,
        d: dv,
        b_init,
        accurate_len,
    })
}

/// Residuals of the defining equations at `z`, evaluated from the raw data
/// and the computed coefficients: the gauge equation at every power of `λ`
/// up to `order − 1`, and `det Ŵ₊ = 1` up to `order`.
pub fn relation_residual(coeffs: &DressingCoeffs, a: &Expr, atilde: &Expr, q: &Expr, z: Complex64) -> Result<f64> {
    let h = coeffs.h;
    let (av, tv, qv) = (a.eval(z)?, atilde.eval(z)?, q.eval(z)?);
    let big_a = m2(Complex64::new(0.0, 0.0), av * (-h / 2.0), qv / av, Complex64::new(0.0, 0.0));
    let big_t = m2(Complex64::new(0.0, 0.0), tv * (-h / 2.0), qv / tv, Complex64::new(0.0, 0.0));
    let v = coeffs.at(z);
    let dv = coeffs.derivative_at(z);
    let w = |n: usize| m2(v.a[n], v.b[n], v.c[n], v.d[n]);
    let wp = |n: usize| m2(dv.a[n], dv.b[n], dv.c[n], dv.d[n]);
    let mut r: f64 = (w(0) * big_t - big_a * w(0)).norm();
    for k in 0..coeffs.order {
        r = r.max((wp(k) - (w(k + 1) * big_t - big_a * w(k + 1))).norm());
    }
    for n in 0..=coeffs.order {
        let mut det = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            det += v.a[j] * v.d[n - j] - v.b[j] * v.c[n - j];
        }
        let want = if n == 0 { 1.0 } else { 0.0 };
        r = r.max((det - want).norm());
    }
    Ok(r)
}
