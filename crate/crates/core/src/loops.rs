//! 2×2 matrices of Laurent polynomials in the loop parameter λ.
//!
//! Only finitely many powers are stored. Products are exact Cauchy products;
//! anything that would land outside the configured window is either
//! negligible (and dropped, with the largest dropped norm recorded) or an
//! error.

use std::fmt::Write as _;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type M2 = Matrix2<Complex64>;

pub const DEFAULT_WINDOW: i32 = 16;
/// Sample count for circle-based residuals.
pub const CIRCLE_SAMPLES: usize = 64;
/// Coefficients smaller than this (absolute) may be dropped at the window edge.
const DROP_TOL: f64 = 1e-14;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

pub fn m2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> M2 {
    M2::new(a, b, c, d)
}

pub fn zero2() -> M2 {
    M2::zeros()
}

pub fn id2() -> M2 {
    M2::identity()
}

/// Adjugate; equals the inverse when the determinant is one.
pub fn adj2(m: &M2) -> M2 {
    m2(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
}

pub fn fro(m: &M2) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    Twisted,
    Unitary,
    Plus,
    MinusStar,
    PlusP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopMat {
    lo: i32,
    coeffs: Vec<M2>,
}

impl LoopMat {
    pub fn identity() -> Self {
        Self::constant(id2())
    }

    pub fn constant(m: M2) -> Self {
        LoopMat {
            lo: 0,
            coeffs: vec![m],
        }
    }

    pub fn zero() -> Self {
        Self::constant(zero2())
    }

    /// Builds a loop from `(power, coefficient)` pairs; repeated powers add.
    pub fn from_terms(terms: &[(i32, M2)]) -> Self {
        if terms.is_empty() {
            return Self::zero();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![zero2(); (hi - lo + 1) as usize];
        for (p, m) in terms {
            coeffs[(p - lo) as usize] += m;
        }
        LoopMat { lo, coeffs }.trimmed()
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.lo + self.coeffs.len() as i32 - 1
    }

    pub fn coeff(&self, power: i32) -> M2 {
        let k = power - self.lo;
        if k < 0 || k as usize >= self.coeffs.len() {
            zero2()
        } else {
            self.coeffs[k as usize]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &M2)> {
        self.coeffs.iter().enumerate().map(move |(k, m)| (self.lo + k as i32, m))
    }

    /// Drops exactly-zero coefficients at both ends.
    fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs.last().unwrap() == &zero2() {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|m| **m == zero2()).count();
        let lead = lead.min(self.coeffs.len() - 1);
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i32;
        }
        self
    }

    /// Drops end coefficients with Frobenius norm at most `tol`.
    pub fn trim(&self, tol: f64) -> Self {
        let mut out = self.clone();
        while out.coeffs.len() > 1 && fro(out.coeffs.last().unwrap()) <= tol {
            out.coeffs.pop();
        }
        while out.coeffs.len() > 1 && fro(&out.coeffs[0]) <= tol {
            out.coeffs.remove(0);
            out.lo += 1;
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(fro).fold(0.0, f64::max)
    }

    pub fn scale(&self, k: Complex64) -> Self {
        LoopMat {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|m| m * k).collect(),
        }
    }

    pub fn add(&self, o: &LoopMat) -> Self {
        let lo = self.lo.min(o.lo);
        let hi = self.hi().max(o.hi());
        LoopMat {
            lo,
            coeffs: (lo..=hi).map(|p| self.coeff(p) + o.coeff(p)).collect(),
        }
    }

    pub fn sub(&self, o: &LoopMat) -> Self {
        self.add(&o.scale(-C1))
    }

    /// Largest coefficientwise Frobenius distance.
    pub fn dist(&self, o: &LoopMat) -> f64 {
        let lo = self.lo.min(o.lo);
        let hi = self.hi().max(o.hi());
        (lo..=hi).map(|p| fro(&(self.coeff(p) - o.coeff(p)))).fold(0.0, f64::max)
    }

    /// Cauchy product with no window.
    pub fn mul_full(&self, o: &LoopMat) -> Self {
        let mut coeffs = vec![zero2(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == zero2() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LoopMat {
            lo: self.lo + o.lo,
            coeffs,
        }
        .trimmed()
    }

    /// Cauchy product restricted to powers in `[-window, window]`.
    pub fn mul_in(&self, o: &LoopMat, window: i32) -> Result<Self> {
        let (p, _) = self.mul_full(o).windowed(window)?;
        Ok(p)
    }

    /// Product in the default window.
    pub fn mul(&self, o: &LoopMat) -> Result<Self> {
        self.mul_in(o, DEFAULT_WINDOW)
    }

    /// Restricts to `[-window, window]`; returns the largest dropped norm.
    pub fn windowed(&self, window: i32) -> Result<(Self, f64)> {
        let mut dropped: f64 = 0.0;
        let mut terms = Vec::with_capacity(self.coeffs.len());
        for (p, m) in self.terms() {
            if p.abs() <= window {
                terms.push((p, *m));
                continue;
            }
            let n = fro(m);
            if n > DROP_TOL {
                return Err(Error::WindowOverflow {
                    power: p,
                    norm: n,
                    max_degree: window,
                });
            }
            dropped = dropped.max(n);
        }
        Ok((Self::from_terms(&terms), dropped))
    }

    /// Coefficientwise adjugate. This is the exact inverse of a loop with
    /// determinant identically one, which is the only kind inverted here.
    pub fn adjugate(&self) -> Self {
        LoopMat {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(adj2).collect(),
        }
    }

    /// Inverse of a loop with determinant one, checked on the circle.
    pub fn inverse_sl2(&self) -> Result<Self> {
        let r = self.det_residual();
        if r > 1e-8 {
            return Err(Error::Precondition(format!(
                "loop inverse needs det ≡ 1, residual {r:.3e}"
            )));
        }
        Ok(self.adjugate())
    }

    /// `A*(λ) = A(λ)ᴴ` on the unit circle: powers flip, coefficients are
    /// conjugate-transposed.
    pub fn star(&self) -> Self {
        let hi = self.hi();
        LoopMat {
            lo: -hi,
            coeffs: self.coeffs.iter().rev().map(|m| m.adjoint()).collect(),
        }
    }

    /// Powers ≥ 0 only.
    pub fn plus_part(&self) -> Self {
        Self::from_terms(&self.terms().filter(|(p, _)| *p >= 0).map(|(p, m)| (p, *m)).collect::<Vec<_>>())
    }

    /// Powers ≤ 0 only.
    pub fn nonpositive_part(&self) -> Self {
        Self::from_terms(&self.terms().filter(|(p, _)| *p <= 0).map(|(p, m)| (p, *m)).collect::<Vec<_>>())
    }

    pub fn eval(&self, lambda: Complex64) -> M2 {
        // Horner from the top power down, then shift by λ^lo.
        let mut acc = zero2();
        for m in self.coeffs.iter().rev() {
            acc = acc * lambda + m;
        }
        acc * lambda.powi(self.lo)
    }

    /// `Σ k·C_k·λ^{k−1}`.
    pub fn lambda_derivative_at(&self, lambda: Complex64) -> M2 {
        let mut acc = zero2();
        for (p, m) in self.terms() {
            if p != 0 {
                acc += m * (lambda.powi(p - 1) * p as f64);
            }
        }
        acc
    }

    pub fn circle_points() -> impl Iterator<Item = Complex64> {
        (0..CIRCLE_SAMPLES).map(|k| {
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / CIRCLE_SAMPLES as f64)
        })
    }

    /// Largest `|det A(λ) − 1|` over the circle samples.
    pub fn det_residual(&self) -> f64 {
        Self::circle_points()
            .map(|l| (self.eval(l).determinant() - C1).norm())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient norm in a slot the twisting forbids: diagonal
    /// entries at odd powers, off-diagonal entries at even powers.
    pub fn twist_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        for (p, m) in self.terms() {
            let odd = p.rem_euclid(2) == 1;
            let bad = if odd {
                m[(0, 0)].norm().max(m[(1, 1)].norm())
            } else {
                m[(0, 1)].norm().max(m[(1, 0)].norm())
            };
            r = r.max(bad);
        }
        r
    }

    pub fn is_twisted(&self) -> bool {
        self.twist_residual() == 0.0
    }

    pub fn check_membership(&self, which: Membership) -> f64 {
        match which {
            Membership::Twisted => self.twist_residual(),
            Membership::Unitary => Self::circle_points()
                .map(|l| {
                    let f = self.eval(l);
                    fro(&(f * f.adjoint() - id2()))
                })
                .fold(0.0, f64::max),
            Membership::Plus => self
                .terms()
                .filter(|(p, _)| *p < 0)
                .map(|(_, m)| fro(m))
                .fold(0.0, f64::max),
            Membership::MinusStar => {
                let pos = self
                    .terms()
                    .filter(|(p, _)| *p > 0)
                    .map(|(_, m)| fro(m))
                    .fold(0.0, f64::max);
                pos.max(fro(&(self.coeff(0) - id2())))
            }
            Membership::PlusP => {
                let c = self.coeff(0);
                let rho = c[(0, 0)];
                let mut r = self.check_membership(Membership::Plus);
                r = r.max(c[(0, 1)].norm()).max(c[(1, 0)].norm());
                r = r.max(rho.im.abs()).max((-rho.re).max(0.0));
                r.max((c[(1, 1)] * rho - C1).norm())
            }
        }
    }

    /// Plain-text dump: a header line, then one line per stored power with
    /// the entries `m00 m01 m10 m11` as `re im` pairs in shortest
    /// round-trip form.
    ///
    /// ```text
    /// loopmat lo=-1 hi=1
    /// -1 0e0 0e0 0e0 0e0 1e0 0e0 0e0 0e0
    /// ```
    pub fn to_text(&self) -> String {
        let mut s = format!("loopmat lo={} hi={}\n", self.lo, self.hi());
        for (p, m) in self.terms() {
            write!(s, "{p}").unwrap();
            for v in [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]] {
                write!(s, " {:e} {:e}", v.re, v.im).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidData(format!("loopmat text: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        if !header.starts_with("loopmat") {
            return Err(bad("missing header"));
        }
        let mut terms = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 9 {
                return Err(bad("expected 9 fields per line"));
            }
            let p: i32 = f[0].parse().map_err(|_| bad("power"))?;
            let v: Vec<f64> = f[1..]
                .iter()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("number"))?;
            let c = |k: usize| Complex64::new(v[2 * k], v[2 * k + 1]);
            terms.push((p, m2(c(0), c(1), c(2), c(3))));
        }
        if terms.is_empty() {
            return Ok(Self::zero());
        }
        Ok(Self::from_terms(&terms))
    }
}

/// Twisted extension `[[A0, λB0], [−λ⁻¹B̄0, Ā0]]` of a unit-determinant
/// unitary `E0 = [[A0, B0], [−B̄0, Ā0]]`.
pub fn hat_extend(e0: &M2) -> Result<LoopMat> {
    let r = fro(&(e0 * e0.adjoint() - id2())).max((e0.determinant() - C1).norm());
    if r > 1e-10 {
        return Err(Error::NotUnitary { residual: r });
    }
    Ok(LoopMat::from_terms(&[
        (-1, m2(C0, C0, e0[(1, 0)], C0)),
        (0, m2(e0[(0, 0)], C0, C0, e0[(1, 1)])),
        (1, m2(C0, e0[(0, 1)], C0, C0)),
    ]))
}

/// Unit-determinant unitary from its first row entries.
pub fn su2(a: Complex64, b: Complex64) -> M2 {
    m2(a, b, -b.conj(), a.conj())
}
