//! Truncated Taylor series about a fixed centre.
//!
//! All series taking part in one computation share the same length; the
//! arithmetic below is the usual Cauchy-product recurrences.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::Expr;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    /// `c[k]` multiplies `(z − z0)^k`.
    pub c: Vec<Complex64>,
}

impl Series {
    pub fn zeros(len: usize) -> Self {
        Series { c: vec![ZERO; len] }
    }

    pub fn constant(v: Complex64, len: usize) -> Self {
        let mut s = Self::zeros(len);
        s.c[0] = v;
        s
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    /// Taylor expansion of `e` about `z0` with `len` coefficients.
    pub fn from_expr(e: &Expr, z0: Complex64, len: usize) -> Result<Self> {
        let s = match e {
            Expr::Const(v) => Series::constant(*v, len),
            Expr::Var => {
                let mut s = Series::constant(z0, len);
                if len > 1 {
                    s.c[1] = Complex64::new(1.0, 0.0);
                }
                s
            }
            Expr::Add(a, b) => Self::from_expr(a, z0, len)? + Self::from_expr(b, z0, len)?,
            Expr::Sub(a, b) => Self::from_expr(a, z0, len)? - Self::from_expr(b, z0, len)?,
            Expr::Mul(a, b) => &Self::from_expr(a, z0, len)? * &Self::from_expr(b, z0, len)?,
            Expr::Div(a, b) => Self::from_expr(a, z0, len)?.div(&Self::from_expr(b, z0, len)?)?,
            Expr::Pow(a, n) => Self::from_expr(a, z0, len)?.powi(*n)?,
            Expr::Neg(a) => -Self::from_expr(a, z0, len)?,
            Expr::Exp(a) => Self::from_expr(a, z0, len)?.exp(),
            Expr::Sqrt(a) => Self::from_expr(a, z0, len)?.sqrt()?,
            Expr::Integral { integrand, .. } => {
                let mut s = Self::from_expr(integrand, z0, len)?.integrate();
                s.c[0] = e.eval(z0)?;
                s
            }
        };
        if s.c.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite { z: z0 });
        }
        Ok(s)
    }

    pub fn eval(&self, dz: Complex64) -> Complex64 {
        self.c.iter().rev().fold(ZERO, |acc, c| acc * dz + c)
    }

    pub fn scale(&self, k: Complex64) -> Series {
        Series {
            c: self.c.iter().map(|v| v * k).collect(),
        }
    }

    /// Derivative; the top coefficient becomes zero.
    pub fn derivative(&self) -> Series {
        let n = self.len();
        let mut out = Self::zeros(n);
        for k in 1..n {
            out.c[k - 1] = self.c[k] * k as f64;
        }
        out
    }

    /// Antiderivative vanishing at the centre; the top coefficient is lost.
    pub fn integrate(&self) -> Series {
        let n = self.len();
        let mut out = Self::zeros(n);
        for k in 1..n {
            out.c[k] = self.c[k - 1] / k as f64;
        }
        out
    }

    /// Number of leading coefficients that are negligible relative to the
    /// largest one.
    pub fn valuation(&self) -> usize {
        let scale = self.c.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tiny = 1e-13 * scale.max(f64::MIN_POSITIVE);
        self.c.iter().position(|v| v.norm() > tiny).unwrap_or(self.len())
    }

    /// Removes a factor `(z − z0)^k`, padding the tail with zeros.
    fn shift_down(&self, k: usize) -> Series {
        let mut out = Self::zeros(self.len());
        for j in k..self.len() {
            out.c[j - k] = self.c[j];
        }
        out
    }

    pub fn recip(&self) -> Result<Series> {
        let n = self.len();
        let c0 = self.c[0];
        if c0.norm() == 0.0 {
            return Err(Error::NonFinite { z: ZERO });
        }
        let mut out = Self::zeros(n);
        out.c[0] = c0.inv();
        for k in 1..n {
            let s: Complex64 = (1..=k).map(|j| self.c[j] * out.c[k - j]).sum();
            out.c[k] = -s / c0;
        }
        Ok(out)
    }

    /// Quotient; common leading zeros of numerator and denominator cancel,
    /// which loses that many coefficients of accuracy at the tail.
    pub fn div(&self, other: &Series) -> Result<Series> {
        let vd = other.valuation();
        if vd == 0 {
            return Ok(self * &other.recip()?);
        }
        let vn = self.valuation();
        if vn < vd || vd >= other.len() {
            return Err(Error::NonFinite { z: ZERO });
        }
        Ok(&self.shift_down(vd) * &other.shift_down(vd).recip()?)
    }

    pub fn powi(&self, n: i32) -> Result<Series> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut b = base;
        let mut acc = Series::constant(Complex64::new(1.0, 0.0), self.len());
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Series {
        // g' = f' g
        let n = self.len();
        let mut g = Self::zeros(n);
        g.c[0] = self.c[0].exp();
        for k in 1..n {
            let s: Complex64 = (1..=k).map(|j| self.c[j] * j as f64 * g.c[k - j]).sum();
            g.c[k] = s / k as f64;
        }
        g
    }

    /// Principal square root at the centre; the centre value must not vanish.
    pub fn sqrt(&self) -> Result<Series> {
        let n = self.len();
        let f0 = self.c[0];
        if f0.norm() == 0.0 {
            return Err(Error::NonFinite { z: ZERO });
        }
        let mut g = Self::zeros(n);
        g.c[0] = f0.sqrt();
        for k in 1..n {
            let s: Complex64 = (1..k).map(|j| g.c[j] * g.c[k - j]).sum();
            g.c[k] = (self.c[k] - s) / (g.c[0] * 2.0);
        }
        Ok(g)
    }

    pub fn monomial(k: usize, len: usize) -> Series {
        let mut s = Self::zeros(len);
        if k < len {
            s.c[k] = Complex64::new(1.0, 0.0);
        }
        s
    }
}

impl Add for Series {
    type Output = Series;
    fn add(self, o: Series) -> Series {
        Series {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for Series {
    type Output = Series;
    fn sub(self, o: Series) -> Series {
        Series {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series {
            c: self.c.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, o: &Series) -> Series {
        let n = self.len().min(o.len());
        let mut out = Series::zeros(n);
        for i in 0..n {
            if self.c[i] == ZERO {
                continue;
            }
            for j in 0..n - i {
                out.c[i + j] += self.c[i] * o.c[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn check(s: &str, z0: Complex64) {
        let e = parse(s).unwrap();
        let ser = Series::from_expr(&e, z0, 30).unwrap();
        for dz in [Complex64::new(0.05, 0.0), Complex64::new(-0.03, 0.04)] {
            let want = e.eval(z0 + dz).unwrap();
            assert!((ser.eval(dz) - want).norm() < 1e-12 * (1.0 + want.norm()), "{s}");
        }
    }

    #[test]
    fn expansions_match_direct_evaluation() {
        let z0 = Complex64::new(0.2, -0.1);
        for s in ["exp(-z)/2", "sqrt(1+z^2)", "(1+0.1*z)^-2", "z^3-2*i*z", "exp(z)*sqrt(2+z)/(3-z)"] {
            check(s, z0);
        }
    }

    #[test]
    fn common_zero_cancels_in_quotient() {
        let e = parse("z^2/(z*(1+z))").unwrap();
        let ser = Series::from_expr(&e, Complex64::new(0.0, 0.0), 20).unwrap();
        assert!((ser.c[0] - 0.0).norm() < 1e-15);
        assert!((ser.c[1] - 1.0).norm() < 1e-15);
        assert!((ser.c[2] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn derivative_and_integral_are_inverse() {
        let e = parse("exp(z)*(1+z^2)").unwrap();
        let s = Series::from_expr(&e, Complex64::new(0.0, 0.0), 20).unwrap();
        let back = s.derivative().integrate();
        for k in 1..19 {
            assert!((back.c[k] - s.c[k]).norm() < 1e-15);
        }
    }
}
