//! Meromorphic functions of one complex variable, given as text.
//!
//! Expressions are immutable once built and are evaluated exactly as
//! written; there is no algebraic simplification beyond folding the
//! constants 0 and 1 when derivatives are formed.

mod order;
mod parse;
pub mod quad;
mod series;

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use order::{order_at, order_at_with_radius, OrderEstimate, DEFAULT_ORDER_RADIUS};
pub use parse::parse;
pub use series::Series;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Sqrt(Box<Expr>),
    /// `∫_base^z integrand dτ` along the straight segment. Produced by
    /// conversions whose antiderivative has no closed form in the grammar.
    Integral { integrand: Box<Expr>, base: Complex64 },
}

/// Remembers the last value taken by every `sqrt` node so that repeated
/// evaluation along a path stays on a continuous branch.
#[derive(Debug, Clone, Default)]
pub struct BranchState {
    prev: Vec<Option<Complex64>>,
}

impl BranchState {
    pub fn new() -> Self {
        Self::default()
    }
}

// Constructors take two owned trees; operator traits would hide the allocation.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn constant(v: impl Into<Complex64>) -> Expr {
        Expr::Const(v.into())
    }

    pub fn real(v: f64) -> Expr {
        Expr::Const(Complex64::new(v, 0.0))
    }

    pub fn zero() -> Expr {
        Expr::real(0.0)
    }

    pub fn one() -> Expr {
        Expr::real(1.0)
    }

    fn as_const(&self) -> Option<Complex64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    fn is_zero(&self) -> bool {
        self.as_const() == Some(Complex64::new(0.0, 0.0))
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(Complex64::new(1.0, 0.0))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            b
        } else if b.is_zero() {
            a
        } else {
            Expr::Add(Box::new(a), Box::new(b))
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        if b.is_zero() {
            a
        } else if a.is_zero() {
            Expr::neg(b)
        } else {
            Expr::Sub(Box::new(a), Box::new(b))
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        if a.is_zero() || b.is_zero() {
            Expr::zero()
        } else if a.is_one() {
            b
        } else if b.is_one() {
            a
        } else {
            Expr::Mul(Box::new(a), Box::new(b))
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        if a.is_zero() {
            Expr::zero()
        } else if b.is_one() {
            a
        } else {
            Expr::Div(Box::new(a), Box::new(b))
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn powi(a: Expr, n: i32) -> Expr {
        match (n, &a) {
            (0, _) => Expr::one(),
            (1, _) => a,
            (_, Expr::Const(c)) if n > 0 || c.norm() > 0.0 => Expr::Const(ipow(*c, n)),
            _ => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn sqrt(a: Expr) -> Expr {
        Expr::Sqrt(Box::new(a))
    }

    pub fn integral(integrand: Expr, base: Complex64) -> Expr {
        Expr::Integral {
            integrand: Box::new(integrand),
            base,
        }
    }

    /// Evaluates with the principal square-root branch; poles produce
    /// non-finite values rather than an error.
    pub fn eval_raw(&self, z: Complex64) -> Complex64 {
        let mut counter = 0;
        self.ev(z, None, &mut counter)
    }

    /// Evaluates and flags non-finite results.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let v = self.eval_raw(z);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { z })
        }
    }

    /// Evaluates with every `sqrt` continued from the value it took on the
    /// previous call with the same `state`.
    pub fn eval_tracked(&self, z: Complex64, state: &mut BranchState) -> Complex64 {
        let mut counter = 0;
        self.ev(z, Some(state), &mut counter)
    }

    fn ev(&self, z: Complex64, mut br: Option<&mut BranchState>, counter: &mut usize) -> Complex64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => z,
            Expr::Add(a, b) => {
                let x = a.ev(z, br.as_deref_mut(), counter);
                x + b.ev(z, br, counter)
            }
            Expr::Sub(a, b) => {
                let x = a.ev(z, br.as_deref_mut(), counter);
                x - b.ev(z, br, counter)
            }
            Expr::Mul(a, b) => {
                let x = a.ev(z, br.as_deref_mut(), counter);
                x * b.ev(z, br, counter)
            }
            Expr::Div(a, b) => {
                let x = a.ev(z, br.as_deref_mut(), counter);
                let y = b.ev(z, br, counter);
                if y == Complex64::new(0.0, 0.0) {
                    Complex64::new(f64::INFINITY, f64::NAN)
                } else {
                    x / y
                }
            }
            Expr::Pow(a, n) => {
                let x = a.ev(z, br, counter);
                ipow(x, *n)
            }
            Expr::Neg(a) => -a.ev(z, br, counter),
            Expr::Exp(a) => a.ev(z, br, counter).exp(),
            Expr::Sqrt(a) => {
                let idx = *counter;
                *counter += 1;
                let x = a.ev(z, br.as_deref_mut(), counter);
                let s = x.sqrt();
                match br {
                    Some(state) => {
                        if state.prev.len() <= idx {
                            state.prev.resize(idx + 1, None);
                        }
                        let chosen = match state.prev[idx] {
                            Some(p) if (s + p).norm() < (s - p).norm() => -s,
                            _ => s,
                        };
                        if chosen.re.is_finite() && chosen.im.is_finite() {
                            state.prev[idx] = Some(chosen);
                        }
                        chosen
                    }
                    None => s,
                }
            }
            Expr::Integral { integrand, base } => quad::segment(integrand, *base, z),
        }
    }

    /// Symbolic derivative with respect to z.
    pub fn diff(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var => Expr::one(),
            Expr::Add(a, b) => Expr::add(a.diff(), b.diff()),
            Expr::Sub(a, b) => Expr::sub(a.diff(), b.diff()),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(), (**b).clone()),
                Expr::mul((**a).clone(), b.diff()),
            ),
            Expr::Div(a, b) => {
                let num = Expr::sub(
                    Expr::mul(a.diff(), (**b).clone()),
                    Expr::mul((**a).clone(), b.diff()),
                );
                Expr::div(num, Expr::powi((**b).clone(), 2))
            }
            Expr::Pow(a, n) => {
                if *n == 0 {
                    return Expr::zero();
                }
                Expr::mul(
                    Expr::mul(Expr::real(*n as f64), Expr::powi((**a).clone(), n - 1)),
                    a.diff(),
                )
            }
            Expr::Neg(a) => Expr::neg(a.diff()),
            Expr::Exp(a) => Expr::mul(self.clone(), a.diff()),
            Expr::Sqrt(a) => Expr::div(a.diff(), Expr::mul(Expr::real(2.0), self.clone())),
            Expr::Integral { integrand, .. } => (**integrand).clone(),
        }
    }

    /// Coefficients (constant term first) when the expression is a
    /// polynomial in z built from `+ - *`, non-negative powers and division
    /// by constants.
    pub fn as_polynomial(&self) -> Option<Vec<Complex64>> {
        fn trim(mut p: Vec<Complex64>) -> Vec<Complex64> {
            while p.len() > 1 && *p.last().unwrap() == Complex64::new(0.0, 0.0) {
                p.pop();
            }
            p
        }
        fn add(a: &[Complex64], b: &[Complex64], sign: f64) -> Vec<Complex64> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|k| {
                    a.get(k).copied().unwrap_or_default() + b.get(k).copied().unwrap_or_default() * sign
                })
                .collect()
        }
        fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
            let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
            for (i, x) in a.iter().enumerate() {
                for (j, y) in b.iter().enumerate() {
                    out[i + j] += x * y;
                }
            }
            out
        }
        let p = match self {
            Expr::Const(c) => vec![*c],
            Expr::Var => vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            Expr::Add(a, b) => add(&a.as_polynomial()?, &b.as_polynomial()?, 1.0),
            Expr::Sub(a, b) => add(&a.as_polynomial()?, &b.as_polynomial()?, -1.0),
            Expr::Mul(a, b) => mul(&a.as_polynomial()?, &b.as_polynomial()?),
            Expr::Div(a, b) => {
                let d = trim(b.as_polynomial()?);
                if d.len() != 1 || d[0] == Complex64::new(0.0, 0.0) {
                    return None;
                }
                a.as_polynomial()?.into_iter().map(|c| c / d[0]).collect()
            }
            Expr::Pow(a, n) if *n >= 0 => {
                let base = a.as_polynomial()?;
                let mut acc = vec![Complex64::new(1.0, 0.0)];
                for _ in 0..*n {
                    acc = mul(&acc, &base);
                }
                acc
            }
            Expr::Neg(a) => a.as_polynomial()?.into_iter().map(|c| -c).collect(),
            _ => return None,
        };
        Some(trim(p))
    }

    /// Builds the expression `Σ c_k z^k`.
    pub fn from_polynomial(coeffs: &[Complex64]) -> Expr {
        let mut acc = Expr::zero();
        for (k, c) in coeffs.iter().enumerate() {
            if *c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let term = Expr::mul(Expr::Const(*c), Expr::powi(Expr::Var, k as i32));
            acc = Expr::add(acc, term);
        }
        acc
    }

    /// Antiderivative vanishing at `base`: closed form for polynomials,
    /// otherwise a quadrature node.
    pub fn antiderivative(&self, base: Complex64) -> Expr {
        if let Some(p) = self.as_polynomial() {
            let mut q = vec![Complex64::new(0.0, 0.0); p.len() + 1];
            for (k, c) in p.iter().enumerate() {
                q[k + 1] = c / (k as f64 + 1.0);
            }
            let shift: Complex64 = q
                .iter()
                .enumerate()
                .map(|(k, c)| c * ipow(base, k as i32))
                .sum();
            q[0] -= shift;
            Expr::from_polynomial(&q)
        } else {
            Expr::integral(self.clone(), base)
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.im != 0.0 && c.re != 0.0 => 5,
            Expr::Const(c) if c.im != 0.0 => 2,
            Expr::Const(c) if c.re < 0.0 => 3,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var => write!(f, "z"),
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "+")?;
                b.fmt_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, "-")?;
                b.fmt_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)
            }
            Expr::Pow(a, n) => {
                a.fmt_prec(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_prec(f, 3)
            }
            Expr::Exp(a) => {
                write!(f, "exp(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Expr::Sqrt(a) => {
                write!(f, "sqrt(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Expr::Integral { integrand, base } => {
                write!(f, "int[")?;
                fmt_const(*base, f)?;
                write!(f, "](")?;
                integrand.fmt_prec(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn fmt_const(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match (c.re, c.im) {
        (re, 0.0) => write!(f, "{re}"),
        (0.0, im) => {
            if im == 1.0 {
                write!(f, "i")
            } else if im == -1.0 {
                write!(f, "-i")
            } else {
                write!(f, "{im}*i")
            }
        }
        (re, im) if im < 0.0 => write!(f, "({re}-{}*i)", -im),
        (re, im) => write!(f, "({re}+{im}*i)"),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse(s)
    }
}

/// Integer power by repeated squaring.
pub fn ipow(x: Complex64, n: i32) -> Complex64 {
    let mut base = if n < 0 { Complex64::new(1.0, 0.0) / x } else { x };
    let mut e = n.unsigned_abs();
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basic_evaluation() {
        let e = parse("z^2").unwrap();
        assert!((e.eval(c(1.0, 1.0)).unwrap() - c(0.0, 2.0)).norm() < 1e-15);
        let mu = parse("-exp(-z)/2").unwrap();
        assert!((mu.eval(c(0.0, 0.0)).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
        assert_eq!(parse("exp(z)").unwrap().eval(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn pole_is_flagged() {
        let e = parse("1/z^2").unwrap();
        assert!(matches!(e.eval(c(0.0, 0.0)), Err(Error::NonFinite { .. })));
        let e = parse("1/z").unwrap();
        assert!(e.eval(c(0.0, 0.0)).is_err());
    }

    #[test]
    fn derivative_of_monomial() {
        for k in 1..6 {
            let e = parse(&format!("z^{k}")).unwrap();
            let d = e.diff();
            let z = c(0.3, -0.7);
            let want = ipow(z, k - 1) * k as f64;
            assert!((d.eval(z).unwrap() - want).norm() < 1e-14);
        }
        assert_eq!(parse("z^3").unwrap().diff().to_string(), "3*z^2");
    }

    #[test]
    fn derivative_of_constant_and_exp() {
        assert!(parse("4.5").unwrap().diff().is_zero());
        let d = parse("exp(-z)").unwrap().diff();
        let z = c(0.2, 0.4);
        assert!((d.eval(z).unwrap() + (-z).exp()).norm() < 1e-15);
    }

    #[test]
    fn sqrt_squares_back() {
        let e = parse("sqrt(z^3+1)").unwrap();
        let z = c(-1.3, 0.2);
        let s = e.eval(z).unwrap();
        assert!((s * s - (z * z * z + 1.0)).norm() < 1e-14);
    }

    #[test]
    fn tracked_sqrt_is_continuous_around_origin() {
        let e = parse("sqrt(z)").unwrap();
        let mut st = BranchState::new();
        let mut prev = e.eval_tracked(c(1.0, 0.0), &mut st);
        for k in 1..=400 {
            let t = 2.0 * std::f64::consts::PI * k as f64 / 400.0;
            let v = e.eval_tracked(c(t.cos(), t.sin()), &mut st);
            assert!((v - prev).norm() < 0.05);
            prev = v;
        }
        // one full turn lands on the other branch
        assert!((prev + 1.0).norm() < 1e-12);
    }

    #[test]
    fn polynomial_extraction_and_antiderivative() {
        let e = parse("-2*z*3 + z^2/2").unwrap();
        let p = e.as_polynomial().unwrap();
        assert_eq!(p.len(), 3);
        assert!((p[1] - c(-6.0, 0.0)).norm() < 1e-15);
        assert!(parse("exp(z)").unwrap().as_polynomial().is_none());
        assert!(parse("1/z").unwrap().as_polynomial().is_none());

        let k = 3;
        let integrand = parse("3*z^2").unwrap();
        let anti = integrand.antiderivative(c(0.0, 0.0));
        let z = c(0.4, 0.9);
        assert!((anti.eval(z).unwrap() - ipow(z, k)).norm() < 1e-14);
    }

    #[test]
    fn non_polynomial_antiderivative_uses_quadrature() {
        let anti = parse("exp(z)").unwrap().antiderivative(c(0.0, 0.0));
        assert!(matches!(anti, Expr::Integral { .. }));
        let v = anti.eval(c(1.0, 0.0)).unwrap();
        assert!((v - c(std::f64::consts::E - 1.0, 0.0)).norm() < 1e-12);
        assert_eq!(anti.diff(), parse("exp(z)").unwrap());
    }

    #[test]
    fn display_reparses() {
        for s in [
            "-exp(-z)/2",
            "z^2*(3-z)/(1+z)^-2",
            "sqrt(z+2*i)-(1.5+2*i)*z",
            "-(z+1)^3",
            "2*(-z)",
            "5.1+1.5*z^5+0.35*z^10",
        ] {
            let e = parse(s).unwrap();
            let back = parse(&e.to_string()).unwrap();
            let z = c(0.31, -0.17);
            assert!((e.eval(z).unwrap() - back.eval(z).unwrap()).norm() < 1e-13, "{s} -> {e}");
        }
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::Var),
            (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(a, b)| Expr::Const(c(a, b))),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::sub(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::div(a, Expr::add(Expr::real(4.0), Expr::mul(b.clone(), b)))),
                (inner.clone(), 0i32..4).prop_map(|(a, n)| Expr::powi(a, n)),
                inner.clone().prop_map(|a| Expr::exp(Expr::mul(Expr::real(0.3), a))),
                inner.prop_map(Expr::neg),
            ]
        })
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(e in arb_expr(), x in -0.8f64..0.8, y in -0.8f64..0.8) {
            let z = c(x, y);
            let d = e.diff().eval_raw(z);
            let step = 1e-5;
            let fd = (e.eval_raw(z + step) - e.eval_raw(z - step)) / (2.0 * step);
            prop_assume!(d.re.is_finite() && d.im.is_finite() && fd.re.is_finite() && fd.im.is_finite());
            prop_assume!(d.norm() < 1e4);
            prop_assert!((d - fd).norm() <= 1e-6 * (1.0 + d.norm()), "{} at {}: {} vs {}", e, z, d, fd);
        }

        #[test]
        fn evaluation_is_deterministic(e in arb_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let a = e.eval_raw(c(x, y));
            let b = e.eval_raw(c(x, y));
            prop_assert!(a == b || (a.re.is_nan() && b.re.is_nan()) || (a.im.is_nan() && b.im.is_nan()));
        }
    }
}
