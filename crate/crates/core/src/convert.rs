//! Conversion between classical Weierstrass data and normalized potentials,
//! the zero/pole-order conditions on potentials, and minimal-to-CMC
//! families.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{order_at, Expr, OrderEstimate};
use crate::frames::{surface, PotentialForm, PotentialSpec, SurfaceMesh, SurfaceOptions};
use crate::grid::DomainGrid;
use crate::weier::WeierstrassData;

/// `Γ0 = μ̄0 / (|μ0|(|ν0|²+1))`.
pub fn gamma0(mu0: Complex64, nu0: Complex64) -> Result<Complex64> {
    let d = mu0.norm() * (nu0.norm_sqr() + 1.0);
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidData(format!("Γ0 needs finite nonzero μ(z0), got μ0 = {mu0}, ν0 = {nu0}")));
    }
    Ok(mu0.conj() / d)
}

/// Normalized potential of the CMC family through a minimal surface.
///
/// Returns `a = 2μΓ0(ν̄0ν+1)²` and `Q = −2μν_z`, so that the potential
/// `[[0, −(h/2)a], [Q/a, 0]]λ⁻¹dz` is `[[0, −hμ], [−ν_z, 0]]λ⁻¹dz` when
/// `μ(z0) = 1`, `ν(z0) = 0`. The basepoint frame is the initial coordinate
/// frame of the classical data.
pub fn minimal_to_potential(w: &WeierstrassData, h: f64) -> Result<PotentialSpec> {
    let mu0 = w.mu.eval(w.z0)?;
    let nu0 = w.nu.eval(w.z0)?;
    let g0 = gamma0(mu0, nu0)?;
    let a = Expr::mul(Expr::constant(g0 * 2.0), Expr::mul(w.mu.clone(), mobius_factor(&w.nu, nu0)));
    let q = w.hopf();
    let mut spec = PotentialSpec::normalized(a, q, h, w.z0);
    spec.e0 = Some(w.initial_frame()?);
    Ok(spec)
}

/// `(ν̄0ν + 1)²`.
fn mobius_factor(nu: &Expr, nu0: Complex64) -> Expr {
    Expr::powi(Expr::add(Expr::mul(Expr::constant(nu0.conj()), nu.clone()), Expr::one()), 2)
}

/// Off-diagonal entries `(−(h/2)a, Q/a)` of the potential, in the simplest
/// symbolic form available for classical input:
/// `(−hμΓ0(ν̄0ν+1)², −ν_z/(Γ0(ν̄0ν+1)²))`.
pub fn potential_entries(w: &WeierstrassData, h: f64) -> Result<(Expr, Expr)> {
    let mu0 = w.mu.eval(w.z0)?;
    let nu0 = w.nu.eval(w.z0)?;
    let g0 = gamma0(mu0, nu0)?;
    let m = mobius_factor(&w.nu, nu0);
    let upper = Expr::mul(Expr::constant(g0 * -h), Expr::mul(w.mu.clone(), m.clone()));
    let lower = Expr::neg(Expr::div(w.nu.diff(), Expr::mul(Expr::constant(g0), m)));
    Ok((upper, lower))
}

/// Off-diagonal entries for normalized data.
pub fn normalized_entries(a: &Expr, q: &Expr, h: f64) -> (Expr, Expr) {
    (Expr::mul(Expr::real(-h / 2.0), a.clone()), Expr::div(q.clone(), a.clone()))
}

/// Classical data of the minimal member of the family of `(a, Q)`.
///
/// With `p = Q/a`, `q = ∫_{z0} p` and `Ā0 = (a(z0)/ā(z0))^{1/4}`
/// (principal branch), `μ = (a/2)Ā0⁻²` and `ν = −Ā0² q`. For real `a(z0)`
/// this is `μ = a/2`, `ν = −∫ Q/a`.
pub fn potential_to_minimal(a: &Expr, q: &Expr, z0: Complex64) -> Result<WeierstrassData> {
    let a0 = a.eval(z0)?;
    if a0.norm() == 0.0 {
        return Err(Error::Precondition(format!("a vanishes at the basepoint {z0}")));
    }
    let p = Expr::div(q.clone(), a.clone());
    let big_q = p.antiderivative(z0);
    let abar0 = if a0.im == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        (a0 / a0.conj()).powf(0.25)
    };
    let s = abar0 * abar0;
    let mu = Expr::mul(Expr::constant(0.5 / s), a.clone());
    let nu = Expr::mul(Expr::constant(-s), big_q);
    Ok(WeierstrassData::new(mu, nu, z0))
}

/// Applies the rotation carried by a basepoint frame `E0 = [[A0, B0],
/// [−B̄0, Ā0]]` to classical data normalized at `z0`:
/// `ν = (B̄0 + Ā0ν')/(A0 − B0ν')`, `μ = μ'(A0 − B0ν')²`.
///
/// This inverts the normalization done by [`minimal_to_potential`], so
/// `restore_frame(potential_to_minimal(minimal_to_potential(w)), E0) = w`.
pub fn restore_frame(w: &WeierstrassData, e0: &crate::loops::M2) -> WeierstrassData {
    let (a0, b0) = (e0[(0, 0)], e0[(0, 1)]);
    let den = Expr::sub(Expr::constant(a0), Expr::mul(Expr::constant(b0), w.nu.clone()));
    let nu = Expr::div(
        Expr::add(Expr::constant(b0.conj()), Expr::mul(Expr::constant(a0.conj()), w.nu.clone())),
        den.clone(),
    );
    let mu = Expr::mul(w.mu.clone(), Expr::powi(den, 2));
    WeierstrassData::new(mu, nu, w.z0)
}

/// Minimal data → potential → minimal data, with the basepoint rotation
/// undone; the identity up to quadrature error.
pub fn round_trip(w: &WeierstrassData) -> Result<WeierstrassData> {
    let spec = minimal_to_potential(w, 1.0)?;
    let (a, q) = match &spec.form {
        PotentialForm::Normalized { a, q } => (a, q),
        PotentialForm::Classical { .. } => unreachable!(),
    };
    let back = potential_to_minimal(a, q, w.z0)?;
    Ok(match spec.e0 {
        Some(e0) => restore_frame(&back, &e0),
        None => back,
    })
}

/// Classification of a point by the orders of `a` and `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "tag")]
pub enum OrderTag {
    /// `a` holomorphic and nonzero.
    AHoloNonzero,
    /// `Ord(a) = −2`.
    DoublePole,
    /// `Ord(Q) = |Ord(a)|/(2r) − 2`.
    Case1 { r: u32 },
    /// `Ord(Q) = (Ord(a)+2)/(2r) − 2`, or `(−Ord(a)−2)/(2r) − 2` at poles.
    Case2 { r: u32 },
    /// Zero of `a` with `Ord(Q) ≥ Ord(a)`: holomorphic potential, branched surface.
    BranchPoint,
    Invalid,
    Indeterminate,
}

impl OrderTag {
    pub fn is_smooth(&self) -> bool {
        matches!(self, OrderTag::AHoloNonzero | OrderTag::DoublePole | OrderTag::Case1 { .. } | OrderTag::Case2 { .. })
    }
}

/// Classifies by the zero/pole-order conditions. `ord_q = None` means `Q ≡ 0`.
pub fn classify(ord_a: i32, ord_q: Option<i32>) -> OrderTag {
    if ord_a == 0 {
        return OrderTag::AHoloNonzero;
    }
    if ord_a == -2 {
        return OrderTag::DoublePole;
    }
    let Some(oq) = ord_q else {
        return if ord_a > 0 { OrderTag::BranchPoint } else { OrderTag::Invalid };
    };
    let m = ord_a.abs();
    let (n1, n2) = if ord_a > 0 { (m, m + 2) } else { (m, m - 2) };
    let hits = |num: i32, r: i32| num > 0 && num % (2 * r) == 0 && num / (2 * r) - 2 == oq;
    for r in 1..=(m + 2) {
        if hits(n1, r) {
            return OrderTag::Case1 { r: r as u32 };
        }
        if hits(n2, r) {
            return OrderTag::Case2 { r: r as u32 };
        }
    }
    if ord_a > 0 && oq >= ord_a {
        OrderTag::BranchPoint
    } else {
        OrderTag::Invalid
    }
}

/// Whether the point lies in the set where the minimal member is defined
/// directly: `a` holomorphic, and `Ord(Q) = (Ord(a)−2)/2` at zeros of `a`.
pub fn sigma_star(ord_a: i32, ord_q: Option<i32>) -> bool {
    match ord_a {
        0 => true,
        n if n > 0 => ord_q.is_some_and(|q| n % 2 == 0 && q == (n - 2) / 2),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEntry {
    pub z: crate::frames::C64,
    pub ord_a: Option<OrderEstimate>,
    pub ord_q: Option<OrderEstimate>,
    /// `Q` vanishes identically.
    pub q_zero: bool,
    pub tag: OrderTag,
    pub sigma_star: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    pub entries: Vec<OrderEntry>,
}

impl OrderReport {
    pub fn all_smooth(&self) -> bool {
        self.entries.iter().all(|e| e.tag.is_smooth())
    }
}

/// Order classification at each sample point. Indeterminate orders are
/// reported as such, never guessed.
pub fn validate_orders(a: &Expr, q: &Expr, points: &[Complex64]) -> Result<OrderReport> {
    let entries = points
        .iter()
        .map(|&z| {
            let oa = order_at(a, z);
            let oq = order_at(q, z);
            let q_zero = matches!(oq, Err(Error::IdenticallyZero { .. }));
            let (tag, star) = match (&oa, &oq) {
                (Ok(ea), Ok(eq)) => (classify(ea.order, Some(eq.order)), sigma_star(ea.order, Some(eq.order))),
                (Ok(ea), Err(_)) if q_zero => (classify(ea.order, None), sigma_star(ea.order, None)),
                (Err(Error::IdenticallyZero { .. }), _) => (OrderTag::Invalid, false),
                _ => (OrderTag::Indeterminate, false),
            };
            OrderEntry {
                z: z.into(),
                ord_a: oa.ok(),
                ord_q: oq.ok(),
                q_zero,
                tag,
                sigma_star: star,
            }
        })
        .collect();
    Ok(OrderReport { entries })
}

/// One surface per `h`, all from the same data, basepoint and grid.
/// Failures are kept per member.
pub fn family(spec: &PotentialSpec, hs: &[f64], grid: &DomainGrid, opts: &SurfaceOptions) -> Vec<Result<SurfaceMesh>> {
    hs.par_iter().map(|&h| surface(&spec.with_h(h), grid, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn w(mu: &str, nu: &str) -> WeierstrassData {
        WeierstrassData::new(parse(mu).unwrap(), parse(nu).unwrap(), Complex64::new(0.0, 0.0))
    }

    fn samples() -> Vec<Complex64> {
        (0..12).map(|k| Complex64::from_polar(0.1 + 0.07 * k as f64, 0.9 * k as f64)).collect()
    }

    #[test]
    fn enneper_potential() {
        let (u, l) = potential_entries(&w("1", "z^2"), 0.5).unwrap();
        for z in samples() {
            assert!((u.eval(z).unwrap() + 0.5).norm() < 1e-15);
            assert!((l.eval(z).unwrap() + 2.0 * z).norm() < 1e-14);
        }
    }

    #[test]
    fn catenoid_potential() {
        let h = 0.7;
        let (u, l) = potential_entries(&w("-exp(-z)/2", "-exp(z)"), h).unwrap();
        for z in samples() {
            let ez = z.exp();
            let want_u = -(h / 4.0) * (-z).exp() * (ez + 1.0).powi(2);
            let want_l = -2.0 * ez / (ez + 1.0).powi(2);
            assert!((u.eval(z).unwrap() - want_u).norm() < 1e-13);
            assert!((l.eval(z).unwrap() - want_l).norm() < 1e-13);
        }
    }

    #[test]
    fn plane_potential() {
        let (mu0, nu0) = (Complex64::new(0.3, -0.4), Complex64::new(1.5, 2.0));
        let data = WeierstrassData::new(Expr::constant(mu0), Expr::constant(nu0), Complex64::new(0.0, 0.0));
        let (u, l) = potential_entries(&data, 2.0).unwrap();
        let z = Complex64::new(0.2, 0.1);
        let want = -2.0 * mu0.norm() * (1.0 + nu0.norm_sqr());
        assert!((u.eval(z).unwrap() - want).norm() < 1e-13);
        assert_eq!(l.eval(z).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn back_to_classical() {
        let o = Complex64::new(0.0, 0.0);
        let e = potential_to_minimal(&parse("2").unwrap(), &parse("-4*z").unwrap(), o).unwrap();
        let plane = potential_to_minimal(&parse("2").unwrap(), &parse("0").unwrap(), o).unwrap();
        let lin = potential_to_minimal(&parse("2").unwrap(), &parse("-2").unwrap(), o).unwrap();
        for z in samples() {
            assert!((e.mu.eval(z).unwrap() - 1.0).norm() < 1e-15);
            assert!((e.nu.eval(z).unwrap() - z * z).norm() < 1e-15);
            assert!(plane.nu.eval(z).unwrap().norm() < 1e-15);
            assert!((lin.nu.eval(z).unwrap() - z).norm() < 1e-15);
        }
    }

    #[test]
    fn nonreal_basepoint_value_is_normalized() {
        let o = Complex64::new(0.0, 0.0);
        let a = parse("(1+i)*(2+z)").unwrap();
        let q = parse("3+z").unwrap();
        let d = potential_to_minimal(&a, &q, o).unwrap();
        // same Hopf differential, and ν(z0) = 0
        for z in samples() {
            assert!((d.hopf().eval(z).unwrap() - q.eval(z).unwrap()).norm() < 1e-10);
        }
        assert!(d.nu.eval(o).unwrap().norm() < 1e-15);
    }

    #[test]
    fn classification() {
        for k in 1..=3 {
            assert_eq!(classify(2 * k, Some(k - 1)), OrderTag::Case2 { r: 1 });
            assert!(sigma_star(2 * k, Some(k - 1)));
        }
        assert_eq!(classify(-2, Some(5)), OrderTag::DoublePole);
        assert_eq!(classify(2, Some(3)), OrderTag::BranchPoint);
        assert_eq!(classify(1, Some(0)), OrderTag::Invalid);
        assert_eq!(classify(0, Some(7)), OrderTag::AHoloNonzero);
        assert_eq!(classify(-4, Some(0)), OrderTag::Case1 { r: 1 });
        assert_eq!(classify(-4, Some(-1)), OrderTag::Case2 { r: 1 });
        assert_eq!(classify(8, Some(0)), OrderTag::Case1 { r: 2 });
    }
}
