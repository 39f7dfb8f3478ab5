//! Named example data: plane/sphere, catenoid, helicoid, Enneper, Smyth,
//! an order-5 rotational example and Kusner's surface.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr};
use crate::frames::PotentialSpec;
use crate::grid::GridSpec;
use crate::symmetry::SymmetrySpec;

/// One surface of a gallery family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub h: f64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone)]
pub struct GalleryEntry {
    pub name: String,
    /// Data with `h = 0`; members substitute their own `h`.
    pub spec: PotentialSpec,
    pub members: Vec<Member>,
    pub symmetry: Option<SymmetrySpec>,
    /// Where the order report is taken by default.
    pub order_points: Vec<Complex64>,
}

pub const NAMES: [&str; 7] = ["plane", "catenoid", "helicoid", "enneper-k", "smyth-k", "order5", "kusner"];

const CATENOID_MU: &str = "-exp(-z)/2";
const HELICOID_MU: &str = "-i*exp(-z)/2";
const CATENOID_NU: &str = "-exp(z)";
const KUSNER_MU: &str = "i*(sqrt(5)*z^3+1)^2/(z^6+sqrt(5)*z^3-1)^2";
const KUSNER_NU: &str = "z^2*(z^3-sqrt(5))/(sqrt(5)*z^3+1)";
const ORDER5_A: &str = "5.1+1.5*z^5+0.35*z^10";
const ORDER5_P: &str = "1.25*z^3+4.15*z^8";

fn classical(mu: &str, nu: &str) -> Result<PotentialSpec> {
    Ok(PotentialSpec::classical(parse(mu)?, parse(nu)?, 0.0, Complex64::new(0.0, 0.0)))
}

fn members(hs: &[f64], grid: GridSpec) -> Vec<Member> {
    hs.iter().map(|&h| Member { h, grid }).collect()
}

/// Splits `enneper-3` into `("enneper", Some(3))`.
fn split_index(name: &str) -> (&str, Option<u32>) {
    match name.rsplit_once('-') {
        Some((stem, k)) => match k.parse() {
            Ok(k) => (stem, Some(k)),
            Err(_) => (name, None),
        },
        None => (name, None),
    }
}

/// Looks up a gallery family. `sphere` is an alias for the plane data at
/// `h = 1`; `enneper-k` and `smyth-k` need an integer `k ≥ 1`.
pub fn lookup(name: &str) -> Result<GalleryEntry> {
    // Grids are sized so the finite-difference curvature check resolves
    // each surface; see `report::summarize_curvature`.
    let unit = GridSpec::square(1.0, 41);
    let fine = GridSpec::square(1.0, 61);
    let (stem, k) = split_index(name);
    let (spec, members, symmetry) = match (stem, k) {
        ("plane", None) => (classical("1", "0")?, members(&[0.0, 1.0], GridSpec::square(1.0, 61)), None),
        ("sphere", None) => (classical("1", "0")?, members(&[1.0], GridSpec::square(1.0, 61)), None),
        ("catenoid", None) => {
            let mut m = members(&[1e-10, 0.1], fine);
            // The h = 10 cousin is small and its potential large; a smaller
            // patch keeps the frame series well inside its tail tolerance.
            m.push(Member {
                h: 10.0,
                grid: GridSpec::square(0.5, 61),
            });
            (classical(CATENOID_MU, CATENOID_NU)?, m, Some(SymmetrySpec::Reflective))
        }
        ("helicoid", None) => (classical(HELICOID_MU, CATENOID_NU)?, members(&[1e-10, 0.1, 5.0], fine), None),
        ("enneper", Some(k)) if k >= 1 => {
            let spec = classical("1", &format!("z^{k}"))?;
            (spec, members(&[0.0], unit), rotational(k + 1)?)
        }
        ("smyth", Some(k)) if k >= 1 => {
            let spec = classical("1", &format!("z^{k}"))?;
            (spec, members(&[1e-6, 1.0], unit), rotational(k + 1)?)
        }
        ("order5", None) => {
            let a = parse(ORDER5_A)?;
            let q = Expr::mul(a.clone(), parse(ORDER5_P)?);
            let spec = PotentialSpec::normalized(a, q, 0.0, Complex64::new(0.0, 0.0));
            (spec, members(&[1e-8, 2.0], GridSpec::square(0.7, 121)), Some(SymmetrySpec::rotational(5)?))
        }
        ("kusner", None) => (classical(KUSNER_MU, KUSNER_NU)?, members(&[1e-9, 1.0], GridSpec::square(0.45, 161)), None),
        _ => {
            return Err(Error::Config(format!(
                "unknown gallery entry '{name}' (known: {}, sphere)",
                NAMES.join(", ")
            )))
        }
    };
    let mut order_points = vec![spec.z0];
    if stem == "kusner" {
        order_points.extend(kusner_poles().into_iter().filter(|p| p.norm() < 1.0));
    }
    Ok(GalleryEntry {
        name: name.to_string(),
        spec,
        members,
        symmetry,
        order_points,
    })
}

fn rotational(n: u32) -> Result<Option<SymmetrySpec>> {
    SymmetrySpec::rotational(n).map(Some)
}

/// Roots of `z⁶ + √5 z³ − 1`, the poles of Kusner's `μ` (hence of `a`).
pub fn kusner_poles() -> Vec<Complex64> {
    let s5 = 5f64.sqrt();
    let mut out = Vec::with_capacity(6);
    for w in [(-s5 + 3.0) / 2.0, (-s5 - 3.0) / 2.0] {
        let r = w.abs().cbrt();
        let base = if w > 0.0 { 0.0 } else { std::f64::consts::PI / 3.0 };
        for j in 0..3 {
            out.push(Complex64::from_polar(r, base + 2.0 * std::f64::consts::PI * j as f64 / 3.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for n in ["plane", "sphere", "catenoid", "helicoid", "enneper-2", "smyth-3", "order5", "kusner"] {
            let e = lookup(n).unwrap();
            assert!(!e.members.is_empty(), "{n}");
        }
        assert!(lookup("enneper-k").is_err());
        assert!(lookup("smyth-0").is_err());
        assert!(lookup("torus").is_err());
    }

    #[test]
    fn kusner_poles_are_roots() {
        let p = parse("z^6+sqrt(5)*z^3-1").unwrap();
        for z in kusner_poles() {
            assert!(p.eval(z).unwrap().norm() < 1e-12, "{z}");
        }
    }
}
