//! Classical Weierstrass representation `f = 2 Re ∫ f_z dz` with
//! `f_z = μ(1−ν²)e1 − iμ(1+ν²)e2 − 2μν e3`, and the SU(2) coordinate frame
//! that goes with it.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{order_at, quad, Expr};
use crate::frames::{basis, to_r3, MeshMeta, Method, SurfaceMesh, Vec3, C64};
use crate::grid::{DomainGrid, Node};
use crate::loops::{m2, M2};

/// Radius of the circle used to evaluate removable singularities.
const LIMIT_RADIUS: f64 = 1e-3;
const LIMIT_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct WeierstrassData {
    pub mu: Expr,
    pub nu: Expr,
    pub z0: Complex64,
}

/// Regularity of the classical immersion at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    /// `Ord(μ) = 0`, `Ord(ν) ≥ 0`.
    Regular,
    /// `0 ≤ Ord(μ) = −2 Ord(ν)`.
    PoleCompensated,
    Singular,
}

impl WeierstrassData {
    pub fn new(mu: Expr, nu: Expr, z0: Complex64) -> Self {
        WeierstrassData { mu, nu, z0 }
    }

    /// The three complex components of `f_z`.
    pub fn fz_components(&self) -> [Expr; 3] {
        let (mu, nu) = (&self.mu, &self.nu);
        let nu2 = Expr::powi(nu.clone(), 2);
        let i = Complex64::new(0.0, 1.0);
        [
            Expr::mul(mu.clone(), Expr::sub(Expr::one(), nu2.clone())),
            Expr::mul(Expr::constant(-i), Expr::mul(mu.clone(), Expr::add(Expr::one(), nu2))),
            Expr::mul(Expr::real(-2.0), Expr::mul(mu.clone(), nu.clone())),
        ]
    }

    /// `f_z` at `z` as complex coordinates; `None` where not finite.
    pub fn fz(&self, z: Complex64) -> Option<[Complex64; 3]> {
        let mu = self.mu.eval_raw(z);
        let nu = self.nu.eval_raw(z);
        let i = Complex64::new(0.0, 1.0);
        let v = [mu * (1.0 - nu * nu), -i * mu * (1.0 + nu * nu), -2.0 * mu * nu];
        v.iter().all(|c| c.re.is_finite() && c.im.is_finite()).then_some(v)
    }

    /// `e^u = |μ|(1+|ν|²)`.
    pub fn conformal(&self, z: Complex64) -> Result<f64> {
        let mu = self.mu.eval(z)?;
        let nu = self.nu.eval(z)?;
        Ok(mu.norm() * (1.0 + nu.norm_sqr()))
    }

    /// `Q = −2μν_z`.
    pub fn hopf(&self) -> Expr {
        Expr::mul(Expr::real(-2.0), Expr::mul(self.mu.clone(), self.nu.diff()))
    }

    /// Unit normal `Ad_{F_C} e3`; depends on `ν` only.
    pub fn normal(&self, z: Complex64) -> Result<Vec3> {
        let nu = self.nu.eval(z)?;
        let d = 1.0 + nu.norm_sqr();
        Ok(Vec3::new(2.0 * nu.re, -2.0 * nu.im, 1.0 - nu.norm_sqr()) / d)
    }

    pub fn regularity(&self, z: Complex64) -> Result<Regularity> {
        let om = order_at(&self.mu, z)?.order;
        let on = order_at(&self.nu, z)?.order;
        Ok(if om == 0 && on >= 0 {
            Regularity::Regular
        } else if om >= 0 && om == -2 * on {
            Regularity::PoleCompensated
        } else {
            Regularity::Singular
        })
    }

    /// Whether `μν²` is holomorphic at each of `points`.
    pub fn mu_nu2_holomorphic(&self, points: &[Complex64]) -> Result<bool> {
        let e = Expr::mul(self.mu.clone(), Expr::powi(self.nu.clone(), 2));
        for &p in points {
            match order_at(&e, p) {
                Ok(o) if o.order < 0 => return Ok(false),
                Ok(_) | Err(Error::IdenticallyZero { .. }) => {}
                Err(err) => return Err(err),
            }
        }
        Ok(true)
    }

    /// `F_C(z0) = [[A0, B0], [−B̄0, Ā0]]`.
    pub fn initial_frame(&self) -> Result<M2> {
        let z0 = self.z0;
        let mu0 = self.mu.eval(z0)?;
        let (a0, b0) = if mu0.norm() > 0.0 {
            let nu0 = self.nu.eval(z0)?;
            let s = mu0.sqrt();
            let d = (mu0.norm() * (nu0.norm_sqr() + 1.0)).sqrt();
            (s / d, (nu0 * s).conj() / d)
        } else {
            // μ(z0) = 0 is allowed only when ν has a compensating pole; then
            // A0 = 0 and B0 is the phase of conj(ν√μ).
            if self.regularity(z0)? != Regularity::PoleCompensated {
                return Err(Error::InvalidData(format!("μ vanishes at the basepoint {z0} without a compensating pole of ν")));
            }
            let r2 = circle_mean(z0, |z| {
                let nu = self.nu.eval_raw(z);
                self.mu.eval_raw(z) * nu * nu
            });
            let r = r2.sqrt();
            (Complex64::new(0.0, 0.0), r.conj() / r.norm())
        };
        Ok(m2(a0, b0, -b0.conj(), a0.conj()))
    }
}

/// Mean over a small circle: the center value of a function holomorphic there.
fn circle_mean(z0: Complex64, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let n = LIMIT_SAMPLES;
    (0..n)
        .map(|k| f(z0 + Complex64::from_polar(LIMIT_RADIUS, std::f64::consts::TAU * (k as f64 + 0.5) / n as f64)))
        .sum::<Complex64>()
        / n as f64
}

/// Metric evaluator `e^u` and Hopf function `Q`.
pub fn metric_hopf(w: &WeierstrassData) -> (impl Fn(Complex64) -> Result<f64> + '_, Expr) {
    (move |z| w.conformal(z), w.hopf())
}

/// `∫ f_z dz` along one grid edge.
fn edge_integral(w: &WeierstrassData, za: Complex64, zb: Complex64) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (k, o) in out.iter_mut().enumerate() {
        *o = quad::integrate_segment(|z| w.fz(z).map_or(Complex64::new(f64::NAN, 0.0), |v| v[k]), za, zb);
    }
    out
}

fn finite(v: &[Complex64; 3]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// `∫_{z0}^{z} f_z dz` at every reachable node, along L-shaped paths whose
/// first leg is horizontal when `row_first`.
fn sweep(w: &WeierstrassData, grid: &DomainGrid, base: Node, row_first: bool) -> Vec<Option<[Complex64; 3]>> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out: Vec<Option<[Complex64; 3]>> = vec![None; grid.len()];
    // nodes along the first leg, in (primary, secondary) coordinates
    let node = |p: usize, s: usize| if row_first { (p, s) } else { (s, p) };
    let (np, ns) = if row_first { (nx, ny) } else { (ny, nx) };
    let (p0, s0) = if row_first { base } else { (base.1, base.0) };

    let walk = |start: Node, acc0: [Complex64; 3], fixed: usize, from: usize, len: usize, primary: bool| {
        let mut res = Vec::new();
        let mut go = |dir: isize| {
            let mut acc = acc0;
            let mut cur = start;
            let mut t = from as isize;
            loop {
                t += dir;
                if t < 0 || t >= len as isize {
                    break;
                }
                let next = if primary { node(t as usize, fixed) } else { node(fixed, t as usize) };
                if !grid.valid(next) {
                    break;
                }
                let d = edge_integral(w, grid.point(cur), grid.point(next));
                if !finite(&d) {
                    break;
                }
                for k in 0..3 {
                    acc[k] += d[k];
                }
                res.push((next, acc));
                cur = next;
            }
        };
        go(1);
        go(-1);
        res
    };

    let zero = [Complex64::new(0.0, 0.0); 3];
    let mut leg1 = vec![(base, zero)];
    leg1.extend(walk(base, zero, s0, p0, np, true));
    for &(n, v) in &leg1 {
        out[grid.index(n)] = Some(v);
    }
    let legs: Vec<Vec<(Node, [Complex64; 3])>> = leg1
        .par_iter()
        .map(|&(n, v)| {
            let p = if row_first { n.0 } else { n.1 };
            walk(n, v, p, s0, ns, false)
        })
        .collect();
    for leg in legs {
        for (n, v) in leg {
            out[grid.index(n)] = Some(v);
        }
    }
    out
}

/// Classical minimal surface with `f(z0) = 0`. Nodes where the data are not
/// finite, plus one cell around them, are masked; so are unreachable nodes.
pub fn minimal_surface(w: &WeierstrassData, grid: &DomainGrid) -> Result<SurfaceMesh> {
    let mut grid = grid.clone();
    let base = grid.require_node(w.z0)?;
    for k in 0..grid.len() {
        let z = grid.point(grid.node_of(k));
        let ok = w.fz(z).is_some() && w.normal(z).is_ok() && w.conformal(z).is_ok_and(|c| c > 0.0 && c.is_finite());
        if !ok {
            grid.mask[k] = false;
        }
    }
    grid.dilate();
    if !grid.valid(base) {
        return Err(Error::Precondition(format!("basepoint {} is masked", w.z0)));
    }
    let mut ints = sweep(w, &grid, base, true);
    if (0..grid.len()).any(|k| grid.mask[k] && ints[k].is_none()) {
        let alt = sweep(w, &grid, base, false);
        for (k, v) in alt.into_iter().enumerate() {
            if ints[k].is_none() {
                ints[k] = v;
            }
        }
    }

    let meta = MeshMeta {
        method: Method::Classical,
        h: 0.0,
        basepoint: w.z0.into(),
        lambda0: C64 { re: 1.0, im: 0.0 },
        truncation: 0,
        tail_bound: 0.0,
        max_factor_residual: 0.0,
        max_unitarity: 0.0,
        masked_nodes: 0,
    };
    let mut mesh = SurfaceMesh::empty(grid.clone(), meta);
    for k in 0..grid.len() {
        let Some(v) = ints[k].filter(|_| grid.mask[k]) else {
            mesh.grid.mask[k] = false;
            continue;
        };
        let z = grid.point(grid.node_of(k));
        let fz = w.fz(z).expect("checked above");
        mesh.positions[k] = Vec3::new(2.0 * v[0].re, 2.0 * v[1].re, 2.0 * v[2].re);
        mesh.fx[k] = Vec3::new(2.0 * fz[0].re, 2.0 * fz[1].re, 2.0 * fz[2].re);
        mesh.fy[k] = Vec3::new(-2.0 * fz[0].im, -2.0 * fz[1].im, -2.0 * fz[2].im);
        mesh.normals[k] = w.normal(z)?;
        mesh.conformal[k] = w.conformal(z)?;
    }
    mesh.refresh_meta();
    Ok(mesh)
}

/// `Ad_{F_C} e3` computed from the frame itself; used to cross-check
/// [`WeierstrassData::normal`].
pub fn frame_normal(w: &WeierstrassData, z: Complex64) -> Result<Vec3> {
    let mu = w.mu.eval(z)?;
    let nu = w.nu.eval(z)?;
    let s = mu.sqrt();
    let r = nu * s;
    let d = (mu.norm() * (1.0 + nu.norm_sqr())).sqrt();
    let f = m2(s / d, r.conj() / d, -r / d, s.conj() / d);
    let e3 = basis()[2];
    Ok(to_r3(&(f * e3 * f.adjoint())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::GridSpec;

    fn data(mu: &str, nu: &str) -> WeierstrassData {
        WeierstrassData::new(parse(mu).unwrap(), parse(nu).unwrap(), Complex64::new(0.0, 0.0))
    }

    #[test]
    fn enneper_tangent_matches_polynomial_form() {
        let w = data("1", "z");
        let z = Complex64::new(0.3, -0.2);
        let i = Complex64::new(0.0, 1.0);
        let v = w.fz(z).unwrap();
        let want = [1.0 - z * z, -i * (1.0 + z * z), -2.0 * z];
        for k in 0..3 {
            assert!((v[k] - want[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn normal_formula_matches_frame_and_tangents() {
        let w = data("-exp(-z)/2", "-exp(z)");
        let grid = DomainGrid::new(GridSpec::square(0.5, 11)).unwrap();
        let mesh = minimal_surface(&w, &grid).unwrap();
        for k in mesh.valid_indices() {
            let z = mesh.grid.point(mesh.grid.node_of(k));
            let n = mesh.normals[k];
            assert!((n - frame_normal(&w, z).unwrap()).norm() < 1e-12);
            let c = mesh.fx[k].cross(&mesh.fy[k]).normalize();
            assert!((n - c).norm() < 1e-12, "{n} vs {c}");
            assert!((mesh.fx[k].norm() / 2.0 - mesh.conformal[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn catenoid_hopf_is_minus_one() {
        let w = data("-exp(-z)/2", "-exp(z)");
        let q = w.hopf();
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.4, -1.1)] {
            assert!((q.eval(z).unwrap() + 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn initial_frames() {
        assert!((data("1", "0").initial_frame().unwrap() - crate::loops::id2()).norm() < 1e-15);
        let e = data("-exp(-z)/2", "-exp(z)").initial_frame().unwrap();
        assert!((e[(0, 0)].norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((e[(0, 1)].norm() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((e.determinant() - 1.0).norm() < 1e-14);
        // ν(z0) = 0: diagonal
        let e = data("(2+i)*exp(z)", "z").initial_frame().unwrap();
        assert_eq!(e[(0, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn compensated_zero_of_mu() {
        // μ = z², ν = 1/z: μν² = 1 and the surface is regular at 0
        let w = data("z^2", "1/z");
        assert_eq!(w.regularity(Complex64::new(0.0, 0.0)).unwrap(), Regularity::PoleCompensated);
        let e = w.initial_frame().unwrap();
        assert!(e[(0, 0)].norm() < 1e-15);
        assert!((e[(0, 1)] - 1.0).norm() < 1e-9);
    }

    #[test]
    fn basepoint_at_origin_and_closed_loop_cancels() {
        let w = data("1", "z^2");
        let grid = DomainGrid::new(GridSpec::square(1.0, 9)).unwrap();
        let mesh = minimal_surface(&w, &grid).unwrap();
        assert_eq!(mesh.position((4, 4)).unwrap(), Vec3::zeros());
        // compare against the closed-form antiderivative
        for k in mesh.valid_indices() {
            let z = mesh.grid.point(mesh.grid.node_of(k));
            let i = Complex64::new(0.0, 1.0);
            let z5 = z.powi(5) / 5.0;
            let want = [z - z5, -i * (z + z5), -2.0 * z.powi(3) / 3.0];
            for c in 0..3 {
                assert!((mesh.positions[k][c] - 2.0 * want[c].re).abs() < 1e-13);
            }
        }
    }
}
