//! Reflective and rotational symmetries, checked on the holomorphic data
//! and on generated meshes.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::convert;
use crate::expr::quad::integrate_polyline;
use crate::frames::{
    adjoint_rotation, classical_alignment, PotentialForm, PotentialSpec, SurfaceMesh, SurfaceOptions, SurfaceSampler, Vec3,
};
use crate::loops::{adj2, id2, m2, M2};
use crate::weier::WeierstrassData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SymmetrySpec {
    /// `z ↦ z̄` paired with reflection in the `e1∧e3` plane.
    Reflective,
    /// `z ↦ e^{iθ}z`, `θ = 2π/n`, paired with rotation about the `e3` axis.
    Rotational { n: u32 },
}

impl SymmetrySpec {
    pub fn rotational(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidData(format!("rotation order must be at least 2, got {n}")));
        }
        Ok(SymmetrySpec::Rotational { n })
    }

    pub fn theta(&self) -> f64 {
        match self {
            SymmetrySpec::Reflective => 0.0,
            SymmetrySpec::Rotational { n } => TAU / *n as f64,
        }
    }

    /// `T = diag(e^{iθ/2}, e^{−iθ/2})`.
    pub fn t_matrix(&self) -> M2 {
        let t = self.theta() / 2.0;
        let z = Complex64::new(0.0, 0.0);
        m2(Complex64::from_polar(1.0, t), z, z, Complex64::from_polar(1.0, -t))
    }

    /// Domain map.
    pub fn map_z(&self, z: Complex64) -> Complex64 {
        match self {
            SymmetrySpec::Reflective => z.conj(),
            SymmetrySpec::Rotational { .. } => z * Complex64::from_polar(1.0, self.theta()),
        }
    }

    /// Ambient map applied to `f(z)`; `f(map_z(z))` should equal it.
    pub fn map_f(&self, f: &Vec3) -> Vec3 {
        match self {
            SymmetrySpec::Reflective => Vec3::new(f.x, -f.y, f.z),
            SymmetrySpec::Rotational { .. } => self.rotation() * f,
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        match self {
            SymmetrySpec::Reflective => Matrix3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0)),
            SymmetrySpec::Rotational { .. } => adjoint_rotation(&self.t_matrix()),
        }
    }
}

/// The pair of functions constrained by the symmetry conditions: `(a, Q/a)`
/// for potentials, `(μ, ν)` for classical data. `h` scales the upper entry
/// of a potential and drops out of both conditions.
fn pair(form: &PotentialForm) -> (Expr, Expr) {
    match form {
        PotentialForm::Normalized { a, q } => (a.clone(), Expr::div(q.clone(), a.clone())),
        PotentialForm::Classical { mu, nu } => (mu.clone(), nu.clone()),
    }
}

fn max_residual(samples: &[Complex64], f: impl Fn(Complex64) -> Option<f64> + Sync) -> f64 {
    samples.par_iter().filter_map(|&z| f(z)).fold(|| 0.0, f64::max).reduce(|| 0.0, f64::max)
}

fn finite(v: Complex64) -> Option<Complex64> {
    (v.re.is_finite() && v.im.is_finite()).then_some(v)
}

/// `max |g(z) − conj(g(z̄))|` over both functions of the pair.
pub fn check_reflective_data(form: &PotentialForm, samples: &[Complex64]) -> f64 {
    let (f, g) = pair(form);
    max_residual(samples, |z| {
        let d1 = finite(f.eval_raw(z))? - finite(f.eval_raw(z.conj()))?.conj();
        let d2 = finite(g.eval_raw(z))? - finite(g.eval_raw(z.conj()))?.conj();
        Some(d1.norm().max(d2.norm()))
    })
}

/// Rotation conditions: `a(e^{iθ}z) = a(z)`, `p(e^{iθ}z) = e^{−2iθ}p(z)`
/// for potentials; `μ(e^{iθ}z) = μ(z)`, `ν(e^{iθ}z) = e^{−iθ}ν(z)` for
/// classical data.
pub fn check_rotational_data(form: &PotentialForm, n: u32, samples: &[Complex64]) -> Result<f64> {
    let s = SymmetrySpec::rotational(n)?;
    let (f, g) = pair(form);
    let theta = s.theta();
    let k = match form {
        PotentialForm::Normalized { .. } => -2.0,
        PotentialForm::Classical { .. } => -1.0,
    };
    let rot = Complex64::from_polar(1.0, theta);
    let phase = Complex64::from_polar(1.0, k * theta);
    Ok(max_residual(samples, |z| {
        let w = z * rot;
        let d1 = finite(f.eval_raw(w))? - finite(f.eval_raw(z))?;
        let d2 = finite(g.eval_raw(w))? - phase * finite(g.eval_raw(z))?;
        Some(d1.norm().max(d2.norm()))
    }))
}

/// Coefficient-support form of the rotation condition for polynomial data:
/// powers of `a` (or `μ`) are `≡ 0 mod n`, powers of `Q` are `≡ −2 mod n`
/// (or those of `ν` are `≡ −1 mod n`). `None` when the data are not
/// polynomial.
pub fn laurent_rotational(form: &PotentialForm, n: u32, tol: f64) -> Option<bool> {
    let (f, g, shift) = match form {
        PotentialForm::Normalized { a, q } => (a, q, 2),
        PotentialForm::Classical { mu, nu } => (mu, nu, 1),
    };
    let (pf, pg) = (f.as_polynomial()?, g.as_polynomial()?);
    let n = n as usize;
    let ok_f = pf.iter().enumerate().all(|(k, c)| k % n == 0 || c.norm() <= tol);
    let ok_g = pg.iter().enumerate().all(|(k, c)| (k + shift) % n == 0 || c.norm() <= tol);
    Some(ok_f && ok_g)
}

/// Convenience wrapper for classical data.
pub fn classical_form(w: &WeierstrassData) -> PotentialForm {
    PotentialForm::Classical {
        mu: w.mu.clone(),
        nu: w.nu.clone(),
    }
}

/// Evaluates surface positions off the grid.
pub trait PositionSampler: Sync {
    fn position(&self, z: Complex64) -> Result<Vec3>;
}

impl PositionSampler for SurfaceSampler {
    fn position(&self, z: Complex64) -> Result<Vec3> {
        SurfaceSampler::position(self, z)
    }
}

/// Bilinear interpolation of mesh positions inside valid cells.
pub struct BilinearSampler<'a>(pub &'a SurfaceMesh);

impl PositionSampler for BilinearSampler<'_> {
    fn position(&self, z: Complex64) -> Result<Vec3> {
        let g = &self.0.grid;
        let outside = || Error::Precondition(format!("resampling point {z} is outside the valid grid"));
        let (sx, sy) = (g.spec.x, g.spec.y);
        let u = (z.re - sx[0]) / g.dx();
        let v = (z.im - sy[0]) / g.dy();
        if !(u >= 0.0 && v >= 0.0 && u <= (g.nx() - 1) as f64 && v <= (g.ny() - 1) as f64) {
            return Err(outside());
        }
        let i = (u.floor() as usize).min(g.nx() - 2);
        let j = (v.floor() as usize).min(g.ny() - 2);
        let (s, t) = (u - i as f64, v - j as f64);
        let p = |a: usize, b: usize| self.0.position((a, b)).ok_or_else(outside);
        Ok(p(i, j)? * ((1.0 - s) * (1.0 - t))
            + p(i + 1, j)? * (s * (1.0 - t))
            + p(i, j + 1)? * ((1.0 - s) * t)
            + p(i + 1, j + 1)? * (s * t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshSymmetryReport {
    /// Max deviation divided by the mesh diameter.
    pub deviation: f64,
    pub checked: usize,
    pub diameter: f64,
}

/// Max over valid nodes of `‖f(map z) − map f(z)‖ / diameter`.
///
/// Reflective checks pair grid nodes exactly and need a conjugation-symmetric
/// grid. Rotational checks evaluate `f(e^{iθ}z)` with `sampler`, or by
/// bilinear interpolation when no sampler is given; nodes whose image
/// cannot be evaluated are skipped.
pub fn verify_mesh_symmetry(
    mesh: &SurfaceMesh,
    spec: &SymmetrySpec,
    sampler: Option<&dyn PositionSampler>,
) -> Result<MeshSymmetryReport> {
    let g = &mesh.grid;
    let idx: Vec<usize> = mesh.valid_indices().collect();
    let devs: Vec<Option<f64>> = match spec {
        SymmetrySpec::Reflective => {
            let (y0, y1) = (g.spec.y[0], g.spec.y[1]);
            if (y0 + y1).abs() > 1e-12 * (1.0 + y1.abs()) {
                return Err(Error::Precondition("reflective checks need a y-range symmetric about 0".into()));
            }
            idx.iter()
                .map(|&k| {
                    let (i, j) = g.node_of(k);
                    let other = mesh.position((i, g.ny() - 1 - j))?;
                    Some((other - spec.map_f(&mesh.positions[k])).norm())
                })
                .collect()
        }
        SymmetrySpec::Rotational { .. } => {
            let bilinear = BilinearSampler(mesh);
            let s: &dyn PositionSampler = sampler.unwrap_or(&bilinear);
            idx.par_iter()
                .map(|&k| {
                    let w = spec.map_z(g.point(g.node_of(k)));
                    if !g.contains(w) {
                        return None;
                    }
                    let fw = s.position(w).ok()?;
                    Some((fw - spec.map_f(&mesh.positions[k])).norm())
                })
                .collect()
        }
    };
    let checked = devs.iter().flatten().count();
    if checked == 0 {
        return Err(Error::Precondition("no node has a valid symmetric image".into()));
    }
    let diameter = mesh.diameter();
    let max = devs.into_iter().flatten().fold(0.0, f64::max);
    Ok(MeshSymmetryReport {
        deviation: if diameter > 0.0 { max / diameter } else { max },
        checked,
        diameter,
    })
}

/// Classical surface `Ad_U · 2Re∫_{z0}^{z} f_z` along `[z0, x + i·y0, z]`,
/// matching [`crate::frames::surface`] at `h = 0`.
pub struct MinimalSampler {
    w: WeierstrassData,
    rotation: Matrix3<f64>,
}

impl MinimalSampler {
    pub fn new(spec: &PotentialSpec) -> Result<Self> {
        let (w, u) = match &spec.form {
            PotentialForm::Classical { mu, nu } => {
                let w = WeierstrassData::new(mu.clone(), nu.clone(), spec.z0);
                let u = match spec.e0 {
                    Some(e0) => e0 * adj2(&w.initial_frame()?),
                    None => id2(),
                };
                (w, u)
            }
            PotentialForm::Normalized { a, q } => {
                let data = spec.resolve()?;
                let w = convert::potential_to_minimal(a, q, spec.z0)?;
                let u = classical_alignment(&data, &w, spec.z0)?;
                (w, u)
            }
        };
        Ok(MinimalSampler {
            w,
            rotation: adjoint_rotation(&u),
        })
    }
}

impl PositionSampler for MinimalSampler {
    fn position(&self, z: Complex64) -> Result<Vec3> {
        let z0 = self.w.z0;
        let pts = [z0, Complex64::new(z.re, z0.im), z];
        let mut out = [0.0; 3];
        for (c, slot) in out.iter_mut().enumerate() {
            let v = integrate_polyline(|t| self.w.fz(t).map_or(Complex64::new(f64::NAN, 0.0), |f| f[c]), &pts);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { z });
            }
            *slot = 2.0 * v.re;
        }
        Ok(self.rotation * Vec3::new(out[0], out[1], out[2]))
    }
}

/// Exact resampler for `spec`: frame integration for `h ≠ 0`, the classical
/// integral otherwise.
pub fn sampler_for(spec: &PotentialSpec, truncation: usize, opts: &SurfaceOptions) -> Result<Box<dyn PositionSampler>> {
    if spec.h == 0.0 {
        Ok(Box::new(MinimalSampler::new(spec)?))
    } else {
        Ok(Box::new(SurfaceSampler::new(spec, truncation, opts)?))
    }
}

/// Sample points on circles of the given radii, `per_circle` each.
pub fn circle_samples(radii: &[f64], per_circle: usize) -> Vec<Complex64> {
    radii
        .iter()
        .flat_map(|&r| (0..per_circle).map(move |k| Complex64::from_polar(r, TAU * (k as f64 + 0.37) / per_circle as f64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn classical(mu: &str, nu: &str) -> PotentialForm {
        PotentialForm::Classical {
            mu: parse(mu).unwrap(),
            nu: parse(nu).unwrap(),
        }
    }

    #[test]
    fn ambient_maps() {
        let s = SymmetrySpec::rotational(4).unwrap();
        let v = s.map_f(&Vec3::new(1.0, 0.0, 0.5));
        assert!((v - Vec3::new(0.0, 1.0, 0.5)).norm() < 1e-15);
        assert!(SymmetrySpec::rotational(1).is_err());
    }

    #[test]
    fn data_checks() {
        let pts = circle_samples(&[0.3, 1.0], 16);
        assert!(check_reflective_data(&classical("-exp(-z)/2", "-exp(z)"), &pts) <= 1e-12);
        assert!(check_reflective_data(&classical("1", "z^3"), &pts) <= 1e-12);
        assert!(check_reflective_data(&classical("-i*exp(-z)/2", "-exp(z)"), &[Complex64::new(0.0, 0.0)]) >= 0.5);
        for k in 1..=4 {
            let f = classical("1", &format!("z^{k}"));
            assert!(check_rotational_data(&f, k + 1, &pts).unwrap() <= 1e-12);
            assert_eq!(laurent_rotational(&f, k + 1, 0.0), Some(true));
        }
        let f = classical("1", "z^2");
        assert!(check_rotational_data(&f, 2, &circle_samples(&[1.0], 8)).unwrap() >= 0.1);
        assert_eq!(laurent_rotational(&f, 2, 0.0), Some(false));
    }
}
