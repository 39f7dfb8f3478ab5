//! Holomorphic frames, extended frames and the surfaces they produce.

mod curvature;
mod integrate;
mod surface;
mod sym;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use crate::convert;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::loops::{id2, M2};
use crate::weier::WeierstrassData;

pub use curvature::{extract_curvature, CurvatureField, CurvatureSample};
pub use integrate::{integrate_frame, FrameGrid, FrameOptions, PathOrder, DEFAULT_MAX_TRUNCATION, DEFAULT_TAIL_TOL};
pub use surface::{
    adjoint_rotation, classical_alignment, dress_frame, dressed_surface, surface, surface_from_potential, MeshMeta, Method, PointGeometry,
    SurfaceMesh, SurfaceOptions, SurfaceSampler,
};
pub use sym::{basis, from_r3, sym_bobenko, sym_bobenko_at, to_r3, to_r3_complex, Vec3};

/// Which Weierstrass-type data define the surface.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialForm {
    /// `η = [[0, −(h/2)a], [Q/a, 0]] λ⁻¹ dz`.
    Normalized { a: Expr, q: Expr },
    /// Classical minimal-surface data `μ dz`, `ν`.
    Classical { mu: Expr, nu: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub form: PotentialForm,
    pub h: f64,
    pub z0: Complex64,
    /// Frame at the basepoint. `None` means the identity for normalized
    /// data and the initial frame of the classical data otherwise.
    pub e0: Option<M2>,
    /// Sym-formula evaluation point on the unit circle.
    pub lambda0: Complex64,
}

/// Normalized data ready for integration.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub a: Expr,
    pub q: Expr,
    pub e0: M2,
}

impl PotentialSpec {
    pub fn normalized(a: Expr, q: Expr, h: f64, z0: Complex64) -> Self {
        PotentialSpec {
            form: PotentialForm::Normalized { a, q },
            h,
            z0,
            e0: None,
            lambda0: Complex64::new(1.0, 0.0),
        }
    }

    pub fn classical(mu: Expr, nu: Expr, h: f64, z0: Complex64) -> Self {
        PotentialSpec {
            form: PotentialForm::Classical { mu, nu },
            h,
            z0,
            e0: None,
            lambda0: Complex64::new(1.0, 0.0),
        }
    }

    pub fn with_h(&self, h: f64) -> Self {
        PotentialSpec { h, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.h.is_finite() {
            return Err(Error::InvalidData(format!("h must be finite, got {}", self.h)));
        }
        if ((self.lambda0.norm()) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidData(format!("λ0 must lie on the unit circle, got {}", self.lambda0)));
        }
        Ok(())
    }

    /// Resolves classical data to a normalized potential with its basepoint frame.
    pub fn resolve(&self) -> Result<Normalized> {
        self.validate()?;
        match &self.form {
            PotentialForm::Normalized { a, q } => Ok(Normalized {
                a: a.clone(),
                q: q.clone(),
                e0: self.e0.unwrap_or_else(id2),
            }),
            PotentialForm::Classical { mu, nu } => {
                let w = WeierstrassData::new(mu.clone(), nu.clone(), self.z0);
                let p = convert::minimal_to_potential(&w, self.h)?;
                let (a, q) = match p.form {
                    PotentialForm::Normalized { a, q } => (a, q),
                    PotentialForm::Classical { .. } => unreachable!("conversion yields normalized data"),
                };
                let e0 = self.e0.unwrap_or(p.e0.unwrap_or_else(id2));
                Ok(Normalized { a, q, e0 })
            }
        }
    }
}

/// `[[0, −(h/2)a], [Q/a, 0]]` at one point, or `None` where it is not finite.
pub(crate) fn potential_matrix(a: Complex64, q: Complex64, h: f64) -> Option<M2> {
    let z = Complex64::new(0.0, 0.0);
    let upper = a * (-h / 2.0);
    let lower = q / a;
    let ok = |v: Complex64| v.re.is_finite() && v.im.is_finite();
    (ok(upper) && ok(lower) && a.norm() > 0.0).then(|| M2::new(z, upper, lower, z))
}

pub(crate) fn finite3(v: &Vector3<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Serializable complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C64 {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for C64 {
    fn from(z: Complex64) -> Self {
        C64 { re: z.re, im: z.im }
    }
}
