//! Surfaces from potentials: pointwise Iwasawa of the integrated frame,
//! the Sym formula for positions, and the frame itself for tangents and
//! normals.

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::integrate::{integrate_frame, psi_loop, FrameGrid, FrameOptions, Integrator};
use super::sym::{basis, sym_bobenko_at, to_r3, to_r3_complex, Vec3};
use super::{finite3, Normalized, PotentialForm, PotentialSpec, C64};
use crate::convert;
use crate::error::{Error, Result};
use crate::factor::{iwasawa, FactorOptions};
use crate::grid::{DomainGrid, Node};
use crate::loops::{adj2, hat_extend, m2, LoopMat, M2};
use crate::weier::{self, WeierstrassData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LoopGroup,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshMeta {
    pub method: Method,
    pub h: f64,
    pub basepoint: C64,
    pub lambda0: C64,
    pub truncation: usize,
    pub tail_bound: f64,
    pub max_factor_residual: f64,
    pub max_unitarity: f64,
    pub masked_nodes: usize,
}

/// Grid-indexed surface samples. Entries at masked nodes are zero.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub grid: DomainGrid,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    /// `∂f/∂x` and `∂f/∂y` from the frame (exact up to the frame's error).
    pub fx: Vec<Vec3>,
    pub fy: Vec<Vec3>,
    /// `e^u` with metric `4e^{2u}|dz|²`.
    pub conformal: Vec<f64>,
    pub meta: MeshMeta,
}

/// Geometry at one point.
#[derive(Debug, Clone, Copy)]
pub struct PointGeometry {
    pub position: Vec3,
    pub normal: Vec3,
    pub fx: Vec3,
    pub fy: Vec3,
    pub conformal: f64,
    pub residual: f64,
    pub unitarity: f64,
}

impl SurfaceMesh {
    pub fn empty(grid: DomainGrid, meta: MeshMeta) -> Self {
        let n = grid.len();
        SurfaceMesh {
            grid,
            positions: vec![Vec3::zeros(); n],
            normals: vec![Vec3::zeros(); n],
            fx: vec![Vec3::zeros(); n],
            fy: vec![Vec3::zeros(); n],
            conformal: vec![0.0; n],
            meta,
        }
    }

    pub fn valid(&self, n: Node) -> bool {
        self.grid.valid(n)
    }

    pub fn position(&self, n: Node) -> Option<Vec3> {
        self.valid(n).then(|| self.positions[self.grid.index(n)])
    }

    pub fn set(&mut self, k: usize, g: &PointGeometry) {
        self.positions[k] = g.position;
        self.normals[k] = g.normal;
        self.fx[k] = g.fx;
        self.fy[k] = g.fy;
        self.conformal[k] = g.conformal;
    }

    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.len()).filter(|k| self.grid.mask[*k])
    }

    /// Bounding-box diagonal of the valid positions.
    pub fn diameter(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for k in self.valid_indices() {
            lo = lo.inf(&self.positions[k]);
            hi = hi.sup(&self.positions[k]);
        }
        if lo.x.is_finite() {
            (hi - lo).norm()
        } else {
            0.0
        }
    }

    /// Applies `x ↦ R x` to all vector fields.
    pub fn rotate(&mut self, r: &Matrix3<f64>) {
        for v in self
            .positions
            .iter_mut()
            .chain(self.normals.iter_mut())
            .chain(self.fx.iter_mut())
            .chain(self.fy.iter_mut())
        {
            *v = r * *v;
        }
    }

    pub fn refresh_meta(&mut self) {
        self.meta.masked_nodes = self.grid.mask.iter().filter(|v| !**v).count();
    }
}

/// Rotation of ℝ³ induced by `X ↦ U X U⁻¹` for `U ∈ SU(2)`.
pub fn adjoint_rotation(u: &M2) -> Matrix3<f64> {
    let uinv = adj2(u);
    let cols: Vec<Vec3> = basis().iter().map(|e| to_r3(&(u * e * uinv))).collect();
    Matrix3::from_columns(&cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SurfaceOptions {
    pub frame: FrameOptions,
    pub factor: FactorOptions,
}

/// Positions, tangents and normal at one point from a holomorphic frame
/// `Φ = L·Ψ` whose Maurer–Cartan form is the potential with function `a`.
/// Only `Ψ` is factorized when the unitary left factor `L` is given.
fn geometry(
    psi: &LoopMat,
    left: Option<&LoopMat>,
    a: Complex64,
    h: f64,
    lambda0: Complex64,
    opts: &FactorOptions,
) -> Result<PointGeometry> {
    let iw = iwasawa(psi, opts)?;
    let f = match left {
        Some(l) => l.mul_full(&iw.unitary),
        None => iw.unitary,
    };
    let position = sym_bobenko_at(&f, h, lambda0)?;
    let rho = iw.plus.coeff(0)[(0, 0)].re;
    let fl = f.eval(lambda0);
    let finv = adj2(&fl);
    let [e1, e2, e3] = basis();
    let i = Complex64::new(0.0, 1.0);
    // f_z = (a ρ²/2) λ0⁻¹ Ad_F (e1 − i e2)
    let c = a * (rho * rho / 2.0) / lambda0;
    let fz = to_r3_complex(&(fl * (e1 - e2 * i) * finv)).map(|v| v * c);
    let fx = Vec3::new(2.0 * fz[0].re, 2.0 * fz[1].re, 2.0 * fz[2].re);
    let fy = Vec3::new(-2.0 * fz[0].im, -2.0 * fz[1].im, -2.0 * fz[2].im);
    let normal = to_r3(&(fl * e3 * finv));
    let g = PointGeometry {
        position,
        normal,
        fx,
        fy,
        conformal: fx.norm() / 2.0,
        residual: iw.residual,
        unitarity: iw.unitarity,
    };
    if finite3(&g.position) && finite3(&g.fx) && finite3(&g.fy) && g.conformal.is_finite() {
        Ok(g)
    } else {
        Err(Error::NonFinite { z: Complex64::new(f64::NAN, 0.0) })
    }
}

/// Loop-group surface for `h ≠ 0`. Nodes whose factorization fails are
/// masked.
pub fn surface_from_potential(spec: &PotentialSpec, grid: &DomainGrid, opts: &SurfaceOptions) -> Result<SurfaceMesh> {
    build(spec, grid, opts, None)
}

/// Surface of the dressed frames `h₊·Φ̂`: the unitary part of the pointwise
/// Iwasawa factorization, fed to the same Sym formula.
pub fn dressed_surface(
    spec: &PotentialSpec,
    h_plus: &LoopMat,
    grid: &DomainGrid,
    opts: &SurfaceOptions,
) -> Result<SurfaceMesh> {
    build(spec, grid, opts, Some(h_plus))
}

/// Unitary parts of `iwasawa(h₊·Φ̂(z))` on the grid.
pub fn dress_frame(h_plus: &LoopMat, frames: &FrameGrid, opts: &FactorOptions) -> Vec<Option<LoopMat>> {
    (0..frames.grid.len())
        .into_par_iter()
        .map(|k| {
            let phi = frames.phi_hat(frames.grid.node_of(k))?;
            iwasawa(&h_plus.mul_full(&phi), opts).ok().map(|r| r.unitary)
        })
        .collect()
}

fn build(spec: &PotentialSpec, grid: &DomainGrid, opts: &SurfaceOptions, dress: Option<&LoopMat>) -> Result<SurfaceMesh> {
    if spec.h == 0.0 {
        return Err(Error::Precondition("the loop-group path needs h ≠ 0".into()));
    }
    let data = spec.resolve()?;
    let frames = integrate_frame(&data, spec.h, spec.z0, grid, &opts.frame)?;
    let results: Vec<Option<PointGeometry>> = (0..frames.grid.len())
        .into_par_iter()
        .map(|k| {
            let node = frames.grid.node_of(k);
            let a = frames.a_at(node);
            match dress {
                None => geometry(&frames.psi(node)?, Some(&frames.e0_hat), a, spec.h, spec.lambda0, &opts.factor),
                Some(hp) => geometry(&hp.mul_full(&frames.phi_hat(node)?), None, a, spec.h, spec.lambda0, &opts.factor),
            }
            .ok()
        })
        .collect();

    let meta = MeshMeta {
        method: Method::LoopGroup,
        h: spec.h,
        basepoint: spec.z0.into(),
        lambda0: spec.lambda0.into(),
        truncation: frames.truncation,
        tail_bound: 0.0,
        max_factor_residual: 0.0,
        max_unitarity: 0.0,
        masked_nodes: 0,
    };
    let mut mesh = SurfaceMesh::empty(frames.grid.clone(), meta);
    for (k, r) in results.iter().enumerate() {
        match r {
            Some(g) => {
                mesh.set(k, g);
                mesh.meta.max_factor_residual = mesh.meta.max_factor_residual.max(g.residual);
                mesh.meta.max_unitarity = mesh.meta.max_unitarity.max(g.unitarity);
            }
            None => mesh.grid.mask[k] = false,
        }
    }
    if !mesh.grid.valid(frames.base) {
        return Err(Error::Precondition("factorization failed at the basepoint".into()));
    }
    let mut tail: f64 = 0.0;
    for k in mesh.valid_indices() {
        tail = tail.max(frames.tail_bound(frames.grid.node_of(k)));
    }
    mesh.meta.tail_bound = tail;
    mesh.refresh_meta();
    Ok(mesh)
}

/// Any `h`: the loop-group path for `h ≠ 0`, the classical Weierstrass
/// integral for `h = 0`.
pub fn surface(spec: &PotentialSpec, grid: &DomainGrid, opts: &SurfaceOptions) -> Result<SurfaceMesh> {
    if spec.h != 0.0 {
        return surface_from_potential(spec, grid, opts);
    }
    spec.validate()?;
    match &spec.form {
        PotentialForm::Classical { mu, nu } => {
            let w = WeierstrassData::new(mu.clone(), nu.clone(), spec.z0);
            let mut mesh = weier::minimal_surface(&w, grid)?;
            if let Some(e0) = spec.e0 {
                // requested basepoint frame replaces the classical one
                let ecl = w.initial_frame()?;
                mesh.rotate(&adjoint_rotation(&(e0 * adj2(&ecl))));
            }
            Ok(mesh)
        }
        PotentialForm::Normalized { a, q } => {
            let data = spec.resolve()?;
            let w = convert::potential_to_minimal(a, q, spec.z0)?;
            let mut mesh = weier::minimal_surface(&w, grid)?;
            mesh.rotate(&adjoint_rotation(&classical_alignment(&data, &w, spec.z0)?));
            Ok(mesh)
        }
    }
}

/// `U` with `f_normalized = Ad_U f_classical` for the classical data
/// produced from normalized data.
///
/// The classical surface is the limit of the loop-group family of
/// `(a', Q, E0')`, where `a' = c·a` for a unimodular constant `c`. The
/// constant gauge `D = diag(e^{iψ}, e^{−iψ})` with `e^{−2iψ} = c` carries
/// `(a, Q)` to `(a', Q)` and leaves the Sym formula invariant, so
/// `U = E0·D·E0'⁻¹`.
pub fn classical_alignment(data: &Normalized, w: &WeierstrassData, z0: Complex64) -> Result<M2> {
    let back = convert::minimal_to_potential(w, 1.0)?;
    let a_prime = match &back.form {
        PotentialForm::Normalized { a, .. } => a.eval(z0)?,
        PotentialForm::Classical { .. } => unreachable!(),
    };
    let c = a_prime / data.a.eval(z0)?;
    let psi = -c.arg() / 2.0;
    let d = m2(
        Complex64::from_polar(1.0, psi),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, -psi),
    );
    let e0p = back.e0.unwrap_or_else(crate::loops::id2);
    Ok(data.e0 * d * adj2(&e0p))
}

/// Evaluates the loop-group surface at arbitrary points of the domain by
/// integrating the frame from the basepoint along an axis-aligned path.
#[derive(Debug, Clone)]
pub struct SurfaceSampler {
    data: Normalized,
    h: f64,
    z0: Complex64,
    lambda0: Complex64,
    e0_hat: LoopMat,
    truncation: usize,
    step: f64,
    scale: f64,
    factor: FactorOptions,
}

impl SurfaceSampler {
    /// Uses the truncation and tail scale of an existing mesh computation.
    pub fn new(spec: &PotentialSpec, truncation: usize, opts: &SurfaceOptions) -> Result<Self> {
        if spec.h == 0.0 {
            return Err(Error::Precondition("sampling needs h ≠ 0".into()));
        }
        let data = spec.resolve()?;
        Ok(SurfaceSampler {
            e0_hat: hat_extend(&data.e0)?,
            data,
            h: spec.h,
            z0: spec.z0,
            lambda0: spec.lambda0,
            truncation,
            step: opts.frame.ode_step,
            scale: 1.0,
            factor: opts.factor,
        })
    }

    pub fn sample(&self, z: Complex64) -> Result<PointGeometry> {
        let integ = Integrator {
            a: &self.data.a,
            q: &self.data.q,
            h: self.h,
            n: self.truncation,
            step: self.step,
            scale: self.scale,
        };
        let corner = Complex64::new(z.re, self.z0.im);
        let st = integ.polyline(&[self.z0, corner, z])?;
        geometry(&psi_loop(&st.psi), Some(&self.e0_hat), st.a_end, self.h, self.lambda0, &self.factor)
    }

    pub fn position(&self, z: Complex64) -> Result<Vec3> {
        Ok(self.sample(z)?.position)
    }
}
