//! Iwasawa and Birkhoff factorization of twisted loops.
//!
//! Both reduce to one block-Toeplitz linear system built from Laurent
//! coefficients.
//!
//! Iwasawa: with `Φ = F·B`, the loop `P = Φ*Φ = B*B` is Hermitian positive
//! on the circle and `X = B⁻¹` satisfies `P·X = B*`, a loop with no
//! positive powers. Solving the finite section `Σ_k P_{m−k} Y_k = δ_{m0}` by
//! Cholesky and rescaling gives `X`, and `B = adj X`. If `Φ` is a Laurent
//! polynomial of width `w` then so are `B` and `X` (matrix Fejér–Riesz), so
//! any section of size ≥ w is exact, not merely convergent.
//!
//! Birkhoff: with `X = X₋·X₊`, the loop `Y = X₊⁻¹` makes `X·Y = X₋` free of
//! positive powers with constant term `I`; the same kind of section solved
//! by LU, with the singular-value condition number as the big-cell test.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loops::{adj2, id2, m2, LoopMat, Membership, M2};

/// Extra section size beyond the input width.
pub const TRUNCATION_MARGIN: usize = 8;
pub const DEFAULT_FACTOR_TOL: f64 = 1e-8;
/// Birkhoff systems worse conditioned than this are outside the big cell.
pub const BIG_CELL_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorOptions {
    /// Section size; `None` means input width + margin.
    pub truncation: Option<usize>,
    /// Reconstruction/unitarity tolerance, relative to the input size.
    pub tol: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            truncation: None,
            tol: DEFAULT_FACTOR_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IwasawaResult {
    pub unitary: LoopMat,
    pub plus: LoopMat,
    /// Relative coefficient error of `unitary·plus` against the input.
    pub residual: f64,
    /// `‖F F* − I‖` over circle samples.
    pub unitarity: f64,
    /// Cholesky-diagonal spread squared; a cheap condition estimate.
    pub condition: f64,
    pub truncation: usize,
}

#[derive(Debug, Clone)]
pub struct BirkhoffResult {
    pub minus: LoopMat,
    pub plus: LoopMat,
    pub residual: f64,
    pub condition: f64,
    pub truncation: usize,
}

fn width(l: &LoopMat) -> usize {
    (l.hi() - l.lo()) as usize
}

/// Block-Toeplitz section `T[(r, k)] = coeff(r − k)` of size `n + 1` blocks.
fn toeplitz(l: &LoopMat, n: usize) -> DMatrix<Complex64> {
    let d = 2 * (n + 1);
    let mut t = DMatrix::zeros(d, d);
    for r in 0..=n {
        for k in 0..=n {
            let c = l.coeff(r as i32 - k as i32);
            for a in 0..2 {
                for b in 0..2 {
                    t[(2 * r + a, 2 * k + b)] = c[(a, b)];
                }
            }
        }
    }
    t
}

/// The solution columns for right-hand side `e_0 ⊗ I`, as 2×2 blocks.
fn blocks_from(cols: [DVector<Complex64>; 2], n: usize) -> Vec<M2> {
    (0..=n)
        .map(|k| m2(cols[0][2 * k], cols[1][2 * k], cols[0][2 * k + 1], cols[1][2 * k + 1]))
        .collect()
}

fn unit_rhs(d: usize, col: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(d);
    v[col] = Complex64::new(1.0, 0.0);
    v
}

pub fn iwasawa(phi: &LoopMat, opts: &FactorOptions) -> Result<IwasawaResult> {
    let scale = phi.max_norm();
    let phi = phi.trim(1e-17 * scale);
    let n = opts.truncation.unwrap_or(width(&phi) + TRUNCATION_MARGIN);
    let p = phi.star().mul_full(&phi);
    let t = toeplitz(&p, n);
    let d = t.nrows();
    let chol = Cholesky::new(t).ok_or(Error::NotPositiveDefinite { truncation: n })?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..d).map(|k| l[(k, k)].re).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = (dmax / dmin).powi(2);
    let y = blocks_from([chol.solve(&unit_rhs(d, 0)), chol.solve(&unit_rhs(d, 1))], n);

    let y00 = y[0][(0, 0)].re;
    if !(y00 > 0.0) {
        return Err(Error::NotPositiveDefinite { truncation: n });
    }
    let rho = 1.0 / y00.sqrt();
    let norm = m2(
        Complex64::new(rho, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0 / rho, 0.0),
    );
    let x_terms: Vec<(i32, M2)> = y.iter().enumerate().map(|(k, yk)| (k as i32, yk * norm)).collect();
    let x = LoopMat::from_terms(&x_terms).trim(1e-15 * rho.max(1.0 / rho));
    let plus = x.adjugate();
    let unitary = phi.mul_full(&x).trim(1e-15 * scale);

    let residual = unitary.mul_full(&plus).dist(&phi) / scale.max(1.0);
    let unitarity = unitary.check_membership(Membership::Unitary);
    let worst = residual.max(unitarity);
    if !(worst <= opts.tol) {
        return Err(Error::FactorResidual {
            residual: worst,
            tolerance: opts.tol,
        });
    }
    Ok(IwasawaResult {
        unitary,
        plus,
        residual,
        unitarity,
        condition,
        truncation: n,
    })
}

/// Power-series inverse of a loop with only nonnegative powers, to degree `n`.
fn series_inverse(y: &LoopMat, n: usize) -> Result<LoopMat> {
    let y0 = y.coeff(0);
    let det = y0.determinant();
    if det.norm() == 0.0 {
        return Err(Error::OutsideBigCell {
            condition: f64::INFINITY,
        });
    }
    let y0inv = adj2(&y0) / det;
    let mut z: Vec<M2> = vec![y0inv];
    for k in 1..=n {
        let mut s = M2::zeros();
        for j in 1..=k {
            s += y.coeff(j as i32) * z[k - j];
        }
        z.push(-(y0inv * s));
    }
    Ok(LoopMat::from_terms(
        &z.into_iter().enumerate().map(|(k, m)| (k as i32, m)).collect::<Vec<_>>(),
    ))
}

pub fn birkhoff(x: &LoopMat, opts: &FactorOptions) -> Result<BirkhoffResult> {
    let scale = x.max_norm();
    let x = x.trim(1e-17 * scale);
    let n = opts.truncation.unwrap_or(width(&x) + TRUNCATION_MARGIN);
    let t = toeplitz(&x, n);
    let d = t.nrows();
    let sv = t.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = smax / smin;
    if !(condition <= BIG_CELL_CONDITION) {
        return Err(Error::OutsideBigCell { condition });
    }
    let lu = t.lu();
    let solve = |col| {
        lu.solve(&unit_rhs(d, col))
            .ok_or(Error::OutsideBigCell {
                condition: f64::INFINITY,
            })
    };
    let y_blocks = blocks_from([solve(0)?, solve(1)?], n);
    let y = LoopMat::from_terms(
        &y_blocks.into_iter().enumerate().map(|(k, m)| (k as i32, m)).collect::<Vec<_>>(),
    );
    let plus = series_inverse(&y, n)?.trim(1e-16 * scale);
    let minus = x.mul_full(&y).nonpositive_part().trim(1e-16 * scale);

    let residual = minus.mul_full(&plus).dist(&x) / scale.max(1.0);
    if !(residual <= opts.tol) {
        return Err(Error::FactorResidual {
            residual,
            tolerance: opts.tol,
        });
    }
    Ok(BirkhoffResult {
        minus,
        plus,
        residual,
        condition,
        truncation: n,
    })
}

/// Closed-form Iwasawa factors of `[[1, 0], [λ⁻¹g, 1]]`.
pub fn phi0_closed_form(g: Complex64) -> (LoopMat, LoopMat) {
    let z = Complex64::new(0.0, 0.0);
    let s = (1.0 + g.norm_sqr()).sqrt();
    let f = LoopMat::from_terms(&[
        (-1, m2(z, z, g / s, z)),
        (0, id2() * Complex64::new(1.0 / s, 0.0)),
        (1, m2(z, -g.conj() / s, z, z)),
    ]);
    let b = LoopMat::from_terms(&[
        (0, m2(Complex64::new(s, 0.0), z, z, Complex64::new(1.0 / s, 0.0))),
        (1, m2(z, g.conj() / s, z, z)),
    ]);
    (f, b)
}

/// Largest coefficientwise distance, for comparisons against closed forms.
pub fn coefficient_error(a: &LoopMat, b: &LoopMat) -> f64 {
    a.dist(b)
}
