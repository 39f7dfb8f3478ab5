//! su(2) ≅ ℝ³ and the Sym–Bobenko formula.
//!
//! The basis is `e1 = [[0,−i],[−i,0]]`, `e2 = [[0,1],[−1,0]]`,
//! `e3 = [[i,0],[0,−i]]`, orthonormal for `⟨X,Y⟩ = −tr(XY)/2`.

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::loops::{adj2, fro, id2, LoopMat, M2};

pub type Vec3 = Vector3<f64>;

const I: Complex64 = Complex64::new(0.0, 1.0);
const Z: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn basis() -> [M2; 3] {
    [
        M2::new(Z, -I, -I, Z),
        M2::new(Z, ONE, -ONE, Z),
        M2::new(I, Z, Z, -I),
    ]
}

/// Coordinates of `X = Σ x_k e_k` for complexified `X` (trace-free).
pub fn to_r3_complex(x: &M2) -> [Complex64; 3] {
    [
        I * (x[(0, 1)] + x[(1, 0)]) / 2.0,
        (x[(0, 1)] - x[(1, 0)]) / 2.0,
        -I * x[(0, 0)],
    ]
}

/// Real coordinates; the anti-Hermitian part is assumed.
pub fn to_r3(x: &M2) -> Vec3 {
    let c = to_r3_complex(x);
    Vec3::new(c[0].re, c[1].re, c[2].re)
}

pub fn from_r3(v: &Vec3) -> M2 {
    let [e1, e2, e3] = basis();
    e1 * Complex64::new(v.x, 0.0) + e2 * Complex64::new(v.y, 0.0) + e3 * Complex64::new(v.z, 0.0)
}

/// `−(1/2h)(2iλ∂_λF·F⁻¹ + F e3 F⁻¹ − e3)` at `λ0`, as a point of ℝ³.
pub fn sym_bobenko_at(f: &LoopMat, h: f64, lambda0: Complex64) -> Result<Vec3> {
    if h == 0.0 {
        return Err(Error::Precondition("the Sym formula needs h ≠ 0".into()));
    }
    let fl = f.eval(lambda0);
    let unit = fro(&(fl * fl.adjoint() - id2()));
    if unit > 1e-8 {
        return Err(Error::NotUnitary { residual: unit });
    }
    let finv = adj2(&fl);
    let e3 = basis()[2];
    let d = f.lambda_derivative_at(lambda0);
    let x = (d * finv * (I * 2.0 * lambda0) + fl * e3 * finv - e3) * Complex64::new(-1.0 / (2.0 * h), 0.0);
    Ok(to_r3(&x))
}

pub fn sym_bobenko(f: &LoopMat, h: f64) -> Result<Vec3> {
    sym_bobenko_at(f, h, ONE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loops::m2;

    #[test]
    fn basis_is_orthonormal_and_round_trips() {
        let b = basis();
        for (j, x) in b.iter().enumerate() {
            for (k, y) in b.iter().enumerate() {
                let ip = -(x * y).trace() / 2.0;
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-15);
            }
        }
        let v = Vec3::new(0.3, -1.2, 2.5);
        assert!((to_r3(&from_r3(&v)) - v).norm() < 1e-15);
        // right-handed: [e1, e2] = 2 e3 matches the cross product e1 × e2 = e3
        let comm = b[0] * b[1] - b[1] * b[0];
        assert!(fro(&(comm - b[2] * Complex64::new(2.0, 0.0))) < 1e-15);
    }

    #[test]
    fn identity_maps_to_origin() {
        let p = sym_bobenko(&LoopMat::identity(), 0.7).unwrap();
        assert_eq!(p, Vec3::zeros());
    }

    #[test]
    fn special_loop_form_maps_to_origin() {
        // [[A, −λB̄], [λ⁻¹B, Ā]] with |A|² + |B|² = 1
        let (a, b) = (Complex64::new(0.36, 0.48), Complex64::new(0.0, -0.8));
        let f = LoopMat::from_terms(&[
            (-1, m2(Z, Z, b, Z)),
            (0, m2(a, Z, Z, a.conj())),
            (1, m2(Z, -b.conj(), Z, Z)),
        ]);
        for h in [1e-3, 1.0, 42.0] {
            assert!(sym_bobenko(&f, h).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn zero_h_is_rejected() {
        assert!(sym_bobenko(&LoopMat::identity(), 0.0).is_err());
    }
}
