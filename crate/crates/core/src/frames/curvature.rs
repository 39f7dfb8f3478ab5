//! Curvature from finite differences of the tangent fields.

use num_complex::Complex64;
use serde::Serialize;

use super::surface::SurfaceMesh;
use super::sym::Vec3;
use crate::grid::Node;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub h_num: f64,
    pub k_plus: f64,
    pub k_minus: f64,
    pub q_re: f64,
    pub q_im: f64,
}

impl CurvatureSample {
    pub fn q_num(&self) -> Complex64 {
        Complex64::new(self.q_re, self.q_im)
    }
}

/// Per-node curvature; `None` where the stencil leaves the valid region.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub nx: usize,
    pub ny: usize,
    pub samples: Vec<Option<CurvatureSample>>,
}

impl CurvatureField {
    pub fn at(&self, n: Node) -> Option<CurvatureSample> {
        self.samples[n.1 * self.nx + n.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, CurvatureSample)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|s| ((k % self.nx, k / self.nx), s)))
    }

    pub fn count(&self) -> usize {
        self.samples.iter().flatten().count()
    }
}

/// Centered first-derivative weights for offsets `1..=k`. Only orders whose
/// leading error term `∂^{p+2}` has `p + 2 ≡ 2 (mod 4)` are used: for those
/// the errors of `f_xx` and `f_yy` cancel on harmonic maps, which keeps `H`
/// of near-minimal surfaces at rounding level.
const STENCILS: [(&[f64], f64); 3] = [
    (&[672.0, -168.0, 32.0, -3.0], 840.0),
    (&[8.0, -1.0], 12.0),
    (&[1.0], 2.0),
];

fn node_at(mesh: &SurfaceMesh, n: Node, o: isize, dx: bool) -> Option<usize> {
    let g = &mesh.grid;
    let (i, j) = (n.0 as isize, n.1 as isize);
    let (i, j) = if dx { (i + o, j) } else { (i, j + o) };
    if i < 0 || j < 0 || i >= g.nx() as isize || j >= g.ny() as isize {
        return None;
    }
    let m = (i as usize, j as usize);
    g.valid(m).then(|| g.index(m))
}

/// Half-width of the widest stencil usable along both axes at `n`.
fn reach(mesh: &SurfaceMesh, n: Node) -> usize {
    let ok = |o: isize| [true, false].iter().all(|&dx| node_at(mesh, n, o, dx).is_some() && node_at(mesh, n, -o, dx).is_some());
    (1..=4).take_while(|&o| ok(o)).count()
}

fn axis_derivative(mesh: &SurfaceMesh, field: &[Vec3], n: Node, dx: bool, reach: usize) -> Option<Vec3> {
    let step = if dx { mesh.grid.dx() } else { mesh.grid.dy() };
    let (w, den) = STENCILS.iter().find(|(w, _)| w.len() <= reach)?;
    let mut acc = Vec3::zeros();
    for (k, c) in w.iter().enumerate() {
        let o = k as isize + 1;
        acc += (field[node_at(mesh, n, o, dx)?] - field[node_at(mesh, n, -o, dx)?]) * *c;
    }
    Some(acc / (den * step))
}

fn neighborhood_valid(mesh: &SurfaceMesh, n: Node) -> bool {
    let g = &mesh.grid;
    if n.0 == 0 || n.1 == 0 || n.0 + 1 >= g.nx() || n.1 + 1 >= g.ny() {
        return false;
    }
    (n.0 - 1..=n.0 + 1).all(|i| (n.1 - 1..=n.1 + 1).all(|j| g.valid((i, j))))
}

fn sample(mesh: &SurfaceMesh, n: Node) -> Option<CurvatureSample> {
    if !neighborhood_valid(mesh, n) {
        return None;
    }
    let k = mesh.grid.index(n);
    let (fx, fy, nrm) = (mesh.fx[k], mesh.fy[k], mesh.normals[k]);
    let r = reach(mesh, n);
    let fxx = axis_derivative(mesh, &mesh.fx, n, true, r)?;
    let fyy = axis_derivative(mesh, &mesh.fy, n, false, r)?;
    let fxy = (axis_derivative(mesh, &mesh.fx, n, false, r)? + axis_derivative(mesh, &mesh.fy, n, true, r)?) / 2.0;
    let (e, f, g) = (fx.dot(&fx), fx.dot(&fy), fy.dot(&fy));
    let (l, m, nn) = (fxx.dot(&nrm), fxy.dot(&nrm), fyy.dot(&nrm));
    let det1 = e * g - f * f;
    if det1.abs() < f64::MIN_POSITIVE {
        return None;
    }
    let h = (l * g - 2.0 * m * f + nn * e) / (2.0 * det1);
    let kg = (l * nn - m * m) / det1;
    let disc = (h * h - kg).max(0.0).sqrt();
    let q = Complex64::new((l - nn) / 4.0, -m / 2.0);
    Some(CurvatureSample {
        h_num: h,
        k_plus: h + disc,
        k_minus: h - disc,
        q_re: q.re,
        q_im: q.im,
    })
}

/// Mean curvature, principal curvatures and the Hopf function `⟨N, f_zz⟩`
/// at every node whose 8-neighborhood is valid.
pub fn extract_curvature(mesh: &SurfaceMesh) -> CurvatureField {
    let g = &mesh.grid;
    let samples = (0..g.len()).map(|k| sample(mesh, g.node_of(k))).collect();
    CurvatureField {
        nx: g.nx(),
        ny: g.ny(),
        samples,
    }
}
