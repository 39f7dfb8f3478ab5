//! Holomorphic frame `Φ̂` on a grid.
//!
//! Writing `Φ̂ = Ê0·Ψ` and `Ψ = Σ_k Ψ_k λ^{−k}` with `Ψ(z0) = I`, the
//! equation `dΨ = Ψ·A λ⁻¹ dz` becomes the triangular system
//! `dΨ_k/dz = Ψ_{k−1}·A`, `Ψ_0 = I`. It is integrated by RK4 along
//! axis-aligned paths through the grid nodes.
//!
//! With `D = diag(t, 1)` and `s = ∫‖D A D⁻¹‖ |dz|` along the path,
//! `‖Ψ_k‖ ≤ max(t, 1/t)·s^k/k!`. The tail beyond order `N` is therefore
//! bounded by `max(t, 1/t)·e^s·s^{N+1}/(N+1)!`. The scale `t` balances the
//! two off-diagonal entries of `A` and is fixed per grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{potential_matrix, Normalized};
use crate::error::{Error, Result};
use crate::expr::{BranchState, Expr};
use crate::grid::{DomainGrid, Node};
use crate::loops::{hat_extend, id2, LoopMat, M2};

pub const DEFAULT_MAX_TRUNCATION: usize = 64;
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Nodes whose tail bound exceeds this are masked.
pub const DEFAULT_MASK_TAIL_TOL: f64 = 1e-9;
/// Potential entries above this magnitude are treated as poles.
pub const ENTRY_LIMIT: f64 = 1e6;
pub const DEFAULT_ODE_STEP: f64 = 2e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathOrder {
    RowFirst,
    ColumnFirst,
}

impl PathOrder {
    fn other(self) -> Self {
        match self {
            PathOrder::RowFirst => PathOrder::ColumnFirst,
            PathOrder::ColumnFirst => PathOrder::RowFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameOptions {
    /// Fixed truncation order; `None` picks it from the tail bound.
    pub truncation: Option<usize>,
    pub max_truncation: usize,
    pub tail_tol: f64,
    pub mask_tail_tol: f64,
    /// Largest RK4 step length.
    pub ode_step: f64,
    pub path: PathOrder,
    /// Use only `path`; nodes it cannot reach are masked.
    pub single_path: bool,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            truncation: None,
            max_truncation: DEFAULT_MAX_TRUNCATION,
            tail_tol: DEFAULT_TAIL_TOL,
            mask_tail_tol: DEFAULT_MASK_TAIL_TOL,
            ode_step: DEFAULT_ODE_STEP,
            path: PathOrder::RowFirst,
            single_path: false,
        }
    }
}

/// Integrated frames on a grid; masked nodes carry no frame.
#[derive(Debug, Clone)]
pub struct FrameGrid {
    pub grid: DomainGrid,
    pub base: Node,
    pub h: f64,
    pub truncation: usize,
    pub e0_hat: LoopMat,
    /// Balancing scale `t` of the tail bound.
    pub scale: f64,
    psi: Vec<Option<Vec<M2>>>,
    arc: Vec<f64>,
    a_val: Vec<Complex64>,
}

impl FrameGrid {
    /// `Ψ` at a node as a loop in powers `−N..=0`.
    pub fn psi(&self, n: Node) -> Option<LoopMat> {
        let k = self.grid.index(n);
        self.psi[k].as_ref().map(|c| psi_loop(c))
    }

    /// `Φ̂ = Ê0·Ψ`.
    pub fn phi_hat(&self, n: Node) -> Option<LoopMat> {
        self.psi(n).map(|p| self.e0_hat.mul_full(&p))
    }

    /// `a` at a node, continued along the integration path.
    pub fn a_at(&self, n: Node) -> Complex64 {
        self.a_val[self.grid.index(n)]
    }

    pub fn tail_bound(&self, n: Node) -> f64 {
        tail_bound(self.arc[self.grid.index(n)], self.truncation, self.scale)
    }

    pub fn max_tail_bound(&self) -> f64 {
        (0..self.grid.len())
            .filter(|k| self.grid.mask[*k])
            .map(|k| tail_bound(self.arc[k], self.truncation, self.scale))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn psi_loop(c: &[M2]) -> LoopMat {
    let mut terms = Vec::with_capacity(c.len() + 1);
    terms.push((0, id2()));
    terms.extend(c.iter().enumerate().map(|(k, m)| (-(k as i32) - 1, *m)));
    LoopMat::from_terms(&terms)
}

pub(crate) fn tail_bound(s: f64, n: usize, scale: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let m = (n + 1) as f64;
    let log = m * s.ln() - ln_factorial(n + 1) + s + scale.max(1.0 / scale).ln();
    log.exp()
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Everything carried along a path.
#[derive(Debug, Clone)]
pub(crate) struct PathState {
    pub psi: Vec<M2>,
    pub arc: f64,
    /// `a` at the last point reached, on the tracked branch.
    pub a_end: Complex64,
    br_a: BranchState,
    br_q: BranchState,
}

impl PathState {
    pub fn start(n: usize) -> Self {
        PathState {
            psi: vec![M2::zeros(); n],
            arc: 0.0,
            a_end: Complex64::new(f64::NAN, 0.0),
            br_a: BranchState::new(),
            br_q: BranchState::new(),
        }
    }
}

/// RK4 integrator for the coefficient recursion.
#[derive(Debug, Clone)]
pub(crate) struct Integrator<'a> {
    pub a: &'a Expr,
    pub q: &'a Expr,
    pub h: f64,
    pub n: usize,
    pub step: f64,
    pub scale: f64,
}

impl Integrator<'_> {
    fn amat(&self, z: Complex64, st: &mut PathState) -> Result<M2> {
        let a = self.a.eval_tracked(z, &mut st.br_a);
        let q = self.q.eval_tracked(z, &mut st.br_q);
        st.a_end = a;
        match potential_matrix(a, q, self.h) {
            Some(m) if m.iter().all(|v| v.norm() <= ENTRY_LIMIT) => Ok(m),
            _ => Err(Error::PathMasked { z }),
        }
    }

    fn op_norm(&self, m: &M2) -> f64 {
        // A is off-diagonal, so its spectral norm is the larger entry.
        (m[(0, 1)] * self.scale).norm().max((m[(1, 0)] / self.scale).norm())
    }

    /// Advances `st` from `za` to `zb` along the straight segment.
    pub fn segment(&self, st: &mut PathState, za: Complex64, zb: Complex64) -> Result<()> {
        let len = (zb - za).norm();
        if len == 0.0 {
            return Ok(());
        }
        let steps = (len / self.step).ceil().max(1.0) as usize;
        let delta = (zb - za) / steps as f64;
        let n = self.n;
        let mut a1 = self.amat(za, st)?;
        let (mut k1, mut k2, mut k3, mut k4) =
            (vec![M2::zeros(); n], vec![M2::zeros(); n], vec![M2::zeros(); n], vec![M2::zeros(); n]);
        for s in 0..steps {
            let z = za + delta * s as f64;
            let a2 = self.amat(z + delta * 0.5, st)?;
            let a3 = self.amat(z + delta, st)?;
            let (d1, d2, d3) = (a1 * delta, a2 * delta, a3 * delta);
            let half = Complex64::new(0.5, 0.0);
            for k in 0..n {
                let prev = if k == 0 { id2() } else { st.psi[k - 1] };
                k1[k] = prev * d1;
            }
            for k in 0..n {
                let prev = if k == 0 { id2() } else { st.psi[k - 1] + k1[k - 1] * half };
                k2[k] = prev * d2;
            }
            for k in 0..n {
                let prev = if k == 0 { id2() } else { st.psi[k - 1] + k2[k - 1] * half };
                k3[k] = prev * d2;
            }
            for k in 0..n {
                let prev = if k == 0 { id2() } else { st.psi[k - 1] + k3[k - 1] };
                k4[k] = prev * d3;
            }
            let sixth = Complex64::new(1.0 / 6.0, 0.0);
            for k in 0..n {
                st.psi[k] += (k1[k] + (k2[k] + k3[k]) * Complex64::new(2.0, 0.0) + k4[k]) * sixth;
            }
            st.arc += delta.norm() * (self.op_norm(&a1) + 4.0 * self.op_norm(&a2) + self.op_norm(&a3)) / 6.0;
            a1 = a3;
        }
        if st.psi.iter().any(|m| m.iter().any(|v| !(v.re.is_finite() && v.im.is_finite()))) {
            return Err(Error::NonFinite { z: zb });
        }
        Ok(())
    }

    /// Integrates along a polyline starting at the basepoint.
    pub fn polyline(&self, points: &[Complex64]) -> Result<PathState> {
        let mut st = PathState::start(self.n);
        // prime the branch trackers at the basepoint
        self.amat(points[0], &mut st)?;
        for w in points.windows(2) {
            self.segment(&mut st, w[0], w[1])?;
        }
        Ok(st)
    }

    /// Integrates from the basepoint to every reachable node of `grid`.
    fn sweep(&self, grid: &DomainGrid, base: Node, order: PathOrder) -> Vec<Option<PathState>> {
        let (nx, ny) = (grid.nx(), grid.ny());
        // "lines" run along the first leg of the path
        let row_first = order == PathOrder::RowFirst;
        let node = |line: usize, along: usize| if row_first { (along, line) } else { (line, along) };
        let (first_len, second_len) = if row_first { (nx, ny) } else { (ny, nx) };
        let (line0, along0) = if row_first { (base.1, base.0) } else { (base.0, base.1) };

        let mut init = PathState::start(self.n);
        let init_ok = self.amat(grid.point(base), &mut init).is_ok() && grid.valid(base);
        let mut first: Vec<Option<PathState>> = vec![None; first_len];
        if init_ok {
            first[along0] = Some(init);
            for dir in [1i64, -1] {
                let mut cur = along0 as i64;
                loop {
                    let next = cur + dir;
                    if next < 0 || next >= first_len as i64 {
                        break;
                    }
                    let (c, nn) = (node(line0, cur as usize), node(line0, next as usize));
                    if !grid.valid(nn) {
                        break;
                    }
                    let mut st = first[cur as usize].clone().unwrap();
                    if self.segment(&mut st, grid.point(c), grid.point(nn)).is_err() {
                        break;
                    }
                    first[next as usize] = Some(st);
                    cur = next;
                }
            }
        }

        // second leg: independent per position along the first line
        let columns: Vec<Vec<Option<PathState>>> = first
            .into_par_iter()
            .enumerate()
            .map(|(along, start)| {
                let mut col: Vec<Option<PathState>> = vec![None; second_len];
                let Some(start) = start else { return col };
                col[line0] = Some(start);
                for dir in [1i64, -1] {
                    let mut cur = line0 as i64;
                    loop {
                        let next = cur + dir;
                        if next < 0 || next >= second_len as i64 {
                            break;
                        }
                        let (c, nn) = (node(cur as usize, along), node(next as usize, along));
                        if !grid.valid(nn) {
                            break;
                        }
                        let mut st = col[cur as usize].clone().unwrap();
                        if self.segment(&mut st, grid.point(c), grid.point(nn)).is_err() {
                            break;
                        }
                        col[next as usize] = Some(st);
                        cur = next;
                    }
                }
                col
            })
            .collect();

        let mut out: Vec<Option<PathState>> = vec![None; grid.len()];
        for (along, col) in columns.into_iter().enumerate() {
            for (line, st) in col.into_iter().enumerate() {
                out[grid.index(node(line, along))] = st;
            }
        }
        out
    }
}

/// Balancing scale from the magnitudes of the potential entries at valid nodes.
fn balance_scale(upper: f64, lower: f64) -> f64 {
    if upper > 0.0 && lower > 0.0 {
        (lower / upper).sqrt().clamp(1e-2, 1e2)
    } else {
        1.0
    }
}

pub fn integrate_frame(
    data: &Normalized,
    h: f64,
    z0: Complex64,
    grid: &DomainGrid,
    opts: &FrameOptions,
) -> Result<FrameGrid> {
    let mut grid = grid.clone();
    let base = grid.require_node(z0)?;

    // poles and huge entries of the potential
    let (mut sum_u, mut sum_l) = (0.0, 0.0);
    for k in 0..grid.len() {
        let z = grid.point(grid.node_of(k));
        let m = potential_matrix(data.a.eval_raw(z), data.q.eval_raw(z), h);
        match m {
            Some(m) if m.iter().all(|v| v.norm() <= ENTRY_LIMIT) => {
                sum_u += m[(0, 1)].norm();
                sum_l += m[(1, 0)].norm();
            }
            _ => grid.mask[k] = false,
        }
    }
    grid.dilate();
    if !grid.valid(base) {
        return Err(Error::Precondition(format!("basepoint {z0} is masked")));
    }
    let scale = balance_scale(sum_u, sum_l);

    let mut integ = Integrator {
        a: &data.a,
        q: &data.q,
        h,
        n: 0,
        step: opts.ode_step,
        scale,
    };

    let n = match opts.truncation {
        Some(n) => n,
        None => {
            let arcs = integ.sweep(&grid, base, opts.path);
            let smax = arcs.iter().flatten().map(|s| s.arc).fold(0.0, f64::max);
            (1..=opts.max_truncation)
                .find(|&n| tail_bound(smax, n, scale) < opts.tail_tol)
                .unwrap_or(opts.max_truncation)
        }
    };
    integ.n = n;

    let mut states = integ.sweep(&grid, base, opts.path);
    if !opts.single_path {
        let missing = (0..grid.len()).any(|k| grid.mask[k] && states[k].is_none());
        if missing {
            let alt = integ.sweep(&grid, base, opts.path.other());
            for (k, st) in alt.into_iter().enumerate() {
                if states[k].is_none() {
                    states[k] = st;
                }
            }
        }
    }

    let mut psi = Vec::with_capacity(grid.len());
    let mut arc = Vec::with_capacity(grid.len());
    let mut a_val = Vec::with_capacity(grid.len());
    for (k, st) in states.into_iter().enumerate() {
        match st {
            Some(st) if grid.mask[k] && tail_bound(st.arc, n, scale) <= opts.mask_tail_tol => {
                arc.push(st.arc);
                a_val.push(st.a_end);
                psi.push(Some(st.psi));
            }
            _ => {
                grid.mask[k] = false;
                arc.push(0.0);
                a_val.push(Complex64::new(f64::NAN, 0.0));
                psi.push(None);
            }
        }
    }

    Ok(FrameGrid {
        grid,
        base,
        h,
        truncation: n,
        e0_hat: hat_extend(&data.e0)?,
        scale,
        psi,
        arc,
        a_val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::grid::GridSpec;
    use crate::loops::{fro, m2};

    const Z: Complex64 = Complex64::new(0.0, 0.0);

    fn data(a: &str, q: &str) -> Normalized {
        Normalized {
            a: parse(a).unwrap(),
            q: parse(q).unwrap(),
            e0: id2(),
        }
    }

    fn grid(n: usize) -> DomainGrid {
        DomainGrid::new(GridSpec::square(0.8, n)).unwrap()
    }

    #[test]
    fn minimal_case_has_two_coefficients() {
        // h = 0: Φ̂ = [[1, 0], [λ⁻¹g, 1]] with g = ∫ Q/a = z²
        let d = data("2", "4*z");
        let g = grid(9);
        let fr = integrate_frame(&d, 0.0, Z, &g, &FrameOptions::default()).unwrap();
        for k in 0..g.len() {
            let node = g.node_of(k);
            let z = g.point(node);
            let phi = fr.phi_hat(node).unwrap().trim(1e-13);
            let want = LoopMat::from_terms(&[(0, id2()), (-1, m2(Z, Z, z * z, Z))]);
            assert!(phi.dist(&want) < 1e-12, "{z}");
            assert_eq!((phi.lo(), phi.hi()), if z == Z { (0, 0) } else { (-1, 0) });
        }
    }

    #[test]
    fn plane_data_closed_form() {
        let (h, a0) = (1.5, Complex64::new(2.0, 0.0));
        let d = data("2", "0");
        let g = grid(9);
        let fr = integrate_frame(&d, h, Z, &g, &FrameOptions::default()).unwrap();
        for k in 0..g.len() {
            let node = g.node_of(k);
            let z = g.point(node);
            let want = LoopMat::from_terms(&[(0, id2()), (-1, m2(Z, a0 * z * (-h / 2.0), Z, Z))]);
            assert!(fr.phi_hat(node).unwrap().trim(1e-13).dist(&want) < 1e-12);
        }
        assert_eq!(fr.phi_hat(fr.base).unwrap(), LoopMat::identity());
    }

    #[test]
    fn basepoint_frame_is_extended_initial_condition() {
        let mut d = data("2+z", "1");
        d.e0 = crate::loops::su2(Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let fr = integrate_frame(&d, 1.0, Z, &grid(5), &FrameOptions::default()).unwrap();
        assert_eq!(fr.phi_hat(fr.base).unwrap(), hat_extend(&d.e0).unwrap());
    }

    #[test]
    fn flatness_and_path_independence() {
        let d = data("2+z^2", "1-z");
        let g = grid(17);
        let h = 0.8;
        let row = integrate_frame(&d, h, Z, &g, &FrameOptions::default()).unwrap();
        let col_opts = FrameOptions {
            path: PathOrder::ColumnFirst,
            truncation: Some(row.truncation),
            ..FrameOptions::default()
        };
        let col = integrate_frame(&d, h, Z, &g, &col_opts).unwrap();
        assert!(row.max_tail_bound() < 1e-12);
        for k in 0..g.len() {
            let node = g.node_of(k);
            let diff = row.psi(node).unwrap().dist(&col.psi(node).unwrap());
            assert!(diff < 1e-8, "{node:?}: {diff}");
        }

        // dΨ/dz = Ψ η by central differences through the sampler path
        let integ = Integrator {
            a: &d.a,
            q: &d.q,
            h,
            n: row.truncation,
            step: DEFAULT_ODE_STEP,
            scale: row.scale,
        };
        let eps = 1e-4;
        for z in [Complex64::new(0.3, -0.2), Complex64::new(-0.5, 0.4)] {
            let at = |w: Complex64| psi_loop(&integ.polyline(&[Z, Complex64::new(w.re, 0.0), w]).unwrap().psi);
            let dpsi = at(z + eps).sub(&at(z - eps)).scale(Complex64::new(0.5 / eps, 0.0));
            let a = d.a.eval(z).unwrap();
            let q = d.q.eval(z).unwrap();
            let eta = LoopMat::from_terms(&[(-1, potential_matrix(a, q, h).unwrap())]);
            let rhs = at(z).mul_full(&eta);
            // the product carries one extra power that the truncated Ψ lacks
            let lo = -(row.truncation as i32);
            for p in lo..=0 {
                assert!(fro(&(dpsi.coeff(p) - rhs.coeff(p))) < 1e-8);
            }
        }
    }

    #[test]
    fn pole_is_masked_not_fatal() {
        // a has a pole at z = 0.5
        let d = data("1/(z-0.5)", "1");
        let g = grid(17);
        let fr = integrate_frame(&d, 1.0, Z, &g, &FrameOptions::default()).unwrap();
        let pole = g.locate(Complex64::new(0.5, 0.0)).unwrap();
        assert!(!fr.grid.valid(pole));
        assert!(fr.grid.valid(fr.base));
        assert!(fr.grid.mask.iter().filter(|v| **v).count() > g.len() / 2);
    }

    #[test]
    fn tail_bound_is_monotone() {
        assert!(tail_bound(2.0, 30, 1.0) < tail_bound(2.0, 20, 1.0));
        assert!(tail_bound(2.0, 30, 1.0) < 1e-12);
        assert_eq!(tail_bound(0.0, 5, 1.0), 0.0);
    }
}
