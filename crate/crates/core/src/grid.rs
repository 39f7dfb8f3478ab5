//! Rectangular sampling of a domain in ℂ with a per-node validity mask.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{quad, Expr};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        GridSpec {
            x: [-half_width, half_width],
            y: [-half_width, half_width],
            nx: n,
            ny: n,
        }
    }
}

/// Node `(i, j)` has real part `x[0] + i·dx` and imaginary part `y[0] + j·dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid {
    pub spec: GridSpec,
    /// `true` where the node is usable.
    pub mask: Vec<bool>,
}

pub type Node = (usize, usize);

impl DomainGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec { x, y, nx, ny } = spec;
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("grid needs at least 2×2 nodes, got {nx}×{ny}")));
        }
        if !(x[0] < x[1] && y[0] < y[1]) || !x.iter().chain(&y).all(|v| v.is_finite()) {
            return Err(Error::Config(format!("degenerate grid ranges {x:?} × {y:?}")));
        }
        Ok(DomainGrid {
            spec,
            mask: vec![true; nx * ny],
        })
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    pub fn ny(&self) -> usize {
        self.spec.ny
    }

    pub fn len(&self) -> usize {
        self.spec.nx * self.spec.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.spec.x[1] - self.spec.x[0]) / (self.spec.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.spec.y[1] - self.spec.y[0]) / (self.spec.ny - 1) as f64
    }

    pub fn index(&self, (i, j): Node) -> usize {
        j * self.spec.nx + i
    }

    pub fn node_of(&self, k: usize) -> Node {
        (k % self.spec.nx, k / self.spec.nx)
    }

    pub fn point(&self, (i, j): Node) -> Complex64 {
        Complex64::new(
            self.spec.x[0] + i as f64 * self.dx(),
            self.spec.y[0] + j as f64 * self.dy(),
        )
    }

    pub fn valid(&self, n: Node) -> bool {
        self.mask[self.index(n)]
    }

    pub fn invalidate(&mut self, n: Node) {
        let k = self.index(n);
        self.mask[k] = false;
    }

    /// The node at `z`, if `z` coincides with one up to roundoff.
    pub fn locate(&self, z: Complex64) -> Option<Node> {
        let fi = (z.re - self.spec.x[0]) / self.dx();
        let fj = (z.im - self.spec.y[0]) / self.dy();
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 || i < 0.0 || j < 0.0 {
            return None;
        }
        let (i, j) = (i as usize, j as usize);
        (i < self.spec.nx && j < self.spec.ny).then_some((i, j))
    }

    pub fn require_node(&self, z: Complex64) -> Result<Node> {
        self.locate(z)
            .ok_or_else(|| Error::Config(format!("point {z} is not a grid node")))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let eps = 1e-12 * (1.0 + z.norm());
        z.re >= self.spec.x[0] - eps
            && z.re <= self.spec.x[1] + eps
            && z.im >= self.spec.y[0] - eps
            && z.im <= self.spec.y[1] + eps
    }

    /// Masks every node within one cell (8-neighbourhood) of an invalid node.
    pub fn dilate(&mut self) {
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        let old = self.mask.clone();
        for j in 0..ny {
            for i in 0..nx {
                if old[j * nx + i] {
                    continue;
                }
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a >= 0 && b >= 0 && (a as usize) < nx && (b as usize) < ny {
                            self.mask[b as usize * nx + a as usize] = false;
                        }
                    }
                }
            }
        }
    }

    /// Nodes from `from` to `to` along an axis-aligned L path, endpoints
    /// included. `row_first` moves in x before y.
    pub fn path(&self, from: Node, to: Node, row_first: bool) -> Vec<Node> {
        let mut out = vec![from];
        let (mut i, mut j) = from;
        let step = |a: usize, b: usize| if b > a { a + 1 } else { a - 1 };
        let walk_x = |out: &mut Vec<Node>, i: &mut usize, j: usize| {
            while *i != to.0 {
                *i = step(*i, to.0);
                out.push((*i, j));
            }
        };
        if row_first {
            walk_x(&mut out, &mut i, j);
            while j != to.1 {
                j = step(j, to.1);
                out.push((i, j));
            }
        } else {
            while j != to.1 {
                j = step(j, to.1);
                out.push((i, j));
            }
            walk_x(&mut out, &mut i, j);
        }
        out
    }

    /// Fails if any node of the path is masked.
    pub fn check_path(&self, path: &[Node]) -> Result<()> {
        match path.iter().find(|n| !self.valid(**n)) {
            Some(n) => Err(Error::PathMasked { z: self.point(*n) }),
            None => Ok(()),
        }
    }
}

/// `∫ e dz` from node `z0` to node `z1` along the row-first axis-aligned
/// path through grid nodes.
pub fn integrate_path(e: &Expr, z0: Complex64, z1: Complex64, grid: &DomainGrid) -> Result<Complex64> {
    let a = grid.require_node(z0)?;
    let b = grid.require_node(z1)?;
    let path = grid.path(a, b, true);
    grid.check_path(&path)?;
    let corners: Vec<Complex64> = corners(&path).into_iter().map(|n| grid.point(n)).collect();
    let v = quad::integrate_polyline(|t| e.eval_raw(t), &corners);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { z: z1 })
    }
}

/// Endpoints plus the turning node of an L path.
fn corners(path: &[Node]) -> Vec<Node> {
    let mut out = vec![path[0]];
    for w in path.windows(3) {
        let horiz_in = w[0].1 == w[1].1;
        let horiz_out = w[1].1 == w[2].1;
        if horiz_in != horiz_out {
            out.push(w[1]);
        }
    }
    if path.len() > 1 {
        out.push(*path.last().unwrap());
    }
    out
}
