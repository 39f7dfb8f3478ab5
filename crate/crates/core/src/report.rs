//! Run reports: one JSON document per command, schema `cmcdeform-report/1`.

use num_complex::Complex64;
use serde::Serialize;

use crate::convert::OrderReport;
use crate::expr::Expr;
use crate::frames::{extract_curvature, CurvatureField, MeshMeta, SurfaceMesh, Vec3};
use crate::grid::{GridSpec, Node};
use crate::symmetry::MeshSymmetryReport;

pub const SCHEMA: &str = "cmcdeform-report/1";

/// Curvature is summarized over nodes at least this many valid nodes away
/// from the mask boundary, where the eighth-order stencils apply.
pub const INTERIOR_MARGIN: usize = 4;

/// Nodes whose `(2r+1)²` neighborhood is valid.
pub fn interior(mesh: &SurfaceMesh, n: Node, r: usize) -> bool {
    let g = &mesh.grid;
    if n.0 < r || n.1 < r || n.0 + r >= g.nx() || n.1 + r >= g.ny() {
        return false;
    }
    (n.0 - r..=n.0 + r).all(|i| (n.1 - r..=n.1 + r).all(|j| g.valid((i, j))))
}

/// `max(|⟨f_x, f_y⟩|, |‖f_x‖² − ‖f_y‖²|) / ‖f_x‖²`.
pub fn conformality_residual(fx: &Vec3, fy: &Vec3) -> f64 {
    let e = fx.norm_squared();
    fx.dot(fy).abs().max((e - fy.norm_squared()).abs()) / e
}

/// Largest relative gap between the frame tangents and centered differences
/// of the positions. Catches frames that disagree with their own surface.
pub fn tangent_mismatch(mesh: &SurfaceMesh) -> f64 {
    let g = &mesh.grid;
    let mut worst: f64 = 0.0;
    for k in mesh.valid_indices() {
        let n = g.node_of(k);
        if !interior(mesh, n, 2) {
            continue;
        }
        let p = |i: usize, j: usize| mesh.positions[g.index((i, j))];
        let (i, j) = n;
        let dx = (p(i - 2, j) - p(i + 2, j) + (p(i + 1, j) - p(i - 1, j)) * 8.0) / (12.0 * g.dx());
        let dy = (p(i, j - 2) - p(i, j + 2) + (p(i, j + 1) - p(i, j - 1)) * 8.0) / (12.0 * g.dy());
        let scale = mesh.fx[k].norm();
        worst = worst.max((dx - mesh.fx[k]).norm() / scale).max((dy - mesh.fy[k]).norm() / scale);
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSummary {
    /// Nodes [`INTERIOR_MARGIN`] or more valid nodes from the boundary.
    pub interior_nodes: usize,
    pub mean_h: f64,
    pub max_abs_h_error: f64,
    /// `max |H_num − h| / |h|`, absent for minimal surfaces.
    pub max_rel_h_error: Option<f64>,
    pub max_conformality: f64,
    pub max_tangent_mismatch: f64,
    /// `max |Q_num − Q| / |Q|` over interior nodes with `|Q| ≥ 0.1·max|Q|`.
    pub max_rel_hopf_error: Option<f64>,
}

pub fn summarize_curvature(mesh: &SurfaceMesh, field: &CurvatureField, hopf: Option<&Expr>) -> CurvatureSummary {
    let h = mesh.meta.h;
    let g = &mesh.grid;
    let nodes: Vec<_> = field.iter().filter(|(n, _)| interior(mesh, *n, INTERIOR_MARGIN)).collect();
    let count = nodes.len();
    let mean_h = nodes.iter().map(|(_, s)| s.h_num).sum::<f64>() / count.max(1) as f64;
    let max_abs = nodes.iter().map(|(_, s)| (s.h_num - h).abs()).fold(0.0, f64::max);
    let conf = nodes
        .iter()
        .map(|(n, _)| {
            let k = g.index(*n);
            conformality_residual(&mesh.fx[k], &mesh.fy[k])
        })
        .fold(0.0, f64::max);
    let hopf_err = hopf.and_then(|q| {
        let pairs: Vec<(Complex64, Complex64)> = nodes
            .iter()
            .filter_map(|(n, s)| q.eval(g.point(*n)).ok().map(|v| (v, s.q_num())))
            .collect();
        let peak = pairs.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
        (peak > 0.0).then(|| {
            pairs
                .iter()
                .filter(|(v, _)| v.norm() >= 0.1 * peak)
                .map(|(v, w)| (w - v).norm() / v.norm())
                .fold(0.0, f64::max)
        })
    });
    CurvatureSummary {
        interior_nodes: count,
        mean_h,
        max_abs_h_error: max_abs,
        max_rel_h_error: (h != 0.0).then(|| max_abs / h.abs()),
        max_conformality: conf,
        max_tangent_mismatch: tangent_mismatch(mesh),
        max_rel_hopf_error: hopf_err,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereReport {
    pub center: [f64; 3],
    pub radius: f64,
    pub max_deviation: f64,
}

/// Distance spread about `f(z0) + N(z0)/h`, the center of curvature at the
/// basepoint. Meaningful only when the data describe a sphere.
pub fn sphere_report(mesh: &SurfaceMesh) -> Option<SphereReport> {
    let h = mesh.meta.h;
    let z0 = Complex64::new(mesh.meta.basepoint.re, mesh.meta.basepoint.im);
    let k0 = mesh.grid.index(mesh.grid.locate(z0)?);
    if h == 0.0 || !mesh.grid.mask[k0] {
        return None;
    }
    let c = mesh.positions[k0] + mesh.normals[k0] / h;
    let radius = 1.0 / h.abs();
    let dev = mesh.valid_indices().map(|k| ((mesh.positions[k] - c).norm() - radius).abs()).fold(0.0, f64::max);
    Some(SphereReport {
        center: [c.x, c.y, c.z],
        radius,
        max_deviation: dev,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryEntry {
    pub kind: String,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(flatten)]
    pub report: MeshSymmetryReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshReport {
    pub h: f64,
    pub grid: GridSpec,
    pub valid_nodes: usize,
    pub meta: Option<MeshMeta>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature: Option<CurvatureSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sphere: Option<SphereReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<SymmetryEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl MeshReport {
    pub fn from_mesh(mesh: &SurfaceMesh, hopf: Option<&Expr>) -> Self {
        let field = extract_curvature(mesh);
        MeshReport {
            h: mesh.meta.h,
            grid: mesh.grid.spec,
            valid_nodes: mesh.valid_indices().count(),
            meta: Some(mesh.meta.clone()),
            output: None,
            curvature: Some(summarize_curvature(mesh, &field, hopf)),
            sphere: None,
            symmetry: None,
            error: None,
        }
    }

    pub fn failed(h: f64, grid: GridSpec, err: &crate::Error) -> Self {
        MeshReport {
            h,
            grid,
            valid_nodes: 0,
            meta: None,
            output: None,
            curvature: None,
            sphere: None,
            symmetry: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DataCheck {
    pub kind: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub meshes: Vec<MeshReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orders: Option<OrderReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub data_checks: Vec<DataCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<serde_json::Value>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            schema: SCHEMA,
            command: command.to_string(),
            ..Default::default()
        }
    }

    /// Runs with any failed mesh, failed check or invalid order point.
    pub fn failed(&self) -> bool {
        self.meshes.iter().any(|m| m.error.is_some() || m.symmetry.as_ref().is_some_and(|s| !s.pass))
            || self.data_checks.iter().any(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report types serialize infallibly")
    }
}
