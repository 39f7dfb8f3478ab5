//! Zero/pole order of an expression at a point.
//!
//! The circle mean of `log|e|` at radius r equals `log|c| + m·log r` when
//! `e = c(z−z0)^m·(1 + O(z−z0))` has no other zeros or poles inside the
//! circle, so two radii give `m` from a log-ratio. The winding number of `e`
//! around the smaller circle is an independent integer estimate; the two
//! must agree.

use num_complex::Complex64;
use serde::Serialize;

use super::Expr;
use crate::error::{Error, Result};

pub const DEFAULT_ORDER_RADIUS: f64 = 1e-3;
const SAMPLES: usize = 64;
const MAX_RESIDUAL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub order: i32,
    /// Unrounded log-ratio exponent.
    pub estimate: f64,
    /// Distance of `estimate` from `order`.
    pub residual: f64,
}

pub fn order_at(e: &Expr, z0: Complex64) -> Result<OrderEstimate> {
    order_at_with_radius(e, z0, DEFAULT_ORDER_RADIUS)
}

pub fn order_at_with_radius(e: &Expr, z0: Complex64, r: f64) -> Result<OrderEstimate> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Precondition(format!("order radius must be positive, got {r}")));
    }
    let outer = circle(e, z0, r)?;
    let inner = circle(e, z0, r / 2.0)?;
    if outer.iter().chain(&inner).all(|v| v.norm() == 0.0) {
        return Err(Error::IdenticallyZero { z0 });
    }
    let mean_log = |vals: &[Complex64]| vals.iter().map(|v| v.norm().ln()).sum::<f64>() / vals.len() as f64;
    let estimate = (mean_log(&outer) - mean_log(&inner)) / std::f64::consts::LN_2;
    let order = estimate.round();
    let residual = (estimate - order).abs();
    let winding = winding_number(&inner);
    if !residual.is_finite() || residual > MAX_RESIDUAL || winding != Some(order as i32) {
        return Err(Error::IndeterminateOrder {
            z0,
            estimate,
            residual,
        });
    }
    Ok(OrderEstimate {
        order: order as i32,
        estimate,
        residual,
    })
}

fn circle(e: &Expr, z0: Complex64, r: f64) -> Result<Vec<Complex64>> {
    (0..SAMPLES)
        .map(|k| {
            // half-step offset keeps samples off the real axis through z0,
            // where branch cuts of the principal sqrt tend to sit
            let t = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / SAMPLES as f64;
            let z = z0 + Complex64::from_polar(r, t);
            e.eval(z)
        })
        .collect()
}

fn winding_number(vals: &[Complex64]) -> Option<i32> {
    let mut total = 0.0;
    for k in 0..vals.len() {
        let a = vals[k];
        let b = vals[(k + 1) % vals.len()];
        if a.norm() == 0.0 || b.norm() == 0.0 {
            return None;
        }
        total += (b / a).arg();
    }
    let turns = total / (2.0 * std::f64::consts::PI);
    if (turns - turns.round()).abs() > 1e-6 {
        return None;
    }
    Some(turns.round() as i32)
}
