//! Holonomy of closed planar shape loops under the zero-momentum lift.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::horizontal::{horizontal_lift, predicted_holonomy, section_configuration, ShapeCurve};
use crate::rigid::wrap_angle;
use crate::shape::ShapePoint;
#[cfg(test)]
use crate::Vec3;
use crate::triangle::{Configuration, Masses};

/// Allowed wrapped difference between lifted and predicted holonomy.
pub const HOLONOMY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolonomyReport {
    /// Rotation angle from the horizontal lift, in (−π, π].
    pub holonomy: f64,
    /// `½∮(z1 − 1)dθ1`, unreduced.
    pub predicted: f64,
    pub predicted_error: f64,
    /// `wrap(holonomy − predicted)`.
    pub residual: f64,
    pub max_momentum: f64,
    pub max_shape_error: f64,
    pub pass: bool,
}

/// Lifts the closed `curve` from `q_start` (or the standard planar section
/// point over the curve's start) and compares with the predicted angle.
pub fn holonomy_check<C: ShapeCurve + ?Sized>(curve: &C, q_start: Option<&Configuration>, m: &Masses, tol: f64) -> Result<HolonomyReport> {
    let a = ShapePoint::from_w(curve.point(0.0));
    let b = ShapePoint::from_w(curve.point(1.0));
    let distance = crate::shape::shape_distance(&a, &b);
    if distance > 1e-9 {
        return Err(Error::ShapeNotClosed { distance });
    }
    let q = match q_start {
        Some(q) => *q,
        None => section_configuration(&curve.point(0.0), m),
    };
    let path = horizontal_lift(curve, &q, m, tol)?;
    let pred = predicted_holonomy(curve);
    let holonomy = path.holonomy_angle();
    let residual = wrap_angle(holonomy - pred.value);
    Ok(HolonomyReport {
        holonomy,
        predicted: pred.value,
        predicted_error: pred.error,
        residual,
        max_momentum: path.max_momentum,
        max_shape_error: path.max_shape_error,
        pass: residual.abs() <= HOLONOMY_TOL,
    })
}
