//! Line integrals of `α_J0` along the pieces of the closed path in
//! configuration space: rotation arcs, homotheties and the motion itself.

use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::gauge::connection::{alpha_j0, panel_breaks};
use crate::quadrature::{integrate_panels, Estimate};
use crate::rigid::Rotation;
use crate::triangle::{Configuration, Masses, State};
use crate::Vec3;

/// `∫₀¹ α_J0(path(s)) ds` where `path` returns the state (position and
/// `d/ds` velocity) at parameter `s`.
pub fn alpha_along<F: Fn(f64) -> State>(path: F, m: &Masses, j0: &Vec3, breaks: &[f64]) -> Result<Estimate> {
    let mut failure = None;
    let mut f = |s: f64| match alpha_j0(&path(s), m, j0) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let est = integrate_panels(&mut f, breaks, 1e-14 * (1.0 + j0.norm_squared()), 1e-12);
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// `s ↦ exp(s·angle·axis)·q` on `[0, 1]`.
pub fn rotation_path(q: Configuration, axis: Vec3, angle: f64) -> impl Fn(f64) -> State {
    let generator = axis.normalize() * angle;
    move |s| {
        let qs = q.rotated(&Rotation::exp(&(generator * s)));
        let v = qs.0.map(|p| generator.cross(&p));
        State::new(qs, v)
    }
}

/// `s ↦ (1 + s(λ − 1))·q` on `[0, 1]`.
pub fn homothety_path(q: Configuration, lambda: f64) -> impl Fn(f64) -> State {
    move |s| State::new(q.scaled(1.0 + s * (lambda - 1.0)), q.0.map(|p| p * (lambda - 1.0)))
}

/// `∫ α_J0(q(t), q̇(t)) dt` along the whole trajectory.
pub fn alpha_along_trajectory(tr: &Trajectory, j0: &Vec3) -> Result<Estimate> {
    let breaks = panel_breaks(tr, tr.start_time(), tr.end_time());
    alpha_along(|t| tr.state_at(t), &tr.masses, j0, &breaks)
}
