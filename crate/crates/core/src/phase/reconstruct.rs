//! Assembling `J0·Δθ = ∫ω_J0 dt + ∮β` for a trajectory segment with a shape return.

use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{orientation_lift, DriftReport, OrientedTrajectory};
use crate::error::{Error, Result};
use crate::gauge::connection::dynamic_phase;
use crate::gauge::frame::eigenframe_track;
use crate::phase::geometric::{close_reduced_loop, geometric_phase_line, ClosingArc, GaugePotential, GeometricLine};
use crate::phase::rotation::{measure_total_rotation, RotationDiagnostics};
use crate::rigid::wrap_angle;
use crate::Vec3;

/// Tolerances for [`reconstruct`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructOptions {
    /// PASS threshold on `|residual|` in radians.
    pub tolerance: f64,
    /// Largest accepted shape gap between the endpoints.
    pub return_tolerance: f64,
    /// Similarity / fixed-axis tolerance of the rotation measurement.
    pub similarity_tolerance: f64,
    pub potential: GaugePotential,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { tolerance: 1e-5, return_tolerance: 1e-6, similarity_tolerance: 1e-6, potential: GaugePotential::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub t_end: f64,
    /// `‖J0‖`.
    pub j0: f64,
    pub j0_vector: [f64; 3],
    /// Measured angle about `Ĵ0`, in (−π, π].
    pub delta_theta: f64,
    /// `∫ω_J0 dt` (units of J0·rad).
    pub dynamic_phase: f64,
    pub dynamic_error: f64,
    /// `∮β + πJ0·flip`, the geometric phase consistent with the measured angle.
    pub geometric_phase: f64,
    pub geometric_error: f64,
    /// `wrap(Δθ − (dynamic + geometric)/J0)`.
    pub residual: f64,
    /// Estimated numerical error of the residual.
    pub residual_error: f64,
    pub pass: bool,
    pub tolerance: f64,
    pub diagnostics: PhaseDiagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseDiagnostics {
    /// Unreduced `∮β` and its two terms.
    pub beta_line: GeometricLine,
    /// Whether the sign-chained eigenframe came back turned by a half turn.
    pub frame_flip: bool,
    pub start_arc: ClosingArc,
    pub end_arc: ClosingArc,
    pub shape_gap: f64,
    pub rotation: RotationDiagnostics,
    pub min_frame_continuity: f64,
    pub min_eigenvalue_gap: f64,
    pub drift: DriftReport,
}

/// Runs the reconstruction on `[start, t_end]` of `otr` with angular momentum `j0`.
pub fn reconstruct(otr: &OrientedTrajectory, t_end: f64, j0: &Vec3, opts: &ReconstructOptions) -> Result<PhaseReport> {
    let jn = j0.norm();
    if !(jn > 0.0) {
        return Err(Error::PreconditionViolated("reconstruction needs J0 ≠ 0; use the holonomy check for J0 = 0".into()));
    }
    let tr = &otr.trajectory;
    let t0 = tr.start_time();
    if !(t_end > t0 && t_end <= tr.end_time()) {
        return Err(Error::PreconditionViolated(format!("return time {t_end} outside the trajectory")));
    }
    let cut;
    let otr = if t_end < tr.end_time() || t0 != 0.0 {
        cut = orientation_lift(tr.window(t0, t_end)?, &otr.initial_normal())?;
        &cut
    } else {
        otr
    };
    let t_end = otr.trajectory.end_time();
    let drift = otr.trajectory.drift();
    let gt = eigenframe_track(otr, j0)?;
    let lp = close_reduced_loop(&gt, t_end, opts.return_tolerance)?;
    let dynamic = dynamic_phase(&otr.trajectory, j0)?;
    let beta = geometric_phase_line(&lp, &opts.potential)?;

    let oq0 = otr.oriented_at(0.0);
    let oq1 = otr.oriented_at(t_end);
    let m = otr.trajectory.masses;
    let rot = measure_total_rotation(&oq0, &oq1, &m, j0, opts.similarity_tolerance)?;
    let u_start = gt.frame_at(0.0)?.u1;
    let u_end = gt.frame_at(t_end)?.u1;
    let frame_flip = u_end.dot(&rot.rotation.apply(&u_start)) < 0.0;

    let geometric = beta.value + if frame_flip { PI * jn } else { 0.0 };
    let residual = wrap_angle(rot.delta_theta - (dynamic.value + geometric) / jn);
    // the fit error enters the measured angle at the square root of the residual
    // integration error scales with the accumulated phases
    let cfg = &otr.trajectory.config;
    let integration = cfg.rtol.max(drift.energy).max(drift.momentum) * (1.0 + (dynamic.value.abs() + beta.value.abs()) / jn);
    let residual_error = integration
        + (dynamic.error + beta.error) / jn
        + rot.diagnostics.fit_residual.sqrt()
        + rot.diagnostics.axis_deviation
        + lp.shape_gap;
    Ok(PhaseReport {
        t_end,
        j0: jn,
        j0_vector: [j0.x, j0.y, j0.z],
        delta_theta: rot.delta_theta,
        dynamic_phase: dynamic.value,
        dynamic_error: dynamic.error,
        geometric_phase: geometric,
        geometric_error: beta.error,
        residual,
        residual_error,
        pass: residual.abs() <= opts.tolerance,
        tolerance: opts.tolerance,
        diagnostics: PhaseDiagnostics {
            beta_line: beta,
            frame_flip,
            start_arc: lp.start_arc,
            end_arc: lp.end_arc,
            shape_gap: lp.shape_gap,
            rotation: rot.diagnostics,
            min_frame_continuity: gt.min_continuity(),
            min_eigenvalue_gap: gt.min_gap(),
            drift,
        },
    })
}
