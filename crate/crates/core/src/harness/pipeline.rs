//! Integrate → lift → choose a return → reconstruct → report.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::dynamics::{detect_shape_return, find_self_intersections, integrate, orientation_lift, DriftReport, OrientedTrajectory};
use crate::error::{Error, Result};
use crate::harness::scenario::{ReturnMode, Scenario};
use crate::phase::{reconstruct, PhaseReport, ReconstructOptions};
use crate::shape::shape_distance;
use crate::triangle::collinearity_measure;

/// Integrates the scenario and lifts it to oriented triangles.
pub fn simulate(scn: &Scenario) -> Result<OrientedTrajectory> {
    let (s, n) = scn.initial_state()?;
    let tr = integrate(&s, scn.duration, &scn.masses, &scn.potential, &scn.integrator)?;
    orientation_lift(tr, &n)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnWindow {
    pub mode: ReturnMode,
    pub ta: f64,
    pub tb: f64,
    /// Shape-sphere distance between the two ends.
    pub shape_gap: f64,
    /// Smallest collinearity measure over the samples inside the window.
    pub min_collinearity: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Timing {
    pub integrate_ms: f64,
    pub reconstruct_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config_hash: String,
    pub window: ReturnWindow,
    pub phase: PhaseReport,
    /// Conservation over the whole run.
    pub drift: DriftReport,
    /// Phase residual within tolerance and drift within budget.
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// The return window requested by the scenario's `[returns]` table.
pub fn select_return(scn: &Scenario, otr: &OrientedTrajectory) -> Result<ReturnWindow> {
    let spec = &scn.returns;
    let tr = &otr.trajectory;
    let (ta, tb) = match spec.mode {
        ReturnMode::End => {
            if tr.end_time() <= 0.0 {
                return Err(Error::NoReturn);
            }
            (0.0, tr.end_time())
        }
        ReturnMode::Start => {
            let times = detect_shape_return(otr, spec.tolerance)?;
            (0.0, *times.iter().filter(|&&t| t > 0.0).nth(spec.select).ok_or(Error::NoReturn)?)
        }
        ReturnMode::Crossing => {
            let found = find_self_intersections(otr, spec.min_separation, spec.select + 1)?;
            let c = found.get(spec.select).ok_or(Error::NoReturn)?;
            (c.ta, c.tb)
        }
    };
    let shape_gap = shape_distance(&otr.shape_at(ta)?, &otr.shape_at(tb)?);
    let mut min_collinearity = f64::INFINITY;
    for s in tr.samples().iter().filter(|s| s.t >= ta && s.t <= tb) {
        min_collinearity = min_collinearity.min(collinearity_measure(&s.state.config, &tr.masses)?);
    }
    Ok(ReturnWindow { mode: spec.mode, ta, tb, shape_gap, min_collinearity })
}

/// Reconstruction on `[ta, tb]`; a window that does not start at the first
/// sample is cut out and re-lifted with the normal at `ta`.
pub fn reconstruct_window(otr: &OrientedTrajectory, window: &ReturnWindow, opts: &ReconstructOptions) -> Result<PhaseReport> {
    let tr = &otr.trajectory;
    if window.ta == tr.start_time() {
        return reconstruct(otr, window.tb, &tr.initial_momentum(), opts);
    }
    let sub = tr.window(window.ta, window.tb)?;
    let j0 = sub.initial_momentum();
    let sub = orientation_lift(sub, &otr.normal_at(window.ta))?;
    reconstruct(&sub, window.tb - window.ta, &j0, opts)
}

/// Runs the reconstruction on an already integrated trajectory.
pub fn reconstruct_run(scn: &Scenario, otr: &OrientedTrajectory) -> Result<RunReport> {
    let window = select_return(scn, otr)?;
    let phase = reconstruct_window(otr, &window, &scn.reconstruct_options())?;
    let drift = otr.trajectory.drift();
    Ok(RunReport {
        tool: "tbphase".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        scenario: scn.name.clone(),
        config_hash: scn.config_hash(),
        window,
        pass: phase.pass && drift.within_budget,
        phase,
        drift,
        timing: None,
    })
}

/// [`simulate`] followed by [`reconstruct_run`]; `timing` adds wall-clock
/// times, which makes the report non-reproducible.
pub fn run_scenario(scn: &Scenario, timing: bool) -> Result<RunReport> {
    let start = Instant::now();
    let otr = simulate(scn)?;
    let integrated = start.elapsed();
    let mut rep = reconstruct_run(scn, &otr)?;
    if timing {
        let total = start.elapsed();
        rep.timing = Some(Timing { integrate_ms: integrated.as_secs_f64() * 1e3, reconstruct_ms: (total - integrated).as_secs_f64() * 1e3 });
    }
    Ok(rep)
}

/// Human-readable summary of a report.
pub fn summary(rep: &RunReport) -> String {
    let p = &rep.phase;
    let d = &p.diagnostics;
    let mut s = String::new();
    let name = if rep.scenario.is_empty() { "(unnamed)" } else { &rep.scenario };
    let _ = writeln!(s, "scenario {name}  config {}", &rep.config_hash[..12]);
    let w = &rep.window;
    let _ = writeln!(s, "return    [{:.6}, {:.6}] ({:?}), shape gap {:.2e}, min collinearity {:.2e}", w.ta, w.tb, w.mode, w.shape_gap, w.min_collinearity);
    let _ = writeln!(s, "J0        {:.9}", p.j0);
    let _ = writeln!(s, "measured  Δθ = {:+.12}", p.delta_theta);
    let _ = writeln!(s, "dynamic   {:+.12} / J0 (± {:.1e})", p.dynamic_phase / p.j0, p.dynamic_error / p.j0);
    let _ = writeln!(
        s,
        "geometric {:+.12} / J0 (± {:.1e}); shape {:+.6e}, fiber {:+.6e}, half-turn {}",
        p.geometric_phase / p.j0,
        p.geometric_error / p.j0,
        d.beta_line.shape_term,
        d.beta_line.fiber_term,
        if d.frame_flip { "yes" } else { "no" }
    );
    let _ = writeln!(s, "arcs      start z2 = {:.6}, end z2 = {:.6}", d.start_arc.z2, d.end_arc.z2);
    let _ = writeln!(s, "residual  {:+.3e} (estimated error {:.1e}, tolerance {:.1e})", p.residual, p.residual_error, p.tolerance);
    let dr = &rep.drift;
    let _ = writeln!(
        s,
        "drift     energy {:.2e}, momentum {:.2e} (budgets {:.0e}, {:.0e}){}",
        dr.energy,
        dr.momentum,
        dr.energy_budget,
        dr.momentum_budget,
        if dr.within_budget { "" } else { "  BUDGET BREACH" }
    );
    let _ = writeln!(s, "{}", if rep.pass { "PASS" } else { "FAIL" });
    s
}
