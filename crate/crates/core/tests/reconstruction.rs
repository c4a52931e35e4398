use std::f64::consts::PI;

use tbphase::dynamics::{find_self_intersections, integrate, lagrange_solution, orientation_lift, IntegratorConfig, OrientedTrajectory};
use tbphase::gauge::eigenframe_track;
use tbphase::phase::{close_reduced_loop, geometric_phase_line, reconstruct, GaugePotential, PhaseReport, ReconstructOptions};
use tbphase::potential::PotentialSpec;
use tbphase::triangle::{Masses, State};
use tbphase::Vec3;

fn orbit(vz: f64, duration: f64) -> OrientedTrajectory {
    let m = Masses::new(1.0, 1.2, 0.9).unwrap();
    let s = State::centered(
        [Vec3::new(1.0, 0.1, 0.0), Vec3::new(-0.6, 0.7, 0.0), Vec3::new(-0.2, -0.9, 0.0)],
        [Vec3::new(0.1, 0.35, 0.2 * vz), Vec3::new(-0.3, -0.1, -0.15 * vz), Vec3::new(0.25, -0.2, 0.1 * vz)],
        &m,
    );
    let tr = integrate(&s, duration, &m, &PotentialSpec::newtonian(), &IntegratorConfig::default()).unwrap();
    orientation_lift(tr, &Vec3::z()).unwrap()
}

fn windows(otr: &OrientedTrajectory, count: usize, opts: &ReconstructOptions) -> Vec<PhaseReport> {
    let crossings = find_self_intersections(otr, 0.5, count).unwrap();
    assert!(!crossings.is_empty());
    crossings
        .iter()
        .map(|c| {
            let sub = otr.trajectory.window(c.ta, c.tb).unwrap();
            let j0 = sub.initial_momentum();
            let sub = orientation_lift(sub, &otr.normal_at(c.ta)).unwrap();
            reconstruct(&sub, c.tb - c.ta, &j0, opts).unwrap()
        })
        .collect()
}

#[test]
fn rigid_calibration() {
    let m = Masses::new(1.0, 2.0, 3.0).unwrap();
    let (s, omega) = lagrange_solution(&m, 1.0);
    for &theta in &[0.5, PI / 2.0, 3.0] {
        let tr = integrate(&s, theta / omega, &m, &PotentialSpec::newtonian(), &IntegratorConfig::default()).unwrap();
        let j0 = tr.initial_momentum();
        let otr = orientation_lift(tr, &Vec3::z()).unwrap();
        let rep = reconstruct(&otr, theta / omega, &j0, &ReconstructOptions::default()).unwrap();
        assert!(rep.residual.abs() < 1e-8, "{rep:?}");
        assert!((rep.delta_theta - theta).abs() < 1e-8);
        assert!(rep.geometric_phase.abs() < 1e-8);
    }
}

#[test]
fn planar_windows_close_with_shape_term_only() {
    let otr = orbit(0.0, 6.0);
    for rep in windows(&otr, 4, &ReconstructOptions::default()) {
        assert!(rep.pass && rep.residual.abs() < 1e-8, "{rep:?}");
        assert!(rep.residual.abs() <= rep.residual_error);
        let d = &rep.diagnostics;
        assert!(d.beta_line.fiber_term.abs() <= 1e-12 * rep.j0);
        assert!(d.start_arc.is_empty() && d.end_arc.is_empty());
        assert!(d.beta_line.shape_term.abs() > 1e-3);
    }
}

#[test]
fn spatial_windows_use_both_terms() {
    let otr = orbit(1.0, 7.0);
    for rep in windows(&otr, 4, &ReconstructOptions::default()) {
        assert!(rep.pass && rep.residual.abs() < 1e-8, "{rep:?}");
        assert!(rep.residual.abs() <= rep.residual_error);
        let d = &rep.diagnostics;
        assert!(d.beta_line.shape_term.abs() > 1e-3 && d.beta_line.fiber_term.abs() > 1e-3);
        assert!(d.start_arc.length > 1e-3 && d.end_arc.length > 1e-3);
    }
}

#[test]
fn flipped_potential_breaks_the_balance() {
    let otr = orbit(1.0, 7.0);
    let opts = ReconstructOptions { potential: GaugePotential::sign_flipped(), ..Default::default() };
    for rep in windows(&otr, 2, &opts) {
        assert!(!rep.pass, "{rep:?}");
    }
}

#[test]
fn frame_offset_leaves_line_integral_unchanged() {
    let otr = orbit(1.0, 7.0);
    let c = find_self_intersections(&otr, 0.5, 1).unwrap()[0];
    let sub = otr.trajectory.window(c.ta, c.tb).unwrap();
    let j0 = sub.initial_momentum();
    let sub = orientation_lift(sub, &otr.normal_at(c.ta)).unwrap();
    let gt = eigenframe_track(&sub, &j0).unwrap();
    let t_end = c.tb - c.ta;
    let base = geometric_phase_line(&close_reduced_loop(&gt, t_end, 1e-6).unwrap(), &GaugePotential::default()).unwrap();
    for gamma in [0.3, -1.1, 2.5] {
        let turned = gt.clone().with_frame_offset(gamma);
        let p0 = gt.reduced_at(0.5 * t_end).unwrap();
        let p1 = turned.reduced_at(0.5 * t_end).unwrap();
        let shift = (p0.theta2 - p1.theta2 - gamma).rem_euclid(2.0 * PI);
        assert!(shift.min(2.0 * PI - shift) < 1e-9);
        let line = geometric_phase_line(&close_reduced_loop(&turned, t_end, 1e-6).unwrap(), &GaugePotential::default()).unwrap();
        // the south-pole conversion fixes the value up to multiples of 4πJ0
        let period = 4.0 * PI * j0.norm();
        let diff = (line.value - base.value + 0.5 * period).rem_euclid(period) - 0.5 * period;
        assert!(diff.abs() <= 1e-10, "{} vs {}", line.value, base.value);
    }
}

#[test]
fn tighter_integration_shrinks_the_residual() {
    let m = Masses::new(1.0, 1.2, 0.9).unwrap();
    let s = State::centered(
        [Vec3::new(1.0, 0.1, 0.0), Vec3::new(-0.6, 0.7, 0.0), Vec3::new(-0.2, -0.9, 0.0)],
        [Vec3::new(0.1, 0.35, 0.2), Vec3::new(-0.3, -0.1, -0.15), Vec3::new(0.25, -0.2, 0.1)],
        &m,
    );
    let mut last = f64::INFINITY;
    for tol in [1e-5, 1e-7, 1e-9] {
        let tr = integrate(&s, 7.0, &m, &PotentialSpec::newtonian(), &IntegratorConfig::with_tolerance(tol)).unwrap();
        let otr = orientation_lift(tr, &Vec3::z()).unwrap();
        let rep = &windows(&otr, 1, &ReconstructOptions::default())[0];
        assert!(rep.residual.abs() < last, "tol {tol}: {} after {last}", rep.residual);
        last = rep.residual.abs();
    }
}
