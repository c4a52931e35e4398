//! Acceptance criteria at their pinned tolerances, one line per criterion.
//! Runs without the libtest harness so the lines always reach the output.
#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tbphase::dynamics::{integrate, lagrange_solution, orientation_lift, DriftReport, IntegratorConfig};
use tbphase::gauge::{connection_value, dynamic_phase, Latitude};
use tbphase::harness::{reconstruct_window, select_return, simulate, Generator, PhaseSpec, ReturnMode, ReturnSpec, Scenario, NEAR_COLLINEAR};
use tbphase::phase::claims::{alpha_along, alpha_along_trajectory, homothety_path, rotation_path};
use tbphase::phase::{boundary_beta, holonomy_check, omega_surface_quadrature, reconstruct, BilinearPatch, GaugePotential, PhaseReport, ReconstructOptions};
use tbphase::potential::PotentialSpec;
use tbphase::rigid::wrap_angle;
use tbphase::shape::{shape_of, submersion_speed_check};
use tbphase::triangle::{
    collinearity_measure, inertia_tensor, oriented_area, polar_moment, principal_normal, Configuration, Masses, OrientedConfiguration, PlaneNormal, State,
};
use tbphase::Vec3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(20_261_016);
    r.set_stream(stream);
    r
}

fn rv(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn masses(rng: &mut ChaCha8Rng) -> Masses {
    Masses([0; 3].map(|_| rng.random_range(0.2..5.0)))
}

fn triangle(rng: &mut ChaCha8Rng, m: &Masses) -> (Configuration, Vec3) {
    loop {
        let q = Configuration::centered([rv(rng), rv(rng), rv(rng)], m);
        if let Ok(PlaneNormal::Normal(n)) = principal_normal(&q, m) {
            if collinearity_measure(&q, m).unwrap() > 1e-4 {
                return (q, n);
            }
        }
    }
}

fn inertia_identity() -> Outcome {
    let mut rng = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = masses(&mut rng);
        let q = Configuration::centered([rv(&mut rng), rv(&mut rng), rv(&mut rng)], &m);
        let w = rv(&mut rng) * 3.0;
        let direct: f64 = (0..3).map(|a| m.0[a] * w.cross(&q.0[a]).norm_squared()).sum();
        let rel = (inertia_tensor(&q, &m).quadratic(&w) - direct).abs() / direct.abs().max(1e-300);
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-10, format!("1000 cases, worst relative {worst:.2e} (limit 1e-10)"))
}

fn shape_map_area() -> Outcome {
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = masses(&mut rng);
        let q = Configuration::centered([rv(&mut rng), rv(&mut rng), rv(&mut rng)], &m);
        let Ok(PlaneNormal::Normal(n)) = principal_normal(&q, &m) else { continue };
        let n = if rng.random_bool(0.5) { n } else { -n };
        let oq = OrientedConfiguration::new(q, n).unwrap();
        let [m1, m2, m3] = m.0;
        let formula = 4.0 * (m1 * m2 * m3 / m.total()).sqrt() * oriented_area(&oq) / polar_moment(&q, &m);
        worst = worst.max((shape_of(&oq, &m).unwrap().z1 - formula).abs());
    }
    outcome(worst <= 1e-10, format!("1000 cases, worst absolute {worst:.2e} (limit 1e-10)"))
}

fn submersion_isometry() -> Outcome {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    let flat = |v: Vec3| Vec3::new(v.x, v.y, 0.0);
    for _ in 0..200 {
        let m = masses(&mut rng);
        let q = Configuration::centered([flat(rv(&mut rng)), flat(rv(&mut rng)), flat(rv(&mut rng))], &m);
        let q = q.scaled(1.0 / polar_moment(&q, &m).sqrt());
        let mut v = State::centered(q.0, [flat(rv(&mut rng)), flat(rv(&mut rng)), flat(rv(&mut rng))], &m).velocities;
        // horizontal and tangent to I = 1: remove dilation and planar rotation
        let dil: f64 = (0..3).map(|a| m.0[a] * q.0[a].dot(&v[a])).sum();
        let jz: f64 = (0..3).map(|a| m.0[a] * q.0[a].cross(&v[a]).z).sum();
        for a in 0..3 {
            v[a] -= q.0[a] * dil + Vec3::z().cross(&q.0[a]) * jz;
        }
        let norm = (0..3).map(|a| m.0[a] * v[a].norm_squared()).sum::<f64>().sqrt();
        let (_, speed) = submersion_speed_check(&State::new(q, v.map(|x| x / norm)), &m).unwrap();
        worst = worst.max((speed - 1.0).abs());
    }
    outcome(worst <= 1e-8, format!("200 cases, worst |speed - 1| {worst:.2e} (limit 1e-8)"))
}

fn connection_rigidity() -> Outcome {
    let mut rng = rng(4);
    let (mut rigid, mut homothety): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let m = masses(&mut rng);
        let (q, _) = triangle(&mut rng, &m);
        let w = rv(&mut rng) * 2.0;
        let got = connection_value(&State::new(q, q.0.map(|p| w.cross(&p))), &m).unwrap();
        rigid = rigid.max((got - w).norm() / w.norm());

        let s = State::centered(q.0, [rv(&mut rng), rv(&mut rng), rv(&mut rng)], &m);
        let lambda = rng.random_range(0.1..10.0);
        let a = connection_value(&s, &m).unwrap();
        let b = connection_value(&State::new(q.scaled(lambda), s.velocities.map(|x| x * lambda)), &m).unwrap();
        // a dilating velocity field leaves the connection unchanged as well
        let c = connection_value(&State::new(q, s.velocities.iter().zip(q.0).map(|(v, p)| v + p * lambda).collect::<Vec<_>>().try_into().unwrap()), &m).unwrap();
        homothety = homothety.max((a - b).norm().max((a - c).norm()) / a.norm());
    }
    outcome(
        rigid <= 1e-10 && homothety <= 1e-12,
        format!("500 cases, rigid {rigid:.2e} (limit 1e-10), homothety {homothety:.2e} (limit 1e-12)"),
    )
}

fn latitude_holonomy() -> Outcome {
    let mut worst: f64 = 0.0;
    for m in [Masses([1.0; 3]), Masses([1.0, 2.0, 3.0])] {
        for z1 in [-0.8, -0.4, 0.0, 0.4, 0.8] {
            let rep = holonomy_check(&Latitude { z1 }, None, &m, 1e-11).unwrap();
            worst = worst.max(wrap_angle(rep.holonomy - PI * (z1 - 1.0)).abs());
        }
    }
    outcome(worst <= 1e-6, format!("z1 in {{-0.8, -0.4, 0, 0.4, 0.8}}, two mass sets, worst {worst:.2e} rad (limit 1e-6)"))
}

fn stokes() -> Outcome {
    let mut rng = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let j0 = rng.random_range(0.1..5.0);
        let c = [rng.random_range(-0.7..0.7), rng.random_range(-3.0..3.0), rng.random_range(-0.7..0.7), rng.random_range(-3.0..3.0)];
        let size = rng.random_range(0.01..0.2);
        let patch = BilinearPatch::jittered(c, size, &mut rng);
        let line = boundary_beta(&patch, j0, &GaugePotential::default()).unwrap();
        let area = omega_surface_quadrature(&patch, j0, 8).unwrap();
        worst = worst.max((line.value - area.value).abs() / j0);
    }
    outcome(worst <= 1e-8, format!("100 loops, worst |line - surface|/J0 {worst:.2e} (limit 1e-8)"))
}

fn line_claims() -> Outcome {
    let mut rng = rng(7);
    let mut worst = [0.0f64; 4];
    for _ in 0..20 {
        let m = masses(&mut rng);
        let (q, n) = triangle(&mut rng, &m);
        let j0 = (n + rv(&mut rng) * 0.7) * rng.random_range(0.3..3.0);
        let axis = n.cross(&j0);
        let angle = n.dot(&j0.normalize()).acos();
        let a = alpha_along(rotation_path(q, axis, angle), &m, &j0, &[0.0, 1.0]).unwrap().value;
        let b = alpha_along(rotation_path(q, -axis, angle), &m, &j0, &[0.0, 1.0]).unwrap().value;
        worst[0] = worst[0].max(a.abs()).max(b.abs());
        let dtheta = rng.random_range(-3.0..3.0);
        let c = alpha_along(rotation_path(q, j0, dtheta), &m, &j0, &[0.0, 1.0]).unwrap().value;
        worst[1] = worst[1].max((c - j0.norm() * dtheta).abs());
        let d = alpha_along(homothety_path(q, rng.random_range(0.2..5.0)), &m, &j0, &[0.0, 1.0]).unwrap().value;
        worst[2] = worst[2].max(d.abs());
    }
    for k in 0..3 {
        let m = Masses([1.0, 1.2 + 0.1 * k as f64, 0.9]);
        let s = State::centered(
            [Vec3::new(1.0, 0.1, 0.0), Vec3::new(-0.6, 0.7, 0.0), Vec3::new(-0.2, -0.9, 0.0)],
            [Vec3::new(0.1, 0.35, 0.2), Vec3::new(-0.3, -0.1, -0.15), Vec3::new(0.25, -0.2, 0.1)],
            &m,
        );
        let tr = integrate(&s, 3.0, &m, &PotentialSpec::newtonian(), &IntegratorConfig::default()).unwrap();
        let j0 = tr.initial_momentum();
        let a = alpha_along_trajectory(&tr, &j0).unwrap().value;
        worst[3] = worst[3].max((a - dynamic_phase(&tr, &j0).unwrap().value).abs());
    }
    outcome(
        worst.iter().all(|&w| w <= 1e-8),
        format!(
            "tilt arcs {:.1e}, arc about J0 {:.1e}, homothety {:.1e}, motion {:.1e} (limit 1e-8)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn rigid_calibration(drifts: &mut Vec<(String, DriftReport)>) -> Outcome {
    let m = Masses([1.0, 2.0, 3.0]);
    let (s, omega) = lagrange_solution(&m, 1.0);
    let (mut residual, mut geometric): (f64, f64) = (0.0, 0.0);
    for theta in [0.5, PI / 2.0, 3.0] {
        let tr = integrate(&s, theta / omega, &m, &PotentialSpec::newtonian(), &IntegratorConfig::default()).unwrap();
        drifts.push((format!("lagrange {theta:.3}"), tr.drift()));
        let j0 = tr.initial_momentum();
        let otr = orientation_lift(tr, &Vec3::z()).unwrap();
        let rep = reconstruct(&otr, theta / omega, &j0, &ReconstructOptions::default()).unwrap();
        residual = residual.max(rep.residual.abs());
        geometric = geometric.max(rep.geometric_phase.abs());
    }
    outcome(
        residual <= 1e-8 && geometric <= 1e-12,
        format!("theta in {{0.5, pi/2, 3}}, worst residual {residual:.2e} rad (limit 1e-8), |geometric| {geometric:.1e}"),
    )
}

fn random_scenario(rng: &mut ChaCha8Rng, generator: Generator) -> Scenario {
    Scenario {
        name: "acceptance".into(),
        masses: Masses([0; 3].map(|_| rng.random_range(0.5..2.0))),
        duration: 8.0,
        seed: Some(rng.random()),
        initial: None,
        generator: Some(generator),
        potential: PotentialSpec::newtonian(),
        integrator: IntegratorConfig::default(),
        returns: ReturnSpec { mode: ReturnMode::Crossing, ..Default::default() },
        phase: PhaseSpec::default(),
    }
}

/// Runs `scn`; `None` when the draw breaches the drift budget or has no
/// shape return.
fn run(scn: &Scenario, keep_near_collinear: bool) -> Option<(PhaseReport, DriftReport, f64)> {
    let otr = simulate(scn).ok()?;
    let drift = otr.trajectory.drift();
    if !drift.within_budget {
        return None;
    }
    let w = select_return(scn, &otr).ok()?;
    if !keep_near_collinear && w.min_collinearity < NEAR_COLLINEAR {
        return None;
    }
    let rep = reconstruct_window(&otr, &w, &scn.reconstruct_options()).ok()?;
    Some((rep, drift, w.tb - w.ta))
}

fn generic_planar(drifts: &mut Vec<(String, DriftReport)>) -> Outcome {
    let mut rng = rng(9);
    for draw in 0..20 {
        let scn = random_scenario(&mut rng, Generator::RandomPlanar { virial: 0.3 });
        let Some((rep, drift, span)) = run(&scn, true) else { continue };
        drifts.push((format!("planar draw {draw}"), drift));
        let mut sweep = Vec::new();
        for rtol in [1e-6, 1e-8, 1e-10] {
            let mut s = scn.clone();
            s.integrator.rtol = rtol;
            s.integrator.atol = rtol * 1e-2;
            let otr = simulate(&s).unwrap();
            let w = select_return(&s, &otr).unwrap();
            sweep.push(reconstruct_window(&otr, &w, &s.reconstruct_options()).unwrap().residual.abs());
        }
        let decreasing = sweep[0] > sweep[1] && sweep[1] > sweep[2];
        let ok = rep.residual.abs() <= 1e-5 && decreasing;
        return outcome(
            ok,
            format!(
                "draw {draw}, window {span:.3}, residual {:.2e} rad (limit 1e-5); sweep rtol 1e-6/1e-8/1e-10: {:.1e} / {:.1e} / {:.1e}",
                rep.residual, sweep[0], sweep[1], sweep[2]
            ),
        );
    }
    outcome(false, "no bound planar draw with a shape return".into())
}

fn spatial(drifts: &mut Vec<(String, DriftReport)>) -> Outcome {
    let mut rng = rng(10);
    for draw in 0..20 {
        let scn = random_scenario(&mut rng, Generator::RandomSpatial { virial: 0.3, tilt: 0.4 });
        let Some((rep, drift, span)) = run(&scn, false) else { continue };
        drifts.push((format!("spatial draw {draw}"), drift));
        let d = &rep.diagnostics;
        let tilted = d.start_arc.length > 1e-3 && d.end_arc.length > 1e-3;
        let (shape, fiber) = (d.beta_line.shape_term, d.beta_line.fiber_term);
        let ok = rep.residual.abs() <= 1e-4 && tilted && shape.abs() > 1e-6 && fiber.abs() > 1e-6;
        return outcome(
            ok,
            format!(
                "draw {draw}, window {span:.3}, residual {:.2e} rad (limit 1e-4); arcs {:.3}/{:.3}; shape term {shape:+.4}, fiber term {fiber:+.4}",
                rep.residual, d.start_arc.length, d.end_arc.length
            ),
        );
    }
    outcome(false, "no bound spatial draw with a shape return".into())
}

fn conservation(drifts: &[(String, DriftReport)]) -> Outcome {
    let worst_e = drifts.iter().map(|(_, d)| d.energy).fold(0.0, f64::max);
    let worst_j = drifts.iter().map(|(_, d)| d.momentum).fold(0.0, f64::max);
    outcome(
        !drifts.is_empty() && worst_e <= 1e-7 && worst_j <= 1e-7,
        format!("{} runs, worst energy {worst_e:.2e}, momentum {worst_j:.2e} (limit 1e-7)", drifts.len()),
    )
}

fn main() -> ExitCode {
    // cargo passes libtest flags; only a name filter of "acceptance" or none runs the suite
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return ExitCode::SUCCESS;
    }
    let mut drifts = Vec::new();
    let mut all = true;
    let mut report = |k: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        all &= o.pass;
        println!("criterion {k:>2} {} {name}: {} [{:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail, t.elapsed().as_secs_f64());
    };
    report(1, "inertia quadratic form", &mut inertia_identity);
    report(2, "shape map area formula", &mut shape_map_area);
    report(3, "submersion isometry", &mut submersion_isometry);
    report(4, "connection rigidity and homothety", &mut connection_rigidity);
    report(5, "latitude holonomy", &mut latitude_holonomy);
    report(6, "Stokes on small loops", &mut stokes);
    report(7, "line-integral claims", &mut line_claims);
    report(8, "rigid calibration", &mut || rigid_calibration(&mut drifts));
    report(9, "generic planar reconstruction", &mut || generic_planar(&mut drifts));
    report(10, "spatial reconstruction", &mut || spatial(&mut drifts));
    report(11, "conservation", &mut || conservation(&drifts));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
