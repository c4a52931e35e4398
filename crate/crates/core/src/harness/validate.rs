//! Randomized property suite behind `tbphase validate`.
//!
//! Each property draws its cases from its own ChaCha stream derived from the
//! seed, so results do not depend on the order properties run in. Properties
//! run on scoped threads and are collected in a fixed order.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{integrate, lagrange_solution, orientation_lift, IntegratorConfig};
use crate::error::Result;
use crate::gauge::{connection_value, Latitude};
use crate::harness::pipeline::{reconstruct_window, select_return, simulate};
use crate::harness::scenario::{Generator, PhaseSpec, ReturnMode, ReturnSpec, Scenario};
use crate::phase::{boundary_beta, holonomy_check, omega_surface_quadrature, reconstruct, BilinearPatch, GaugePotential, ReconstructOptions};
use crate::potential::PotentialSpec;
use crate::rigid::{log_about_axis, Rotation};
use crate::shape::{shape_of, submersion_speed_check};
use crate::triangle::{inertia_tensor, oriented_area, polar_moment, principal_normal, Configuration, Masses, OrientedConfiguration, PlaneNormal, State};
use crate::Vec3;

#[derive(Clone, Copy, Debug, Default)]
pub struct ValidationOptions {
    pub seed: u64,
    /// Cases per property; the end-to-end dynamical property runs one case per
    /// ten (rounded up).
    pub count: usize,
    /// Mutation canary: flips the sign of the gauge potential.
    pub beta_sign_flip: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub property: String,
    pub cases: usize,
    pub passed: usize,
    pub failed: usize,
    /// Largest residual over the cases; infinite when a case raised an error.
    pub worst: f64,
    pub tolerance: f64,
}

type Case = fn(&mut ChaCha8Rng, &ValidationOptions) -> Result<f64>;

struct Property {
    name: &'static str,
    tolerance: f64,
    expensive: bool,
    case: Case,
}

const PROPERTIES: [Property; 10] = [
    Property { name: "inertia-quadratic-form", tolerance: 1e-10, expensive: false, case: inertia_case },
    Property { name: "shape-area-formula", tolerance: 1e-10, expensive: false, case: area_case },
    Property { name: "submersion-isometry", tolerance: 1e-8, expensive: false, case: submersion_case },
    Property { name: "connection-rigid", tolerance: 1e-10, expensive: false, case: rigid_connection_case },
    Property { name: "connection-homothety", tolerance: 1e-10, expensive: false, case: homothety_case },
    Property { name: "rotation-log", tolerance: 1e-12, expensive: false, case: log_case },
    Property { name: "latitude-holonomy", tolerance: 1e-6, expensive: false, case: holonomy_case },
    Property { name: "stokes", tolerance: 1e-8, expensive: false, case: stokes_case },
    Property { name: "reconstruction-rigid", tolerance: 1e-8, expensive: false, case: rigid_reconstruction_case },
    Property { name: "reconstruction-spatial", tolerance: 1e-5, expensive: true, case: spatial_reconstruction_case },
];

pub fn run_validation(opts: &ValidationOptions) -> Vec<PropertyResult> {
    if opts.count == 0 {
        return Vec::new();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = PROPERTIES
            .iter()
            .enumerate()
            .map(|(k, p)| scope.spawn(move || run_property(k, p, opts)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("property thread panicked")).collect()
    })
}

fn run_property(index: usize, p: &Property, opts: &ValidationOptions) -> PropertyResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64 + 1);
    let cases = if p.expensive { opts.count.div_ceil(10) } else { opts.count };
    let mut res = PropertyResult { property: p.name.into(), cases, passed: 0, failed: 0, worst: 0.0, tolerance: p.tolerance };
    for _ in 0..cases {
        let r = (p.case)(&mut rng, opts).unwrap_or(f64::INFINITY);
        res.worst = res.worst.max(r);
        if r <= p.tolerance {
            res.passed += 1;
        } else {
            res.failed += 1;
        }
    }
    res
}

pub fn all_pass(results: &[PropertyResult]) -> bool {
    results.iter().all(|r| r.failed == 0)
}

pub fn format_table(results: &[PropertyResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:>6} {:>6} {:>6} {:>10} {:>10}", "property", "cases", "pass", "fail", "worst", "tolerance");
    for r in results {
        let _ = writeln!(s, "{:<24} {:>6} {:>6} {:>6} {:>10.2e} {:>10.0e}", r.property, r.cases, r.passed, r.failed, r.worst, r.tolerance);
    }
    s
}

fn potential(opts: &ValidationOptions) -> GaugePotential {
    if opts.beta_sign_flip {
        GaugePotential::sign_flipped()
    } else {
        GaugePotential::default()
    }
}

fn rv(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

fn masses(rng: &mut ChaCha8Rng) -> Masses {
    Masses([0; 3].map(|_| rng.random_range(0.2..5.0)))
}

/// A random triangle that is not close to collinear, with its normal.
fn triangle(rng: &mut ChaCha8Rng, m: &Masses) -> (Configuration, Vec3) {
    loop {
        let q = Configuration::centered([rv(rng), rv(rng), rv(rng)], m);
        if let Ok(PlaneNormal::Normal(n)) = principal_normal(&q, m) {
            if crate::triangle::collinearity_measure(&q, m).map(|c| c > 1e-4).unwrap_or(false) {
                return (q, n);
            }
        }
    }
}

fn inertia_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let q = Configuration::centered([rv(rng), rv(rng), rv(rng)], &m);
    let w = rv(rng) * 3.0;
    let direct: f64 = (0..3).map(|a| m.0[a] * w.cross(&q.0[a]).norm_squared()).sum();
    let scale = w.norm_squared() * polar_moment(&q, &m);
    Ok((inertia_tensor(&q, &m).quadratic(&w) - direct).abs() / scale)
}

fn area_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let (q, n) = triangle(rng, &m);
    let n = if rng.random_bool(0.5) { n } else { -n };
    let oq = OrientedConfiguration::new(q, n)?;
    let [m1, m2, m3] = m.0;
    let oracle = 4.0 * (m1 * m2 * m3 / m.total()).sqrt() * oriented_area(&oq) / polar_moment(&q, &m);
    Ok((shape_of(&oq, &m)?.z1 - oracle).abs())
}

fn submersion_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let flat = |v: Vec3| Vec3::new(v.x, v.y, 0.0);
    let q = Configuration::centered([flat(rv(rng)), flat(rv(rng)), flat(rv(rng))], &m);
    let q = q.scaled(1.0 / polar_moment(&q, &m).sqrt());
    let mut v = State::centered(q.0, [flat(rv(rng)), flat(rv(rng)), flat(rv(rng))], &m).velocities;
    // project out dilation and rotation (both have unit inertia at I = 1)
    let dil: f64 = (0..3).map(|a| m.0[a] * q.0[a].dot(&v[a])).sum();
    let jz: f64 = (0..3).map(|a| m.0[a] * q.0[a].cross(&v[a]).z).sum();
    for a in 0..3 {
        v[a] -= q.0[a] * dil + Vec3::z().cross(&q.0[a]) * jz;
    }
    let norm = (0..3).map(|a| m.0[a] * v[a].norm_squared()).sum::<f64>().sqrt();
    let (_, shape_speed) = submersion_speed_check(&State::new(q, v.map(|x| x / norm)), &m)?;
    Ok((shape_speed - 1.0).abs())
}

fn rigid_connection_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let (q, _) = triangle(rng, &m);
    let w = rv(rng) * 2.0;
    let got = connection_value(&State::new(q, q.0.map(|p| w.cross(&p))), &m)?;
    Ok((got - w).norm() / w.norm())
}

fn homothety_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let (q, _) = triangle(rng, &m);
    let v = [rv(rng), rv(rng), rv(rng)];
    let s = State::centered(q.0, v, &m);
    let lambda = rng.random_range(0.1..10.0);
    let a = connection_value(&s, &m)?;
    let b = connection_value(&State::new(q.scaled(lambda), s.velocities.map(|x| x * lambda)), &m)?;
    Ok((a - b).norm() / a.norm().max(f64::MIN_POSITIVE))
}

fn log_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let axis = rv(rng).normalize();
    let angle = rng.random_range(-PI + 1e-3..PI - 1e-3);
    Ok((log_about_axis(&Rotation::exp(&(axis * angle)), &axis)? - angle).abs())
}

fn holonomy_case(rng: &mut ChaCha8Rng, _: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let z1 = rng.random_range(-0.9..0.9);
    Ok(holonomy_check(&Latitude { z1 }, None, &m, 1e-11)?.residual.abs())
}

fn stokes_case(rng: &mut ChaCha8Rng, opts: &ValidationOptions) -> Result<f64> {
    let j0 = rng.random_range(0.1..5.0);
    let c = [rng.random_range(-0.7..0.7), rng.random_range(-3.0..3.0), rng.random_range(-0.7..0.7), rng.random_range(-3.0..3.0)];
    let size = rng.random_range(0.01..0.2);
    let patch = BilinearPatch::jittered(c, size, rng);
    let line = boundary_beta(&patch, j0, &potential(opts))?;
    let area = omega_surface_quadrature(&patch, j0, 8)?;
    Ok((line.value - area.value).abs() / j0)
}

fn rigid_reconstruction_case(rng: &mut ChaCha8Rng, opts: &ValidationOptions) -> Result<f64> {
    let m = masses(rng);
    let (s, omega) = lagrange_solution(&m, rng.random_range(0.5..2.0));
    let theta = rng.random_range(0.1..3.0);
    let tr = integrate(&s, theta / omega, &m, &PotentialSpec::newtonian(), &IntegratorConfig::default())?;
    let j0 = tr.initial_momentum();
    let otr = orientation_lift(tr, &Vec3::z())?;
    let opts = ReconstructOptions { potential: potential(opts), ..Default::default() };
    Ok(reconstruct(&otr, theta / omega, &j0, &opts)?.residual.abs())
}

/// Windows passing closer than this to a collinear triangle are redrawn: the
/// normal swings across the sphere there and the integrands spike.
pub const NEAR_COLLINEAR: f64 = 1e-4;

/// A random bound spatial orbit, redrawn until it conserves within budget,
/// its shape curve crosses itself and it keeps away from collinearity.
fn spatial_reconstruction_case(rng: &mut ChaCha8Rng, opts: &ValidationOptions) -> Result<f64> {
    let mut last = Err(crate::Error::NoReturn);
    for _ in 0..8 {
        let scn = Scenario {
            name: "validate".into(),
            masses: masses(rng),
            duration: 6.0,
            seed: Some(rng.random()),
            initial: None,
            generator: Some(Generator::RandomSpatial { virial: 0.3, tilt: 0.4 }),
            potential: PotentialSpec::newtonian(),
            integrator: IntegratorConfig::default(),
            returns: ReturnSpec { mode: ReturnMode::Crossing, ..Default::default() },
            phase: PhaseSpec::default(),
        };
        let otr = match simulate(&scn) {
            Ok(o) if o.trajectory.drift().within_budget => o,
            Ok(_) => continue,
            Err(e) => {
                last = Err(e);
                continue;
            }
        };
        let window = match select_return(&scn, &otr) {
            Ok(w) if w.min_collinearity >= NEAR_COLLINEAR => w,
            Ok(_) => continue,
            Err(e) => {
                last = Err(e);
                continue;
            }
        };
        let ro = ReconstructOptions { potential: potential(opts), ..scn.reconstruct_options() };
        return Ok(reconstruct_window(&otr, &window, &ro)?.residual.abs());
    }
    last
}
