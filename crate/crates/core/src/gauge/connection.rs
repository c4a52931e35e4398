//! The mechanical connection `A = 𝕀⁻¹J` and the scalar forms built from it.

use nalgebra::Matrix3;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, Estimate};
use crate::triangle::{angular_momentum, inertia_tensor, polar_moment, Configuration, Masses, State};
use crate::Vec3;

/// Eigenvalues of 𝕀 below `floor·I` are treated as zero by the pseudo-inverse.
pub const PSEUDO_INVERSE_FLOOR: f64 = 1e-12;

/// Below `det 𝕀 / I³` of this size the inverse is taken through the eigen
/// decomposition; above it the closed-form inverse is smooth in `q`.
const DIRECT_INVERSE_FLOOR: f64 = 1e-8;

/// Pseudo-inverse of 𝕀 together with the null axis, if there is one.
fn inertia_pinv(q: &Configuration, m: &Masses) -> Result<(Matrix3<f64>, Option<Vec3>)> {
    let i = polar_moment(q, m);
    if !(i > 0.0) {
        return Err(Error::TripleCollision);
    }
    let tensor = inertia_tensor(q, m);
    if tensor.0.determinant() > DIRECT_INVERSE_FLOOR * i * i * i {
        if let Some(inv) = tensor.0.try_inverse() {
            return Ok((inv, None));
        }
    }
    let (vals, vecs) = tensor.eigen();
    let mut pinv = Matrix3::zeros();
    let mut null = None;
    for k in 0..3 {
        let u = vecs.column(k).into_owned();
        if vals[k] > PSEUDO_INVERSE_FLOOR * i {
            pinv += u * u.transpose() / vals[k];
        } else {
            null = Some(u);
        }
    }
    Ok((pinv, null))
}

/// Angular velocity `𝕀⁻¹J` of a state; recovers `ω` for rigid motions `v = ω×q`.
pub fn connection_value(s: &State, m: &Masses) -> Result<Vec3> {
    let (pinv, _) = inertia_pinv(&s.config, m)?;
    Ok(pinv * angular_momentum(s, m))
}

/// `J0·A`.
pub fn alpha_j0(s: &State, m: &Masses, j0: &Vec3) -> Result<f64> {
    Ok(j0.dot(&connection_value(s, m)?))
}

/// `J0ᵀ𝕀⁻¹J0`, the instantaneous angular speed about `J0` scaled by `J0`.
pub fn omega_j0(q: &Configuration, m: &Masses, j0: &Vec3) -> Result<f64> {
    let (pinv, null) = inertia_pinv(q, m)?;
    if let Some(u) = null {
        if u.dot(j0).abs() > 1e-8 * j0.norm() {
            return Err(Error::UndefinedAtCollinear);
        }
    }
    Ok(j0.dot(&(pinv * j0)).max(0.0))
}

/// `∫ ω_J0(q(t)) dt` over `[ta, tb]`, panelled at the integrator steps.
pub fn dynamic_phase_between(tr: &Trajectory, j0: &Vec3, ta: f64, tb: f64) -> Result<Estimate> {
    check_momentum(tr, j0)?;
    if tb <= ta {
        return Ok(Estimate::default());
    }
    let breaks = panel_breaks(tr, ta, tb);
    let m = tr.masses;
    let mut failure = None;
    let mut f = |t: f64| match omega_j0(&tr.config_at(t), &m, j0) {
        Ok(v) => v,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let est = integrate_panels(&mut f, &breaks, 1e-13 * j0.norm_squared().max(1e-300), 1e-12);
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// Dynamic phase over the whole trajectory.
pub fn dynamic_phase(tr: &Trajectory, j0: &Vec3) -> Result<Estimate> {
    dynamic_phase_between(tr, j0, tr.start_time(), tr.end_time())
}

/// Sample times inside `(ta, tb)` bracketed by the end points.
pub(crate) fn panel_breaks(tr: &Trajectory, ta: f64, tb: f64) -> Vec<f64> {
    let mut breaks = vec![ta];
    breaks.extend(tr.samples().iter().map(|s| s.t).filter(|&t| t > ta && t < tb));
    breaks.push(tb);
    breaks
}

fn check_momentum(tr: &Trajectory, j0: &Vec3) -> Result<()> {
    let j = tr.initial_momentum();
    let budget = tr.config.momentum_budget * (1.0 + j0.norm());
    if (j - j0).norm() > budget.max(1e-12 * (1.0 + j0.norm())) {
        return Err(Error::PreconditionViolated(format!(
            "trajectory angular momentum {:?} differs from J0 {:?}",
            j.as_slice(),
            j0.as_slice()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, lagrange_solution, IntegratorConfig};
    use crate::potential::PotentialSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rv(rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn random_masses(rng: &mut ChaCha8Rng) -> Masses {
        Masses::new(rng.random_range(0.2..3.0), rng.random_range(0.2..3.0), rng.random_range(0.2..3.0)).unwrap()
    }

    #[test]
    fn rigid_velocity_recovers_omega() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let m = random_masses(&mut rng);
            let q = Configuration::centered([rv(&mut rng), rv(&mut rng), rv(&mut rng)], &m);
            let w = rv(&mut rng);
            let s = State::new(q, q.0.map(|p| w.cross(&p)));
            let a = connection_value(&s, &m).unwrap();
            assert!((a - w).norm() <= 1e-10 * w.norm());
        }
    }

    #[test]
    fn zero_momentum_gives_zero() {
        let m = Masses::equal(1.0);
        let q = Configuration::centered([Vec3::x(), Vec3::y(), Vec3::zeros()], &m);
        // pure dilation has J = 0
        let s = State::new(q, q.0.map(|p| p * 0.3));
        assert_eq!(connection_value(&s, &m).unwrap().norm(), 0.0);
    }

    #[test]
    fn homothety_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let m = random_masses(&mut rng);
            let s = State::centered([rv(&mut rng), rv(&mut rng), rv(&mut rng)], [rv(&mut rng), rv(&mut rng), rv(&mut rng)], &m);
            let j0 = rv(&mut rng);
            let lambda = rng.random_range(0.1..10.0);
            let scaled = State::new(s.config.scaled(lambda), s.velocities.map(|v| v * lambda));
            let (a, b) = (alpha_j0(&s, &m, &j0).unwrap(), alpha_j0(&scaled, &m, &j0).unwrap());
            assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()), "{a} {b}");
            let dil = State::new(s.config, s.config.0.map(|p| p * 0.7));
            assert!(alpha_j0(&dil, &m, &j0).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn collinear_limit_is_continuous() {
        // approach a collinear configuration along a family with J ⟂ line axis
        // (velocities in the plane spanned by the line and e2)
        let m = Masses::new(1.0, 2.0, 1.5).unwrap();
        let at = |eps: f64| {
            let q = Configuration::centered([Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.2, eps, 0.0), Vec3::new(1.3, 0.0, 0.0)], &m);
            let v = [Vec3::new(0.0, 0.5, 0.0), Vec3::new(0.1, -0.2, 0.0), Vec3::new(0.3, 0.4, 0.0)];
            let s = State::centered(q.0, v, &m);
            connection_value(&s, &m).unwrap()
        };
        let exact = at(0.0);
        assert!(exact.iter().all(|x| x.is_finite()));
        assert!(exact.norm() > 0.0);
        // Richardson extrapolation from nearby states
        let (a1, a2) = (at(1e-3), at(5e-4));
        let extrap = a2 * 2.0 - a1;
        assert!((extrap - exact).norm() < 1e-6 * exact.norm(), "{extrap:?} vs {exact:?}");
    }

    #[test]
    fn omega_examples() {
        let m = Masses::equal(1.0);
        // planar scalene triangle, J0 along its normal
        let q = Configuration::centered([Vec3::new(1.0, 0.0, 0.0), Vec3::new(-0.3, 0.8, 0.0), Vec3::new(-0.5, -0.6, 0.0)], &m);
        let i = polar_moment(&q, &m);
        let j0 = 2.5;
        assert!((omega_j0(&q, &m, &(Vec3::z() * j0)).unwrap() - j0 * j0 / i).abs() < 1e-12);
        assert!((omega_j0(&q.scaled(3.0), &m, &(Vec3::z() * j0)).unwrap() - j0 * j0 / (9.0 * i)).abs() < 1e-12);
        // equilateral, in-plane J0
        let (s, _) = lagrange_solution(&m, 1.0);
        let i = polar_moment(&s.config, &m);
        let jp = Vec3::new(0.6, 0.8, 0.0) * j0;
        assert!((omega_j0(&s.config, &m, &jp).unwrap() - 2.0 * j0 * j0 / i).abs() < 1e-12);
        // collinear, J0 along the line
        let line = Configuration::centered([-Vec3::x(), Vec3::zeros(), Vec3::x()], &m);
        assert!(matches!(omega_j0(&line, &m, &Vec3::x()), Err(Error::UndefinedAtCollinear)));
        assert!(omega_j0(&line, &m, &Vec3::y()).is_ok());
    }

    #[test]
    fn dynamic_phase_of_rigid_rotation() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let (s, omega) = lagrange_solution(&m, 1.0);
        let theta = 1.3;
        let tr = integrate(&s, theta / omega, &m, &PotentialSpec::newtonian(), &IntegratorConfig::default()).unwrap();
        let j0 = tr.initial_momentum();
        let est = dynamic_phase(&tr, &j0).unwrap();
        assert!((est.value - j0.norm() * theta).abs() < 1e-9, "{} vs {}", est.value, j0.norm() * theta);
        assert_eq!(dynamic_phase_between(&tr, &j0, 0.5, 0.5).unwrap().value, 0.0);
    }

    #[test]
    fn dynamic_phase_is_reversal_symmetric() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let (s, _) = lagrange_solution(&m, 1.0);
        let s = State::new(s.config, s.velocities.map(|v| v * 0.8 + Vec3::new(0.0, 0.0, 0.0)));
        let spec = PotentialSpec::newtonian();
        let cfg = IntegratorConfig::default();
        let fwd = integrate(&s, 2.0, &m, &spec, &cfg).unwrap();
        let end = fwd.samples().last().unwrap().state;
        let back = integrate(&crate::dynamics::time_reversed(&end), 2.0, &m, &spec, &cfg).unwrap();
        let j0 = fwd.initial_momentum();
        let a = dynamic_phase(&fwd, &j0).unwrap().value;
        // the reversed run has angular momentum −J0; ω_J0 is quadratic in J0
        let b = dynamic_phase(&back, &-j0).unwrap().value;
        assert!((a - b).abs() < 1e-7 * a.abs());
    }
}
