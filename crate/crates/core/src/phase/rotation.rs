//! The rotation relating two oriented-similar triangles, factored as
//! `R = R1·R_J0·R0` with `R_J0` a rotation about the angular momentum axis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rigid::{fit_similarity, fit_similarity_oriented, log_about_axis_tol, rotation_between, Rotation};
use crate::triangle::{Masses, OrientedConfiguration};
use crate::Vec3;

#[derive(Clone, Copy, Debug)]
pub struct TotalRotation {
    /// Angle of `R_J0` about `Ĵ0`, in (−π, π].
    pub delta_theta: f64,
    pub rotation: Rotation,
    pub r0: Rotation,
    pub r1: Rotation,
    pub r_j0: Rotation,
    pub diagnostics: RotationDiagnostics,
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct RotationDiagnostics {
    /// Fit residual over the polar moment of the second triangle.
    pub fit_residual: f64,
    pub scale: f64,
    /// `‖R·n0 − n1‖`.
    pub normal_mismatch: f64,
    /// `‖R_J0·Ĵ0 − Ĵ0‖`.
    pub axis_deviation: f64,
}

/// Measures `Δθ` between `oq0` and `oq1`. `tol` bounds the relative fit
/// residual, the normal mismatch and the fixed-axis deviation.
pub fn measure_total_rotation(
    oq0: &OrientedConfiguration,
    oq1: &OrientedConfiguration,
    m: &Masses,
    j0: &Vec3,
    tol: f64,
) -> Result<TotalRotation> {
    let jn = j0.norm();
    if !(jn > 0.0) {
        return Err(Error::PreconditionViolated("total rotation about J0 needs J0 ≠ 0".into()));
    }
    let axis = j0 / jn;
    let fit = match fit_similarity(&oq0.config, &oq1.config, m) {
        Err(Error::DegenerateFit) => fit_similarity_oriented(&oq0.config, &oq0.normal, &oq1.config, &oq1.normal, m)?,
        other => other?,
    };
    let i1 = oq1.config.polar_moment(m);
    // direct sum; the fit's own residual loses digits to cancellation
    let direct: f64 = (0..3)
        .map(|a| m.0[a] * (oq1.config.0[a] - fit.rotation.apply(&oq0.config.0[a]) * fit.scale).norm_squared())
        .sum();
    let fit_residual = if i1 > 0.0 { direct / i1 } else { 0.0 };
    let rel_residual = fit_residual.sqrt();
    let normal_mismatch = (fit.rotation.apply(&oq0.normal) - oq1.normal).norm();
    if rel_residual > tol || normal_mismatch > tol.max(rel_residual * 10.0).max(1e-12) {
        return Err(Error::NotSimilar { residual: rel_residual.max(normal_mismatch) });
    }
    let r0 = rotation_between(&oq0.normal, &axis).map_err(|_| Error::AntipodalNormal)?;
    let r1 = rotation_between(&axis, &oq1.normal).map_err(|_| Error::AntipodalNormal)?;
    let r_j0 = r1.inverse() * fit.rotation * r0.inverse();
    let axis_deviation = (r_j0.apply(&axis) - axis).norm();
    let delta_theta = log_about_axis_tol(&r_j0, &axis, tol.max(1e-8))?;
    Ok(TotalRotation {
        delta_theta,
        rotation: fit.rotation,
        r0,
        r1,
        r_j0,
        diagnostics: RotationDiagnostics { fit_residual, scale: fit.scale, normal_mismatch, axis_deviation },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triangle::Configuration;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn triangle(m: &Masses) -> OrientedConfiguration {
        let q = Configuration::centered([Vec3::new(1.0, 0.2, 0.0), Vec3::new(-0.3, 0.8, 0.0), Vec3::new(-0.6, -0.7, 0.0)], m);
        OrientedConfiguration::new(q, Vec3::z()).unwrap()
    }

    #[test]
    fn rotation_about_j0_with_aligned_normal() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let oq0 = triangle(&m);
        let j0 = Vec3::z() * 1.7;
        for &th in &[0.3, -1.2, 3.0] {
            let oq1 = oq0.rotated(&Rotation::exp(&(Vec3::z() * th)));
            let r = measure_total_rotation(&oq0, &oq1, &m, &j0, 1e-8).unwrap();
            assert!((r.delta_theta - th).abs() < 1e-12);
            assert!(r.r0.distance_max(&Rotation::identity()) < 1e-15);
            assert!(r.r1.distance_max(&Rotation::identity()) < 1e-15);
        }
        let r = measure_total_rotation(&oq0, &oq0, &m, &j0, 1e-8).unwrap();
        assert_eq!(r.delta_theta, 0.0);
    }

    #[test]
    fn recovers_constructed_factorization() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let base = triangle(&m);
            let tilt = Rotation::exp(&Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0));
            let oq0 = base.rotated(&tilt);
            let j0 = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 1.0) * 2.0;
            let axis = j0.normalize();
            let n1 = Vec3::new(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), 1.0).normalize();
            let th = rng.random_range(-3.0..3.0);
            let r0 = rotation_between(&oq0.normal, &axis).unwrap();
            let r1 = rotation_between(&axis, &n1).unwrap();
            let r = r1 * Rotation::exp(&(axis * th)) * r0;
            let oq1 = oq0.rotated(&r);
            let got = measure_total_rotation(&oq0, &oq1, &m, &j0, 1e-8).unwrap();
            assert!((got.delta_theta - th).abs() < 1e-10);
            assert!((oq1.normal - n1).norm() < 1e-12);
        }
    }

    #[test]
    fn scale_is_discarded() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let oq0 = triangle(&m);
        let oq1 = OrientedConfiguration::new(oq0.config.scaled(2.5), oq0.normal).unwrap().rotated(&Rotation::exp(&(Vec3::z() * 0.4)));
        let got = measure_total_rotation(&oq0, &oq1, &m, &Vec3::z(), 1e-8).unwrap();
        assert!((got.delta_theta - 0.4).abs() < 1e-12);
        assert!((got.diagnostics.scale - 2.5).abs() < 1e-12);
    }

    #[test]
    fn failures() {
        let m = Masses::new(1.0, 2.0, 3.0).unwrap();
        let oq0 = triangle(&m);
        // mirror image: same unoriented triangle, opposite orientation
        let mirrored = oq0.flipped();
        assert!(matches!(measure_total_rotation(&oq0, &mirrored, &m, &Vec3::z(), 1e-8), Err(Error::NotSimilar { .. })));
        let other = OrientedConfiguration::new(
            Configuration::centered([Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(-0.2, -0.1, 0.0)], &m),
            Vec3::z(),
        )
        .unwrap();
        assert!(matches!(measure_total_rotation(&oq0, &other, &m, &Vec3::z(), 1e-8), Err(Error::NotSimilar { .. })));
        assert!(matches!(measure_total_rotation(&oq0, &oq0, &m, &-Vec3::z(), 1e-8), Err(Error::AntipodalNormal)));
    }
}
