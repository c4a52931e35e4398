//! Rotation-group arithmetic on 3×3 matrices.
//!
//! Rotations are stored as proper orthogonal matrices. `exp` follows the usual
//! convention: `Rotation::exp(θ·u)` turns counter-clockwise by θ about `u`.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, SVD};

use crate::error::{Error, Result};
use crate::triangle::{collinearity_measure, Configuration, Masses, COLLINEAR_THRESHOLD};
use crate::Vec3;

/// Tolerance on `RᵀR = 1` and `det R = 1` enforced by [`Rotation::try_from_matrix`].
pub const ORTHOGONALITY_TOL: f64 = 1e-12;
/// Default tolerance for [`log_about_axis`].
pub const AXIS_TOL: f64 = 1e-8;
const ANTIPODAL_TOL: f64 = 1e-12;

/// A proper rotation of R³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

/// Unit axis plus angle in (−π, π].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    pub axis: Vec3,
    pub angle: f64,
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wraps a matrix, checking orthogonality and orientation.
    pub fn try_from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let defect = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if defect > ORTHOGONALITY_TOL || (det - 1.0).abs() > ORTHOGONALITY_TOL {
            return Err(Error::PreconditionViolated(format!(
                "matrix is not a proper rotation (orthogonality defect {defect:.3e}, det {det})"
            )));
        }
        Ok(Rotation(m))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// Counter-clockwise rotation by `‖v‖` radians about `v/‖v‖`.
    pub fn exp(v: &Vec3) -> Self {
        exp_rotation(v)
    }

    /// Axis and angle with angle in [0, π]. The identity reports axis e3.
    pub fn axis_angle(&self) -> AxisAngle {
        let m = &self.0;
        let s = Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5;
        let c = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        let sn = s.norm();
        let angle = sn.atan2(c);
        if sn > 1e-8 {
            return AxisAngle { axis: s / sn, angle };
        }
        if c > 0.0 {
            return AxisAngle { axis: Vec3::z(), angle: 0.0 };
        }
        // Near a half turn: R + 1 = 2uuᵀ (up to the small antisymmetric part).
        let b = m + Matrix3::identity();
        let mut best = b.column(0).into_owned();
        for k in 1..3 {
            if b.column(k).norm() > best.norm() {
                best = b.column(k).into_owned();
            }
        }
        let mut axis = best.normalize();
        if axis.dot(&s) < 0.0 {
            axis = -axis;
        }
        AxisAngle { axis, angle }
    }

    /// Largest entrywise difference to another rotation.
    pub fn distance_max(&self, other: &Rotation) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rodrigues' formula with series coefficients near zero angle.
pub fn exp_rotation(v: &Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    if theta2 < f64::MIN_POSITIVE {
        return Rotation::identity();
    }
    let theta = theta2.sqrt();
    let (a, b) = if theta < 1e-4 {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(v);
    Rotation(Matrix3::identity() + k * a + k * k * b)
}

/// Signed angle in (−π, π] of a rotation that fixes `axis`.
pub fn log_about_axis(r: &Rotation, axis: &Vec3) -> Result<f64> {
    log_about_axis_tol(r, axis, AXIS_TOL)
}

/// [`log_about_axis`] with an explicit fixed-axis tolerance.
pub fn log_about_axis_tol(r: &Rotation, axis: &Vec3, tol: f64) -> Result<f64> {
    let u = axis.normalize();
    let deviation = (r.apply(&u) - u).norm();
    if deviation > tol {
        return Err(Error::AxisNotFixed { deviation });
    }
    let p = any_perpendicular(&u);
    let rp = r.apply(&p);
    let angle = u.dot(&p.cross(&rp)).atan2(p.dot(&rp));
    Ok(wrap_angle(angle))
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// A unit vector orthogonal to the unit vector `u`.
pub fn any_perpendicular(u: &Vec3) -> Vec3 {
    let trial = if u.x.abs() < 0.6 { Vec3::x() } else if u.y.abs() < 0.6 { Vec3::y() } else { Vec3::z() };
    (trial - u * u.dot(&trial)).normalize()
}

/// The smallest rotation taking unit vector `a` to unit vector `b`.
pub fn rotation_between(a: &Vec3, b: &Vec3) -> Result<Rotation> {
    let c = a.dot(b);
    if c < -1.0 + ANTIPODAL_TOL {
        return Err(Error::AntipodalInput);
    }
    let v = a.cross(b);
    let k = skew(&v);
    Ok(Rotation(Matrix3::identity() + k + k * k / (1.0 + c)))
}

/// Result of a weighted similarity fit `q1 ≈ scale·R·q0`.
#[derive(Clone, Copy, Debug)]
pub struct SimilarityFit {
    pub scale: f64,
    pub rotation: Rotation,
    /// `Σ m_a ‖q1_a − scale·R·q0_a‖²` at the optimum.
    pub residual: f64,
}

/// Weighted orthogonal alignment of two centered configurations.
///
/// Collinear references leave the rotation about the line undetermined and are
/// rejected with [`Error::DegenerateFit`].
pub fn fit_similarity(q0: &Configuration, q1: &Configuration, m: &Masses) -> Result<SimilarityFit> {
    let i0 = q0.polar_moment(m);
    if i0 <= 0.0 {
        return Err(Error::TripleCollision);
    }
    if collinearity_measure(q0, m)? < COLLINEAR_THRESHOLD {
        return Err(Error::DegenerateFit);
    }
    fit_weighted_points(&q0.0, &q1.0, &m.0, i0, q1.polar_moment(m))
}

/// Similarity fit that also aligns the oriented normals, usable when the
/// reference triangle is collinear. The normals enter as an extra point pair
/// carrying weight `I0`.
pub(crate) fn fit_similarity_oriented(
    q0: &Configuration,
    n0: &Vec3,
    q1: &Configuration,
    n1: &Vec3,
    m: &Masses,
) -> Result<SimilarityFit> {
    let i0 = q0.polar_moment(m);
    let i1 = q1.polar_moment(m);
    if i0 <= 0.0 {
        return Err(Error::TripleCollision);
    }
    let s0 = i0.sqrt();
    let s1 = i1.sqrt();
    let pts0 = [q0.0[0], q0.0[1], q0.0[2], n0 * s0];
    let pts1 = [q1.0[0], q1.0[1], q1.0[2], n1 * s1];
    let w = [m.0[0], m.0[1], m.0[2], 1.0];
    let rot = best_rotation(&pts0, &pts1, &w);
    // Scale and residual are those of the triangle alone.
    let mut cross = 0.0;
    for a in 0..3 {
        cross += m.0[a] * q1.0[a].dot(&rot.apply(&q0.0[a]));
    }
    let scale = (cross / i0).max(0.0);
    let residual = (i1 - cross * cross / i0).max(0.0);
    Ok(SimilarityFit { scale, rotation: rot, residual })
}

fn fit_weighted_points(p0: &[Vec3], p1: &[Vec3], w: &[f64], i0: f64, i1: f64) -> Result<SimilarityFit> {
    let rot = best_rotation(p0, p1, w);
    let mut cross = 0.0;
    for a in 0..p0.len() {
        cross += w[a] * p1[a].dot(&rot.apply(&p0[a]));
    }
    let scale = cross / i0;
    let residual = (i1 - cross * cross / i0).max(0.0);
    Ok(SimilarityFit { scale, rotation: rot, residual })
}

/// Proper rotation maximizing `Σ w_a p1_a·R p0_a` (polar factor of the
/// cross-covariance with the determinant sign fixed to +1).
fn best_rotation(p0: &[Vec3], p1: &[Vec3], w: &[f64]) -> Rotation {
    let mut h = Matrix3::zeros();
    for a in 0..p0.len() {
        h += p1[a] * p0[a].transpose() * w[a];
    }
    let svd = SVD::new(h, true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let d = (u * v_t).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let r = u * correction * v_t;
    Rotation(orthonormalize(&r))
}

/// One Newton step towards the orthogonal polar factor; removes rounding drift.
pub(crate) fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let inv_t = m.try_inverse().map(|i| i.transpose()).unwrap_or(*m);
    (m + inv_t) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
        loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = v.norm();
            if n > 0.1 && n < 1.0 {
                return v / n;
            }
        }
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(exp_rotation(&Vec3::zeros()), Rotation::identity());
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = exp_rotation(&Vec3::new(0.0, 0.0, PI / 2.0));
        let v = r.apply(&Vec3::x());
        assert!((v - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn exp_inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let u = random_unit(&mut rng);
            let th = rng.random_range(-4.0..4.0);
            let r = exp_rotation(&(u * th)) * exp_rotation(&(u * -th));
            assert!(r.distance_max(&Rotation::identity()) < 1e-14);
        }
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_about_axis(&Rotation::identity(), &Vec3::z()).unwrap(), 0.0);
        let a = log_about_axis(&exp_rotation(&(Vec3::z() * 0.7)), &Vec3::z()).unwrap();
        assert!((a - 0.7).abs() < 1e-15);
        let b = log_about_axis(&exp_rotation(&(Vec3::z() * (2.0 * PI - 0.1))), &Vec3::z()).unwrap();
        assert!((b + 0.1).abs() < 1e-14);
    }

    #[test]
    fn log_rejects_unfixed_axis() {
        let r = exp_rotation(&(Vec3::x() * 0.3));
        assert!(matches!(log_about_axis(&r, &Vec3::z()), Err(Error::AxisNotFixed { .. })));
    }

    #[test]
    fn half_turn_maps_to_pi() {
        let a = log_about_axis(&exp_rotation(&(Vec3::z() * PI)), &Vec3::z()).unwrap();
        assert!((a - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
    }

    #[test]
    fn between_examples() {
        let id = rotation_between(&Vec3::x(), &Vec3::x()).unwrap();
        assert!(id.distance_max(&Rotation::identity()) < 1e-15);
        let r = rotation_between(&Vec3::x(), &Vec3::y()).unwrap();
        assert!(r.distance_max(&exp_rotation(&(Vec3::z() * (PI / 2.0)))) < 1e-15);
        assert!(matches!(rotation_between(&Vec3::x(), &-Vec3::x()), Err(Error::AntipodalInput)));
    }

    #[test]
    fn between_is_smallest_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            if a.dot(&b) < -0.99 {
                continue;
            }
            let r = rotation_between(&a, &b).unwrap();
            assert!((r.apply(&a) - b).norm() < 1e-12);
            let aa = r.axis_angle();
            assert!(aa.axis.dot(&a).abs() < 1e-10 && aa.axis.dot(&b).abs() < 1e-10);
            assert!((aa.angle - a.dot(&b).clamp(-1.0, 1.0).acos()).abs() < 1e-10);
            let back = rotation_between(&b, &a).unwrap() * r;
            assert!(back.distance_max(&Rotation::identity()) < 1e-12);
            Rotation::try_from_matrix(*r.matrix()).unwrap();
        }
    }

    #[test]
    fn axis_angle_roundtrip_near_half_turn() {
        let u = Vec3::new(1.0, 2.0, -0.5).normalize();
        let r = exp_rotation(&(u * (PI - 1e-9)));
        let aa = r.axis_angle();
        assert!((aa.axis - u).norm() < 1e-6);
        assert!((aa.angle - (PI - 1e-9)).abs() < 1e-9);
    }

    proptest::proptest! {
        #[test]
        fn exp_log_roundtrip(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0, th in -3.14159f64..3.14159) {
            let v = Vec3::new(x, y, z);
            proptest::prop_assume!(v.norm() > 1e-3);
            let u = v.normalize();
            let r = exp_rotation(&(u * th));
            let back = log_about_axis(&r, &u).unwrap();
            proptest::prop_assert!((back - th).abs() < 1e-10);
            proptest::prop_assert!(exp_rotation(&(u * back)).distance_max(&r) < 1e-8);
        }
    }
}
