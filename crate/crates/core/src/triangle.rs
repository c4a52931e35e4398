//! Weighted triangles: centering, polar moment, inertia tensor, angular
//! momentum, energies, oriented area and plane normals.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rigid::Rotation;
use crate::Vec3;

/// `λ_min(𝕀)/I` below this marks a collinear configuration.
pub const COLLINEAR_THRESHOLD: f64 = 1e-10;

/// Three positive masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Masses(pub [f64; 3]);

impl Masses {
    pub fn new(m1: f64, m2: f64, m3: f64) -> Result<Self> {
        Masses::try_from([m1, m2, m3])
    }

    pub fn equal(m: f64) -> Self {
        Masses([m; 3])
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl TryFrom<[f64; 3]> for Masses {
    type Error = Error;
    fn try_from(m: [f64; 3]) -> Result<Self> {
        if m.iter().all(|x| x.is_finite() && *x > 0.0) {
            Ok(Masses(m))
        } else {
            Err(Error::InvalidMasses)
        }
    }
}

impl From<Masses> for [f64; 3] {
    fn from(m: Masses) -> Self {
        m.0
    }
}

/// Three body positions with the center of mass at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Configuration(pub [Vec3; 3]);

impl Configuration {
    /// Subtracts the weighted mean.
    pub fn centered(raw: [Vec3; 3], m: &Masses) -> Self {
        let com = weighted_mean(&raw, m);
        Configuration(raw.map(|q| q - com))
    }

    pub fn zeros() -> Self {
        Configuration([Vec3::zeros(); 3])
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Configuration(self.0.map(|q| q * lambda))
    }

    pub fn rotated(&self, r: &Rotation) -> Self {
        Configuration(self.0.map(|q| r.apply(&q)))
    }

    pub fn center_of_mass(&self, m: &Masses) -> Vec3 {
        weighted_mean(&self.0, m)
    }

    pub fn polar_moment(&self, m: &Masses) -> f64 {
        polar_moment(self, m)
    }

    /// Largest pairwise distance, used as a length scale.
    pub fn size(&self) -> f64 {
        let q = &self.0;
        (q[0] - q[1]).norm().max((q[0] - q[2]).norm()).max((q[1] - q[2]).norm())
    }
}

fn weighted_mean(q: &[Vec3; 3], m: &Masses) -> Vec3 {
    (q[0] * m.0[0] + q[1] * m.0[1] + q[2] * m.0[2]) / m.total()
}

/// A configuration together with a unit normal to its plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientedConfiguration {
    pub config: Configuration,
    pub normal: Vec3,
}

impl OrientedConfiguration {
    /// Checks `n·q_a = 0` (relative to the configuration size) and `‖n‖ = 1`.
    pub fn new(config: Configuration, normal: Vec3) -> Result<Self> {
        if (normal.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::PreconditionViolated("orientation normal must be a unit vector".into()));
        }
        let scale = config.size().max(f64::MIN_POSITIVE);
        if config.0.iter().any(|q| normal.dot(q).abs() > 1e-10 * scale) {
            return Err(Error::PreconditionViolated("orientation normal is not orthogonal to the triangle".into()));
        }
        Ok(OrientedConfiguration { config, normal })
    }

    pub fn flipped(&self) -> Self {
        OrientedConfiguration { config: self.config, normal: -self.normal }
    }

    pub fn rotated(&self, r: &Rotation) -> Self {
        OrientedConfiguration { config: self.config.rotated(r), normal: r.apply(&self.normal) }
    }
}

/// Positions and velocities of the three bodies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct State {
    pub config: Configuration,
    pub velocities: [Vec3; 3],
}

impl State {
    pub fn new(config: Configuration, velocities: [Vec3; 3]) -> Self {
        State { config, velocities }
    }

    /// Centers both positions and velocities.
    pub fn centered(positions: [Vec3; 3], velocities: [Vec3; 3], m: &Masses) -> Self {
        let vcom = weighted_mean(&velocities, m);
        State { config: Configuration::centered(positions, m), velocities: velocities.map(|v| v - vcom) }
    }

    pub fn rotated(&self, r: &Rotation) -> Self {
        State { config: self.config.rotated(r), velocities: self.velocities.map(|v| r.apply(&v)) }
    }
}

/// The symmetric tensor with `ωᵀ𝕀ω = Σ m_a ‖ω × q_a‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaTensor(pub Matrix3<f64>);

impl InertiaTensor {
    /// Eigenvalues ascending with matching unit eigenvectors as columns.
    pub fn eigen(&self) -> ([f64; 3], Matrix3<f64>) {
        let eig = SymmetricEigen::new(self.0);
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = idx.map(|i| eig.eigenvalues[i]);
        let vecs = Matrix3::from_columns(&idx.map(|i| eig.eigenvectors.column(i).into_owned()));
        (vals, vecs)
    }

    pub fn quadratic(&self, w: &Vec3) -> f64 {
        w.dot(&(self.0 * w))
    }
}

pub fn center(raw: [Vec3; 3], m: &Masses) -> Configuration {
    Configuration::centered(raw, m)
}

pub fn polar_moment(q: &Configuration, m: &Masses) -> f64 {
    (0..3).map(|a| m.0[a] * q.0[a].norm_squared()).sum()
}

/// `M = Σ m_a q_a ⊗ q_a`.
pub fn second_moment(q: &Configuration, m: &Masses) -> Matrix3<f64> {
    let mut mm = Matrix3::zeros();
    for a in 0..3 {
        mm += q.0[a] * q.0[a].transpose() * m.0[a];
    }
    mm
}

/// `𝕀 = I·1 − M`.
pub fn inertia_tensor(q: &Configuration, m: &Masses) -> InertiaTensor {
    let mm = second_moment(q, m);
    InertiaTensor(Matrix3::identity() * mm.trace() - mm)
}

pub fn angular_momentum(s: &State, m: &Masses) -> Vec3 {
    (0..3).map(|a| s.config.0[a].cross(&s.velocities[a]) * m.0[a]).sum()
}

pub fn kinetic_energy(s: &State, m: &Masses) -> f64 {
    0.5 * (0..3).map(|a| m.0[a] * s.velocities[a].norm_squared()).sum::<f64>()
}

/// `Δ = ½ n·(q2 − q1)×(q3 − q1)`.
pub fn oriented_area(oq: &OrientedConfiguration) -> f64 {
    let q = &oq.config.0;
    0.5 * oq.normal.dot(&(q[1] - q[0]).cross(&(q[2] - q[0])))
}

/// `λ_min(𝕀)/I`; scale invariant, zero exactly for collinear triangles.
pub fn collinearity_measure(q: &Configuration, m: &Masses) -> Result<f64> {
    let i = polar_moment(q, m);
    if i <= 0.0 {
        return Err(Error::TripleCollision);
    }
    let (vals, _) = inertia_tensor(q, m).eigen();
    Ok((vals[0] / i).max(0.0))
}

/// Outcome of [`principal_normal`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlaneNormal {
    Normal(Vec3),
    /// The triangle lies on a line; carries the line's unit direction.
    Collinear(Vec3),
}

/// Unit normal of the triangle's plane. The sign follows `(q1 − q3) × (q2 − q3)`,
/// i.e. the orientation for which the oriented area is positive.
pub fn principal_normal(q: &Configuration, m: &Masses) -> Result<PlaneNormal> {
    let i = polar_moment(q, m);
    if i <= 0.0 {
        return Err(Error::TripleCollision);
    }
    let c = (q.0[0] - q.0[2]).cross(&(q.0[1] - q.0[2]));
    let cn = c.norm();
    // far from collinear; skips the eigen solve
    if cn > 1e-3 * q.size().powi(2) {
        return Ok(PlaneNormal::Normal(c / cn));
    }
    let (vals, vecs) = inertia_tensor(q, m).eigen();
    if vals[0] / i < COLLINEAR_THRESHOLD {
        return Ok(PlaneNormal::Collinear(vecs.column(0).into_owned()));
    }
    // The cross product is accurate away from collinearity; fall back to the
    // eigenvector of eigenvalue I otherwise.
    let n = if cn > 1e-6 * q.size().powi(2) {
        c / cn
    } else {
        let v = vecs.column(2).into_owned();
        if v.dot(&c) < 0.0 {
            -v
        } else {
            v
        }
    };
    Ok(PlaneNormal::Normal(n))
}
