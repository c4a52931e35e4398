//! Jacobi coordinates and the map to the shape sphere of radius ½.
//!
//! Bodies are grouped as (1,3|2): `ξ1 = q1 − q3`, `ξ2 = q2 − c13` with `c13`
//! the center of mass of bodies 1 and 3.

use crate::error::{Error, Result};
use crate::triangle::{polar_moment, Configuration, Masses, OrientedConfiguration, State};
use crate::Vec3;

/// Mass-normalized Jacobi vectors `ζ_i = √μ_i ξ_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiVectors {
    pub zeta1: Vec3,
    pub zeta2: Vec3,
    pub mu1: f64,
    pub mu2: f64,
}

impl JacobiVectors {
    /// `‖ζ1‖² + ‖ζ2‖²`, equal to the polar moment.
    pub fn norm_squared(&self) -> f64 {
        self.zeta1.norm_squared() + self.zeta2.norm_squared()
    }
}

pub fn reduced_masses(m: &Masses) -> (f64, f64) {
    let [m1, m2, m3] = m.0;
    (m1 * m3 / (m1 + m3), (m1 + m3) * m2 / m.total())
}

/// Jacobi vectors of positions; the same linear map applies to velocities.
pub fn jacobi_of(p: &[Vec3; 3], m: &Masses) -> (Vec3, Vec3) {
    let [m1, _, m3] = m.0;
    let (mu1, mu2) = reduced_masses(m);
    let xi1 = p[0] - p[2];
    let xi2 = p[1] - (p[0] * m1 + p[2] * m3) / (m1 + m3);
    (xi1 * mu1.sqrt(), xi2 * mu2.sqrt())
}

pub fn jacobi(q: &Configuration, m: &Masses) -> JacobiVectors {
    let (mu1, mu2) = reduced_masses(m);
    let (zeta1, zeta2) = jacobi_of(&q.0, m);
    JacobiVectors { zeta1, zeta2, mu1, mu2 }
}

/// Centered configuration with the given normalized Jacobi vectors.
pub fn from_jacobi(zeta1: &Vec3, zeta2: &Vec3, m: &Masses) -> Configuration {
    let [m1, m2, m3] = m.0;
    let (mu1, mu2) = reduced_masses(m);
    let xi1 = zeta1 / mu1.sqrt();
    let xi2 = zeta2 / mu2.sqrt();
    let total = m.total();
    let c13 = xi2 * (-m2 / total);
    let q2 = xi2 * ((m1 + m3) / total);
    let q1 = c13 + xi1 * (m3 / (m1 + m3));
    let q3 = c13 - xi1 * (m1 / (m1 + m3));
    Configuration([q1, q2, q3])
}

/// A point of the shape sphere `‖w‖ = ½`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapePoint {
    pub w: Vec3,
    /// `2 w3`, in [−1, 1].
    pub z1: f64,
    /// `atan2(w2, w1)` in (−π, π].
    pub theta1: f64,
}

impl ShapePoint {
    /// From a vector of norm ½ (renormalized to guard against rounding).
    pub fn from_w(w: Vec3) -> Self {
        let w = w * (0.5 / w.norm());
        ShapePoint { w, z1: (2.0 * w.z).clamp(-1.0, 1.0), theta1: w.y.atan2(w.x) }
    }

    pub fn from_angles(z1: f64, theta1: f64) -> Self {
        let r = 0.5 * (1.0 - z1 * z1).max(0.0).sqrt();
        ShapePoint { w: Vec3::new(r * theta1.cos(), r * theta1.sin(), 0.5 * z1), z1, theta1 }
    }
}

/// Raw (unnormalized) Hopf coordinates `(½(|ζ1|²−|ζ2|²), ζ1·ζ2, n·(ζ1×ζ2))`.
pub fn raw_w(jv: &JacobiVectors, n: &Vec3) -> Vec3 {
    Vec3::new(
        0.5 * (jv.zeta1.norm_squared() - jv.zeta2.norm_squared()),
        jv.zeta1.dot(&jv.zeta2),
        n.dot(&jv.zeta1.cross(&jv.zeta2)),
    )
}

/// Time derivative of [`raw_w`] given Jacobi velocities. The `ṅ` contribution
/// vanishes because `ζ1×ζ2` is parallel to `n`.
pub fn raw_w_rate(jv: &JacobiVectors, dz1: &Vec3, dz2: &Vec3, n: &Vec3) -> Vec3 {
    let (z1, z2) = (&jv.zeta1, &jv.zeta2);
    Vec3::new(z1.dot(dz1) - z2.dot(dz2), dz1.dot(z2) + z1.dot(dz2), n.dot(&(dz1.cross(z2) + z1.cross(dz2))))
}

/// `dθ1/dt` from raw `w` and its rate; no angle unwrapping involved.
pub fn theta1_rate(w: &Vec3, dw: &Vec3) -> f64 {
    let r2 = w.x * w.x + w.y * w.y;
    if r2 == 0.0 {
        return 0.0;
    }
    (w.x * dw.y - w.y * dw.x) / r2
}

pub fn hopf_map(jv: &JacobiVectors, n: &Vec3, i: f64) -> Result<ShapePoint> {
    if !(i > 0.0) {
        return Err(Error::TripleCollision);
    }
    let w = raw_w(jv, n) / i;
    Ok(ShapePoint { w, z1: (2.0 * w.z).clamp(-1.0, 1.0), theta1: w.y.atan2(w.x) })
}

/// Shape point of an oriented configuration.
pub fn shape_of(oq: &OrientedConfiguration, m: &Masses) -> Result<ShapePoint> {
    shape_of_config(&oq.config, &oq.normal, m)
}

pub fn shape_of_config(q: &Configuration, n: &Vec3, m: &Masses) -> Result<ShapePoint> {
    hopf_map(&jacobi(q, m), n, polar_moment(q, m))
}

/// Great-circle distance on the radius-½ sphere.
pub fn shape_distance(a: &ShapePoint, b: &ShapePoint) -> f64 {
    // chord = sin(φ/2) for central angle φ, and the distance is φ/2; the chord
    // form stays accurate for nearby points where arccos does not
    (a.w - b.w).norm().min(1.0).asin()
}

/// Ambient (kinetic-metric) speed of a horizontal planar velocity and the speed
/// of its image on the shape sphere.
///
/// Requires a planar state with `I = 1`, `İ = 0` and zero angular momentum.
pub fn submersion_speed_check(s: &State, m: &Masses) -> Result<(f64, f64)> {
    let q = &s.config;
    let v = &s.velocities;
    let i = polar_moment(q, m);
    if i <= 0.0 {
        return Err(Error::TripleCollision);
    }
    let speed = (0..3).map(|a| m.0[a] * v[a].norm_squared()).sum::<f64>().sqrt();
    let tol = 1e-9 * (1.0 + speed);
    if (i - 1.0).abs() > 1e-9 {
        return Err(Error::PreconditionViolated(format!("polar moment must be 1, got {i}")));
    }
    let idot = 2.0 * (0..3).map(|a| m.0[a] * q.0[a].dot(&v[a])).sum::<f64>();
    if idot.abs() > tol {
        return Err(Error::PreconditionViolated(format!("dI/dt must vanish, got {idot:.3e}")));
    }
    let j: Vec3 = (0..3).map(|a| q.0[a].cross(&v[a]) * m.0[a]).sum();
    if j.norm() > tol {
        return Err(Error::PreconditionViolated(format!("angular momentum must vanish, got {:.3e}", j.norm())));
    }
    let n = match crate::triangle::principal_normal(q, m)? {
        crate::triangle::PlaneNormal::Normal(n) => n,
        crate::triangle::PlaneNormal::Collinear(axis) => {
            // any normal of a plane containing the line and the velocities
            let c = (0..3).map(|a| axis.cross(&v[a])).max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
            if c.norm() > 0.0 {
                c.normalize()
            } else {
                crate::rigid::any_perpendicular(&axis)
            }
        }
    };
    let planar = q.0.iter().chain(v.iter()).all(|x| n.dot(x).abs() <= 1e-9 * (1.0 + x.norm()));
    if !planar {
        return Err(Error::PreconditionViolated("state is not planar".into()));
    }
    let jv = jacobi(q, m);
    let (dz1, dz2) = jacobi_of(v, m);
    // with I = 1 and İ = 0 the normalized point moves at the raw rate
    let dw = raw_w_rate(&jv, &dz1, &dz2, &n);
    Ok((speed, dw.norm()))
}
