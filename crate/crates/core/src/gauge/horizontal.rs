//! Zero-angular-momentum (horizontal) lifts of planar shape curves.
//!
//! A planar configuration with `I = 1` is a point `ζ = (x1, y1, x2, y2)` of the
//! unit sphere in R⁴. The gradients of `w1, w2, w3` are mutually orthogonal,
//! have squared length `|ζ|²` and are orthogonal to the rotation direction, so
//! `ζ' = Dwᵀ w'/|ζ|²` is the horizontal velocity over a prescribed `w'`.

use crate::dynamics::integrator::{dopri5, Control, IntegratorConfig};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_panels, Estimate};
use crate::shape::{from_jacobi, jacobi, raw_w, theta1_rate};
use crate::triangle::{polar_moment, Configuration, Masses};
use crate::Vec3;

/// A closed or open curve on the shape sphere `‖w‖ = ½`, parametrized by `s ∈ [0, 1]`.
pub trait ShapeCurve {
    fn point(&self, s: f64) -> Vec3;
    fn tangent(&self, s: f64) -> Vec3;
    /// Parameters where the curve may fail to be smooth, including 0 and 1.
    fn breaks(&self) -> Vec<f64> {
        vec![0.0, 1.0]
    }
}

/// The circle of height `z1` traversed once counter-clockwise in `θ1`.
#[derive(Clone, Copy, Debug)]
pub struct Latitude {
    pub z1: f64,
}

impl ShapeCurve for Latitude {
    fn point(&self, s: f64) -> Vec3 {
        let rho = 0.5 * (1.0 - self.z1 * self.z1).max(0.0).sqrt();
        let a = std::f64::consts::TAU * s;
        Vec3::new(rho * a.cos(), rho * a.sin(), 0.5 * self.z1)
    }

    fn tangent(&self, s: f64) -> Vec3 {
        let rho = 0.5 * (1.0 - self.z1 * self.z1).max(0.0).sqrt();
        let a = std::f64::consts::TAU * s;
        Vec3::new(-a.sin(), a.cos(), 0.0) * (rho * std::f64::consts::TAU)
    }
}

/// Great-circle polygon through the given vertices (first and last may
/// coincide for a closed loop). Sampled curves are read as polygons.
#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<Vec3>,
}

impl Polygon {
    /// Vertices are rescaled onto the sphere of radius ½.
    pub fn new(vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::PreconditionViolated("polygon needs at least one vertex".into()));
        }
        let mut out = Vec::with_capacity(vertices.len());
        for v in vertices {
            let n = v.norm();
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::PreconditionViolated("polygon vertex must be a nonzero finite vector".into()));
            }
            out.push(v * (0.5 / n));
        }
        for w in out.windows(2) {
            if w[0].dot(&w[1]) < -0.25 * (1.0 - 1e-12) {
                return Err(Error::PreconditionViolated("consecutive polygon vertices are antipodal".into()));
            }
        }
        Ok(Polygon { vertices: out })
    }

    /// Polygon from `(z1, θ1)` pairs.
    pub fn from_angles(points: &[(f64, f64)]) -> Result<Self> {
        Polygon::new(points.iter().map(|&(z, t)| crate::shape::ShapePoint::from_angles(z, t).w).collect())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    fn edges(&self) -> usize {
        self.vertices.len().saturating_sub(1).max(1)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let n = self.edges();
        let x = s.clamp(0.0, 1.0) * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        (k, x - k as f64)
    }

    fn edge(&self, k: usize) -> (Vec3, Vec3) {
        let a = self.vertices[k.min(self.vertices.len() - 1)];
        let b = self.vertices[(k + 1).min(self.vertices.len() - 1)];
        (a * 2.0, b * 2.0)
    }
}

impl ShapeCurve for Polygon {
    fn point(&self, s: f64) -> Vec3 {
        let (k, u) = self.locate(s);
        let (a, b) = self.edge(k);
        let omega = a.dot(&b).clamp(-1.0, 1.0).acos();
        if omega < 1e-15 {
            return a * 0.5;
        }
        (a * ((1.0 - u) * omega).sin() + b * (u * omega).sin()) * (0.5 / omega.sin())
    }

    fn tangent(&self, s: f64) -> Vec3 {
        let (k, u) = self.locate(s);
        let (a, b) = self.edge(k);
        let omega = a.dot(&b).clamp(-1.0, 1.0).acos();
        if omega < 1e-15 {
            return Vec3::zeros();
        }
        let d = (b * (u * omega).cos() - a * ((1.0 - u) * omega).cos()) * (omega / omega.sin());
        d * (0.5 * self.edges() as f64)
    }

    fn breaks(&self) -> Vec<f64> {
        let n = self.edges();
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }
}

/// Planar configuration in the xy-plane with `I = 1` whose shape (normal `e3`)
/// is the normalized `w`.
pub fn section_configuration(w: &Vec3, m: &Masses) -> Configuration {
    let w = w * (0.5 / w.norm());
    let (zeta1, zeta2) = if w.x <= 0.0 {
        let r2 = (0.5 - w.x).sqrt();
        (Vec3::new(w.y / r2, -w.z / r2, 0.0), Vec3::new(r2, 0.0, 0.0))
    } else {
        let r1 = (0.5 + w.x).sqrt();
        (Vec3::new(r1, 0.0, 0.0), Vec3::new(w.y / r1, w.z / r1, 0.0))
    };
    from_jacobi(&zeta1, &zeta2, m)
}

/// Result of a horizontal lift.
#[derive(Clone, Debug)]
pub struct HorizontalPath {
    pub masses: Masses,
    /// `(s, configuration)` at the accepted integrator steps.
    pub samples: Vec<(f64, Configuration)>,
    /// Largest `|J|/(I·|ζ'|)` seen along the path.
    pub max_momentum: f64,
    /// Largest distance between the lifted shape and the prescribed curve.
    pub max_shape_error: f64,
}

impl HorizontalPath {
    pub fn start(&self) -> &Configuration {
        &self.samples[0].1
    }

    pub fn end(&self) -> &Configuration {
        &self.samples[self.samples.len() - 1].1
    }

    /// Angle of the planar rotation taking the start configuration to the end,
    /// counter-clockwise about `e3`.
    pub fn holonomy_angle(&self) -> f64 {
        let a = jacobi(self.start(), &self.masses);
        let b = jacobi(self.end(), &self.masses);
        let cross = a.zeta1.cross(&b.zeta1).z + a.zeta2.cross(&b.zeta2).z;
        let dot = a.zeta1.dot(&b.zeta1) + a.zeta2.dot(&b.zeta2);
        cross.atan2(dot)
    }
}

fn unpack(y: &[f64]) -> (Vec3, Vec3) {
    (Vec3::new(y[0], y[1], 0.0), Vec3::new(y[2], y[3], 0.0))
}

/// `Dwᵀ·dw / |ζ|²`.
fn horizontal_velocity(y: &[f64], dw: &Vec3) -> [f64; 4] {
    let [x1, y1, x2, y2] = [y[0], y[1], y[2], y[3]];
    let r2 = x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2;
    let rows = [[x1, y1, -x2, -y2], [x2, y2, x1, y1], [y2, -x2, -y1, x1]];
    let mut out = [0.0; 4];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (rows[0][c] * dw.x + rows[1][c] * dw.y + rows[2][c] * dw.z) / r2;
    }
    out
}

/// Integrates the horizontal lift of `curve` starting at the planar
/// configuration `q_start`, which must lie in the xy-plane and project to
/// `curve.point(0)` (normal `e3`). The size `I` of `q_start` is kept.
pub fn horizontal_lift<C: ShapeCurve + ?Sized>(curve: &C, q_start: &Configuration, m: &Masses, tol: f64) -> Result<HorizontalPath> {
    let i = polar_moment(q_start, m);
    if !(i > 0.0) {
        return Err(Error::TripleCollision);
    }
    if q_start.0.iter().any(|p| p.z.abs() > 1e-12 * i.sqrt()) {
        return Err(Error::PreconditionViolated("horizontal lift start must lie in the xy-plane".into()));
    }
    let scale = i.sqrt();
    let jv = jacobi(q_start, m);
    let w0 = raw_w(&jv, &Vec3::z()) / i;
    let gap = (w0 - curve.point(0.0)).norm();
    if gap > 1e-8 {
        return Err(Error::PreconditionViolated(format!("start configuration is {gap:.3e} away from the curve start")));
    }
    let cfg = IntegratorConfig { rtol: tol, atol: tol * 1e-2, max_step: 0.05, ..IntegratorConfig::default() };
    let mut y0 = vec![jv.zeta1.x / scale, jv.zeta1.y / scale, jv.zeta2.x / scale, jv.zeta2.y / scale];
    let mut samples = vec![(0.0, *q_start)];
    let mut max_momentum: f64 = 0.0;
    let mut max_shape_error: f64 = gap;
    let breaks = curve.breaks();
    for pair in breaks.windows(2) {
        let (s0, s1) = (pair[0], pair[1]);
        if !(s1 > s0) {
            continue;
        }
        let mut last = y0.clone();
        dopri5(
            |s, y, dy| {
                let v = horizontal_velocity(y, &curve.tangent(s));
                dy.copy_from_slice(&v);
                if v.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::LiftStepFailure(format!("non-finite velocity at s = {s}")))
                }
            },
            s0,
            &y0,
            s1,
            &cfg,
            |s, y| {
                if s > s0 {
                    let (z1, z2) = unpack(y);
                    let v = horizontal_velocity(y, &curve.tangent(s));
                    let (d1, d2) = (Vec3::new(v[0], v[1], 0.0), Vec3::new(v[2], v[3], 0.0));
                    let speed = (d1.norm_squared() + d2.norm_squared()).sqrt();
                    if speed > 0.0 {
                        let j = z1.cross(&d1).z + z2.cross(&d2).z;
                        max_momentum = max_momentum.max(j.abs() / speed);
                    }
                    let w = Vec3::new(
                        0.5 * (z1.norm_squared() - z2.norm_squared()),
                        z1.dot(&z2),
                        z1.cross(&z2).z,
                    );
                    max_shape_error = max_shape_error.max((w / (z1.norm_squared() + z2.norm_squared()) - curve.point(s)).norm());
                    samples.push((s, from_jacobi(&(z1 * scale), &(z2 * scale), m)));
                }
                last.copy_from_slice(y);
                Ok(Control::Continue)
            },
        )
        .map_err(|e| match e {
            Error::LiftStepFailure(_) => e,
            other => Error::LiftStepFailure(other.to_string()),
        })?;
        y0 = last;
    }
    Ok(HorizontalPath { masses: *m, samples, max_momentum, max_shape_error })
}

/// `½∮(z1 − 1)dθ1` along the curve, the holonomy predicted by the section whose
/// connection potential vanishes at the north pole.
pub fn predicted_holonomy<C: ShapeCurve + ?Sized>(curve: &C) -> Estimate {
    let mut f = |s: f64| {
        let w = curve.point(s);
        let dw = curve.tangent(s);
        0.5 * (2.0 * w.z - 1.0) * theta1_rate(&w, &dw)
    };
    integrate_panels(&mut f, &curve.breaks(), 1e-13, 1e-12)
}
