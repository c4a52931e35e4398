//! The inertia eigenframe gauge and fiber coordinates `(z2, θ2)`.

use nalgebra::Matrix3;
use serde::Serialize;

use crate::dynamics::OrientedTrajectory;
use crate::error::{Error, Result};
use crate::rigid::{any_perpendicular, wrap_angle};
use crate::shape::{theta1_rate, ShapePoint};
use crate::triangle::{polar_moment, second_moment, Configuration, Masses, State};
use crate::Vec3;

/// In-plane eigenvalue gaps below `floor·I` are treated as degenerate.
pub const DEGENERACY_FLOOR: f64 = 1e-8;
/// `θ2` is frozen while `‖J0 − (J0·n)n‖ < floor·‖J0‖`.
pub const THETA2_FREEZE: f64 = 1e-9;
/// Consecutive `U1` knots must have at least this cosine; otherwise the
/// interval is bisected.
const CHAIN_DOT: f64 = 0.5;
const MAX_REFINE: u32 = 30;

/// Principal axes of 𝕀 with `U3 = n`; `λ1 ≤ λ2` are the in-plane eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BodyFrame {
    pub u1: Vec3,
    pub u2: Vec3,
    pub u3: Vec3,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl BodyFrame {
    pub fn gap(&self) -> f64 {
        self.lambda2 - self.lambda1
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&[self.u1, self.u2, self.u3])
    }

    /// The same frame with `U1, U2` negated (a half turn about `n`).
    pub fn flipped(&self) -> Self {
        BodyFrame { u1: -self.u1, u2: -self.u2, ..*self }
    }

    /// Components of a space vector in this frame.
    pub fn body_components(&self, v: &Vec3) -> Vec3 {
        Vec3::new(self.u1.dot(v), self.u2.dot(v), self.u3.dot(v))
    }
}

/// Eigenframe of a planar configuration with oriented normal `n`. The in-plane
/// block is diagonalized in closed form; the sign of `U1` is arbitrary.
pub fn body_frame(q: &Configuration, n: &Vec3, m: &Masses) -> Result<BodyFrame> {
    let i = polar_moment(q, m);
    if !(i > 0.0) {
        return Err(Error::TripleCollision);
    }
    let s = second_moment(q, m);
    let ea = any_perpendicular(n);
    let eb = n.cross(&ea);
    let (a, b, c) = (ea.dot(&(s * ea)), ea.dot(&(s * eb)), eb.dot(&(s * eb)));
    let half = 0.5 * (a - c);
    let radius = half.hypot(b);
    let psi = 0.5 * (2.0 * b).atan2(a - c);
    let u1 = ea * psi.cos() + eb * psi.sin();
    let u2 = n.cross(&u1);
    // the largest second moment is the smallest inertia eigenvalue
    let mu_big = 0.5 * (a + c) + radius;
    let mu_small = 0.5 * (a + c) - radius;
    Ok(BodyFrame { u1, u2, u3: *n, lambda1: i - mu_big, lambda2: i - mu_small })
}

/// Body-frame coordinates of the fixed angular momentum vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberPoint {
    pub z2: f64,
    pub theta2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReducedPoint {
    pub z1: f64,
    pub theta1: f64,
    pub z2: f64,
    pub theta2: f64,
}

impl ReducedPoint {
    pub fn shape(&self) -> ShapePoint {
        ShapePoint::from_angles(self.z1, self.theta1)
    }

    pub fn fiber(&self) -> FiberPoint {
        FiberPoint { z2: self.z2, theta2: self.theta2 }
    }
}

/// `(z2, θ2)` of `j0` in `frame`; `None` for θ2 when `j0` is along the normal.
pub fn fiber_point(frame: &BodyFrame, j0: &Vec3) -> (f64, Option<f64>) {
    let jn = j0.norm();
    let b = frame.body_components(j0);
    let z2 = (b.z / jn).clamp(-1.0, 1.0);
    let theta2 = if b.x.hypot(b.y) < THETA2_FREEZE * jn { None } else { Some(b.y.atan2(b.x)) };
    (z2, theta2)
}

/// Time derivatives of `U1, U2, n` from first-order eigenvector perturbation of
/// the second moment `M = Σ m q qᵀ`.
fn frame_rates(frame: &BodyFrame, s: &State, m: &Masses) -> (Vec3, Vec3, Vec3) {
    let mut md = Matrix3::zeros();
    for a in 0..3 {
        let (q, v) = (s.config.0[a], s.velocities[a]);
        md += (q * v.transpose() + v * q.transpose()) * m.0[a];
    }
    let i = frame.lambda1 + frame.lambda2;
    let (mu1, mu2) = (i - frame.lambda1, i - frame.lambda2);
    let (u1, u2, n) = (frame.u1, frame.u2, frame.u3);
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let c12 = u2.dot(&(md * u1)) / (mu1 - mu2);
    let c1n = ratio(n.dot(&(md * u1)), mu1);
    let c2n = ratio(n.dot(&(md * u2)), mu2);
    let du1 = u2 * c12 + n * c1n;
    let du2 = -u1 * c12 + n * c2n;
    let dn = -u1 * c1n - u2 * c2n;
    (du1, du2, dn)
}

/// One tracked sample of a [`GaugeTrajectory`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaugeSample {
    pub t: f64,
    /// `θ1`, `θ2` unwrapped along the trajectory.
    pub point: ReducedPoint,
    pub frame: BodyFrame,
    /// `U1(t_k)·U1(t_{k−1})` after sign chaining (1 at the first sample).
    pub continuity: f64,
    /// In-plane eigenvalue gap over `I`.
    pub gap: f64,
}

/// Reduced coordinates and eigenframe along an oriented trajectory.
#[derive(Clone, Debug)]
pub struct GaugeTrajectory {
    pub otr: OrientedTrajectory,
    pub j0: Vec3,
    samples: Vec<GaugeSample>,
    /// Sign-chained `U1` at the samples and refinement points.
    knots: Vec<(f64, Vec3)>,
    /// Constant rotation of the in-plane axes about `n` (gauge choice).
    offset: f64,
}

impl GaugeTrajectory {
    pub fn samples(&self) -> &[GaugeSample] {
        &self.samples
    }

    pub fn min_continuity(&self) -> f64 {
        self.knots.windows(2).map(|w| w[0].1.dot(&w[1].1)).fold(1.0, f64::min)
    }

    pub fn min_gap(&self) -> f64 {
        self.samples.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min)
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// The same trajectory in the gauge whose in-plane axes are turned by
    /// `gamma` about `n`; `θ2` shifts by `−gamma`. The turned axes are no longer
    /// principal axes.
    pub fn with_frame_offset(mut self, gamma: f64) -> Self {
        let turn = |f: &BodyFrame| turned(f, gamma);
        for smp in &mut self.samples {
            smp.frame = turn(&smp.frame);
            smp.point.theta2 -= gamma;
        }
        for (t, u) in &mut self.knots {
            let n = self.otr.normal_at(*t);
            *u = *u * gamma.cos() + n.cross(u) * gamma.sin();
        }
        self.offset += gamma;
        self
    }

    fn guide(&self, t: f64) -> Vec3 {
        if self.knots.len() < 2 {
            return self.knots[0].1;
        }
        let k = self.knots.partition_point(|(tk, _)| *tk <= t).saturating_sub(1).min(self.knots.len() - 2);
        let (ta, ua) = self.knots[k];
        let (tb, ub) = self.knots[k + 1];
        let s = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        ua * (1.0 - s) + ub * s
    }

    /// Raw eigenframe at `t` with the degeneracy check.
    fn raw_frame(&self, t: f64) -> Result<(BodyFrame, State)> {
        let s = self.otr.trajectory.state_at(t);
        let n = self.otr.normal_at(t);
        let frame = checked_frame(&s.config, &n, &self.otr.trajectory.masses, t)?;
        Ok((if self.offset == 0.0 { frame } else { turned(&frame, self.offset) }, s))
    }

    /// Sign-chained eigenframe at `t`.
    pub fn frame_at(&self, t: f64) -> Result<BodyFrame> {
        let (frame, _) = self.raw_frame(t)?;
        Ok(if frame.u1.dot(&self.guide(t)) >= 0.0 { frame } else { frame.flipped() })
    }

    /// Reduced point at `t` with principal-value angles.
    pub fn reduced_at(&self, t: f64) -> Result<ReducedPoint> {
        let frame = self.frame_at(t)?;
        let shape = self.otr.shape_at(t)?;
        let (z2, theta2) = fiber_point(&frame, &self.j0);
        Ok(ReducedPoint { z1: shape.z1, theta1: shape.theta1, z2, theta2: theta2.unwrap_or(0.0) })
    }

    /// The two parts of the rate of `β = J0(½ z1 z2 dθ1 + (z2 − 1) dθ2)` at `t`:
    /// `(½ J0 z1 z2 θ̇1, J0 (z2 − 1) θ̇2)`.
    ///
    /// The fiber part uses `J0(z2 − 1)θ̇2 = −(b1ḃ2 − b2ḃ1)/(J0 + b3)` with
    /// `b = (J0·U1, J0·U2, J0·n)`, which does not depend on the sign of `U1`
    /// and stays regular at `z2 = 1`.
    pub fn beta_rates(&self, t: f64) -> Result<(f64, f64)> {
        self.beta_rates_in(t, false)
    }

    /// As [`beta_rates`](Self::beta_rates), with the fiber part optionally in the
    /// south-pole form `J0(z2 + 1)θ̇2 = (b1ḃ2 − b2ḃ1)/(J0 − b3)`, regular at `z2 = −1`.
    pub fn beta_rates_in(&self, t: f64, south: bool) -> Result<(f64, f64)> {
        let (frame, s) = self.raw_frame(t)?;
        let m = &self.otr.trajectory.masses;
        let (w, dw) = self.otr.shape_velocity_at(t)?;
        let jn = self.j0.norm();
        let b = frame.body_components(&self.j0);
        let z1 = 2.0 * w.z;
        let z2 = b.z / jn;
        let shape = 0.5 * jn * z1 * z2 * theta1_rate(&w, &dw);
        let (du1, du2, _) = if self.offset == 0.0 {
            frame_rates(&frame, &s, m)
        } else {
            // rates are those of the principal axes turned by the same constant angle
            let principal = turned(&frame, -self.offset);
            let (d1, d2, dn) = frame_rates(&principal, &s, m);
            let (c, sn) = (self.offset.cos(), self.offset.sin());
            (d1 * c + d2 * sn, d2 * c - d1 * sn, dn)
        };
        let (db1, db2) = (self.j0.dot(&du1), self.j0.dot(&du2));
        let den = if south { jn - b.z } else { jn + b.z };
        if den <= 1e-12 * jn {
            return Err(Error::PreconditionViolated(format!("angular momentum along the normal at t = {t}")));
        }
        let cross = b.x * db2 - b.y * db1;
        let fiber = if south { cross / den } else { -cross / den };
        Ok((shape, fiber))
    }
}

fn turned(f: &BodyFrame, gamma: f64) -> BodyFrame {
    let (c, s) = (gamma.cos(), gamma.sin());
    BodyFrame { u1: f.u1 * c + f.u2 * s, u2: f.u2 * c - f.u1 * s, ..*f }
}

fn checked_frame(q: &Configuration, n: &Vec3, m: &Masses, t: f64) -> Result<BodyFrame> {
    let frame = body_frame(q, n, m)?;
    let gap = frame.gap() / (frame.lambda1 + frame.lambda2);
    if gap < DEGENERACY_FLOOR {
        return Err(Error::EigenframeDegenerate { t, gap });
    }
    Ok(frame)
}

/// Tracks the eigenframe and reduced coordinates along `otr`.
pub fn eigenframe_track(otr: &OrientedTrajectory, j0: &Vec3) -> Result<GaugeTrajectory> {
    if !(j0.norm() > 0.0) {
        return Err(Error::PreconditionViolated("eigenframe tracking needs a nonzero angular momentum".into()));
    }
    let tr = &otr.trajectory;
    let m = tr.masses;
    let mut samples: Vec<GaugeSample> = Vec::with_capacity(tr.len());
    let mut knots: Vec<(f64, Vec3)> = Vec::with_capacity(tr.len());
    let mut theta2_last = 0.0;
    let mut theta2_raw_last: Option<f64> = None;
    for (k, smp) in tr.samples().iter().enumerate() {
        let t = smp.t;
        let n = otr.sample_normals()[k];
        let mut frame = checked_frame(&smp.state.config, &n, &m, t)?;
        let mut continuity = 1.0;
        if let Some(&(tp, up)) = knots.last() {
            let at = |tt: f64| -> Result<BodyFrame> {
                let q = tr.config_at(tt);
                checked_frame(&q, &otr.normal_at(tt), &m, tt)
            };
            let u = chain_u1(&mut knots, &at, tp, up, t, frame.u1, 0)?;
            if u.dot(&frame.u1) < 0.0 {
                frame = frame.flipped();
            }
            continuity = frame.u1.dot(&knots.last().unwrap().1);
        }
        knots.push((t, frame.u1));
        let shape = crate::shape::shape_of_config(&smp.state.config, &n, &m)?;
        let (z2, theta2) = fiber_point(&frame, j0);
        let theta1 = match samples.last() {
            Some(prev) => prev.point.theta1 + wrap_angle(shape.theta1 - prev.point.theta1),
            None => shape.theta1,
        };
        let theta2 = match (theta2, theta2_raw_last) {
            (Some(raw), Some(last_raw)) => {
                theta2_last += wrap_angle(raw - last_raw);
                theta2_raw_last = Some(raw);
                theta2_last
            }
            (Some(raw), None) => {
                // first well-defined value; earlier samples were frozen at 0
                theta2_last = if samples.is_empty() { raw } else { theta2_last };
                theta2_raw_last = Some(raw);
                theta2_last
            }
            (None, _) => theta2_last,
        };
        samples.push(GaugeSample {
            t,
            point: ReducedPoint { z1: shape.z1, theta1, z2, theta2 },
            frame,
            continuity,
            gap: frame.gap() / (frame.lambda1 + frame.lambda2),
        });
    }
    Ok(GaugeTrajectory { otr: otr.clone(), j0: *j0, samples, knots, offset: 0.0 })
}

/// Chains the sign of `u` at `t` to the knot `(tp, up)`, inserting bisection
/// knots while consecutive directions are far apart. Returns the chained `u`.
fn chain_u1<F>(knots: &mut Vec<(f64, Vec3)>, at: &F, tp: f64, up: Vec3, t: f64, u: Vec3, depth: u32) -> Result<Vec3>
where
    F: Fn(f64) -> Result<BodyFrame>,
{
    let u = if u.dot(&up) >= 0.0 { u } else { -u };
    if u.dot(&up) >= CHAIN_DOT || depth >= MAX_REFINE {
        return Ok(u);
    }
    let tm = 0.5 * (tp + t);
    let um = chain_u1(knots, at, tp, up, tm, at(tm)?.u1, depth + 1)?;
    knots.push((tm, um));
    chain_u1(knots, at, tm, um, t, u, depth + 1)
}
