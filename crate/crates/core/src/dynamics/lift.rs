//! Continuous orientation of a trajectory: a unit normal n(t) chained by sign.

use crate::dynamics::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::shape::{jacobi, jacobi_of, raw_w, raw_w_rate, shape_of_config, ShapePoint};
use crate::triangle::{polar_moment, principal_normal, Masses, OrientedConfiguration, PlaneNormal, State};
use crate::Vec3;

/// Successive knot normals closer than this (in cosine) trigger refinement.
const CHAIN_DOT: f64 = 0.9;
const MAX_REFINE: u32 = 24;

/// A trajectory with a continuous choice of plane normal.
#[derive(Clone, Debug)]
pub struct OrientedTrajectory {
    pub trajectory: Trajectory,
    /// Normals at the trajectory samples, index-aligned with them.
    sample_normals: Vec<Vec3>,
    /// Sample normals plus any refinement points, sorted by time.
    knots: Vec<(f64, Vec3)>,
}

impl OrientedTrajectory {
    pub fn sample_normals(&self) -> &[Vec3] {
        &self.sample_normals
    }

    pub fn knots(&self) -> &[(f64, Vec3)] {
        &self.knots
    }

    pub fn initial_normal(&self) -> Vec3 {
        self.sample_normals[0]
    }

    fn interpolated_knot_normal(&self, t: f64) -> Vec3 {
        let k = self.knots.partition_point(|(tk, _)| *tk <= t).saturating_sub(1).min(self.knots.len().saturating_sub(2));
        if self.knots.len() < 2 {
            return self.knots[0].1;
        }
        let (ta, na) = self.knots[k];
        let (tb, nb) = self.knots[k + 1];
        let s = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        let n = na * (1.0 - s) + nb * s;
        n.normalize()
    }

    /// Continuous normal at any time in the trajectory's range.
    pub fn normal_at(&self, t: f64) -> Vec3 {
        let guide = self.interpolated_knot_normal(t);
        let q = self.trajectory.config_at(t);
        match principal_normal(&q, &self.trajectory.masses) {
            Ok(PlaneNormal::Normal(n)) => {
                if n.dot(&guide) >= 0.0 {
                    n
                } else {
                    -n
                }
            }
            Ok(PlaneNormal::Collinear(axis)) => (guide - axis * axis.dot(&guide)).normalize(),
            Err(_) => guide,
        }
    }

    pub fn oriented_at(&self, t: f64) -> OrientedConfiguration {
        OrientedConfiguration { config: self.trajectory.config_at(t), normal: self.normal_at(t) }
    }

    pub fn shape_at(&self, t: f64) -> Result<ShapePoint> {
        shape_of_config(&self.trajectory.config_at(t), &self.normal_at(t), &self.trajectory.masses)
    }

    /// Normalized shape point and its time derivative.
    pub fn shape_velocity_at(&self, t: f64) -> Result<(Vec3, Vec3)> {
        let m = &self.trajectory.masses;
        let s = self.trajectory.state_at(t);
        let n = self.normal_at(t);
        let i = polar_moment(&s.config, m);
        if !(i > 0.0) {
            return Err(Error::TripleCollision);
        }
        let idot = 2.0 * (0..3).map(|a| m.0[a] * s.config.0[a].dot(&s.velocities[a])).sum::<f64>();
        let jv = jacobi(&s.config, m);
        let (dz1, dz2) = jacobi_of(&s.velocities, m);
        let w = raw_w(&jv, &n);
        let dw = raw_w_rate(&jv, &dz1, &dz2, &n);
        Ok((w / i, dw / i - w * (idot / (i * i))))
    }
}

/// Lifts a trajectory to oriented triangles starting from the normal `n0`.
pub fn orientation_lift(tr: Trajectory, n0: &Vec3) -> Result<OrientedTrajectory> {
    let m = tr.masses;
    let t0 = tr.start_time();
    let first = match principal_normal(&tr.initial_state().config, &m)? {
        PlaneNormal::Normal(n) => n,
        PlaneNormal::Collinear(_) => return Err(Error::PersistentlyCollinear { start: t0, end: t0 }),
    };
    let n0 = n0.normalize();
    let d = first.dot(&n0);
    if d.abs() < 1.0 - 1e-8 {
        return Err(Error::PreconditionViolated("initial normal is not perpendicular to the initial triangle".into()));
    }
    let first = if d > 0.0 { first } else { -first };

    let raw = |t: f64| -> Result<PlaneNormal> { principal_normal(&tr.config_at(t), &m) };
    let mut knots: Vec<(f64, Vec3)> = vec![(t0, first)];
    let mut sample_normals: Vec<Option<Vec3>> = vec![Some(first)];
    let mut pending: Vec<usize> = Vec::new();
    let mut stuck = 0;
    let times = tr.times();
    for (k, &t) in times.iter().enumerate().skip(1) {
        match raw(t)? {
            PlaneNormal::Collinear(axis) => {
                pending.push(k);
                if stays_on_line(&tr.samples()[k].state, &axis, &m) {
                    stuck += 1;
                    if stuck >= 3 {
                        return Err(Error::PersistentlyCollinear { start: times[pending[0]], end: t });
                    }
                } else {
                    stuck = 0;
                }
                sample_normals.push(None);
            }
            PlaneNormal::Normal(n) => {
                let n = chain_to(&mut knots, &raw, t, n, 0)?;
                sample_normals.push(Some(n));
                if !pending.is_empty() {
                    fill_collinear(&tr, &mut knots, &mut sample_normals, &pending, &times)?;
                    pending.clear();
                }
                stuck = 0;
            }
        }
    }
    if !pending.is_empty() {
        fill_collinear(&tr, &mut knots, &mut sample_normals, &pending, &times)?;
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    knots.dedup_by(|a, b| a.0 == b.0);
    let sample_normals = sample_normals.into_iter().map(|n| n.expect("all samples oriented")).collect();
    Ok(OrientedTrajectory { trajectory: tr, sample_normals, knots })
}

/// Whether a collinear state's velocities keep it on a (possibly turning) line:
/// the transverse velocities are those of a rigidly turning rod.
fn stays_on_line(s: &State, axis: &Vec3, m: &Masses) -> bool {
    let along: [f64; 3] = [0, 1, 2].map(|a| s.config.0[a].dot(axis));
    let perp: [Vec3; 3] = [0, 1, 2].map(|a| s.velocities[a] - axis * s.velocities[a].dot(axis));
    let norm2: f64 = (0..3).map(|a| m.0[a] * along[a] * along[a]).sum();
    let c: Vec3 = (0..3).map(|a| perp[a] * (m.0[a] * along[a])).sum::<Vec3>() / norm2.max(f64::MIN_POSITIVE);
    let residual: f64 = (0..3).map(|a| m.0[a] * (perp[a] - c * along[a]).norm_squared()).sum();
    let scale: f64 = (0..3).map(|a| m.0[a] * s.velocities[a].norm_squared()).sum();
    residual <= 1e-10 * scale + f64::MIN_POSITIVE
}

/// Chains `n` (the raw normal at `t`) to the last knot, inserting midpoints
/// until consecutive knot normals agree to [`CHAIN_DOT`]. Returns the signed normal.
fn chain_to<F>(knots: &mut Vec<(f64, Vec3)>, raw: &F, t: f64, n: Vec3, depth: u32) -> Result<Vec3>
where
    F: Fn(f64) -> Result<PlaneNormal>,
{
    let (ta, na) = *knots.last().expect("knots start non-empty");
    let d = n.dot(&na);
    if d.abs() >= CHAIN_DOT || depth >= MAX_REFINE {
        let signed = if d >= 0.0 { n } else { -n };
        knots.push((t, signed));
        return Ok(signed);
    }
    let tm = 0.5 * (ta + t);
    if let PlaneNormal::Normal(nm) = raw(tm)? {
        chain_to(knots, raw, tm, nm, depth + 1)?;
    }
    chain_to(knots, raw, t, n, depth + 1)
}

/// Normals at collinear samples: linear interpolation between the bracketing
/// knots, projected off the line and renormalized.
fn fill_collinear(
    tr: &Trajectory,
    knots: &mut Vec<(f64, Vec3)>,
    normals: &mut [Option<Vec3>],
    pending: &[usize],
    times: &[f64],
) -> Result<()> {
    let m = tr.masses;
    for &k in pending {
        let t = times[k];
        let before = knots.iter().filter(|(tk, _)| *tk < t).max_by(|a, b| a.0.total_cmp(&b.0)).copied();
        let after = knots.iter().filter(|(tk, _)| *tk > t).min_by(|a, b| a.0.total_cmp(&b.0)).copied();
        let guide = match (before, after) {
            (Some((ta, na)), Some((tb, nb))) => {
                let s = (t - ta) / (tb - ta);
                na * (1.0 - s) + nb * s
            }
            (Some((_, n)), None) | (None, Some((_, n))) => n,
            (None, None) => return Err(Error::PersistentlyCollinear { start: t, end: t }),
        };
        let axis = match principal_normal(&tr.config_at(t), &m)? {
            PlaneNormal::Collinear(axis) => axis,
            PlaneNormal::Normal(_) => Vec3::zeros(),
        };
        let n = (guide - axis * axis.dot(&guide)).normalize();
        normals[k] = Some(n);
        knots.push((t, n));
    }
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(())
}
