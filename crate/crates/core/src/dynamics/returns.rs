//! Times at which the oriented shape comes back to an earlier value.

use crate::dynamics::lift::OrientedTrajectory;
use crate::error::Result;
use crate::shape::shape_distance;
use crate::Vec3;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Times `t* > t0` with `shape(t*) ≈ shape(t0)` within `tol` (spherical distance).
///
/// A constant-shape trajectory returns at every sample.
pub fn detect_shape_return(otr: &OrientedTrajectory, tol: f64) -> Result<Vec<f64>> {
    let tr = &otr.trajectory;
    let times = tr.times();
    if times.len() < 2 {
        return Ok(Vec::new());
    }
    let s0 = otr.shape_at(times[0])?;
    let shapes = times.iter().map(|&t| otr.shape_at(t)).collect::<Result<Vec<_>>>()?;
    let dist: Vec<f64> = shapes.iter().map(|s| shape_distance(s, &s0)).collect();
    if dist.iter().all(|&d| d < tol) {
        return Ok(times[1..].to_vec());
    }
    // skip the stretch that has not yet left the start
    let first_out = dist.iter().position(|&d| d >= tol).unwrap_or(dist.len());
    let w0 = s0.w;
    let chord2 = |t: f64| -> f64 { otr.shape_at(t).map(|s| (s.w - w0).norm_squared()).unwrap_or(f64::INFINITY) };
    let mut out: Vec<f64> = Vec::new();
    let n = times.len();
    for k in first_out..n {
        let left = dist[k - 1];
        let right = if k + 1 < n { dist[k + 1] } else { f64::INFINITY };
        if dist[k] > left || dist[k] > right {
            continue;
        }
        // the curve can dip between samples by at most the step length
        let step = shape_distance(&shapes[k], &shapes[k - 1]).max(if k + 1 < n { shape_distance(&shapes[k], &shapes[k + 1]) } else { 0.0 });
        if dist[k] > tol + step {
            continue;
        }
        let a = times[k - 1];
        let b = if k + 1 < n { times[k + 1] } else { times[k] };
        let t = golden_min(&chord2, a, b);
        let (t, d) = [t, times[k]].into_iter().map(|t| (t, chord2(t))).min_by(|x, y| x.1.total_cmp(&y.1)).unwrap();
        if d.sqrt().min(1.0).asin() < tol && out.last().map(|&p| t - p > 1e-9 * (1.0 + t.abs())).unwrap_or(true) {
            out.push(t);
        }
    }
    Ok(out)
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// A transversal self-intersection of the shape curve: `shape(ta) = shape(tb)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeCrossing {
    pub ta: f64,
    pub tb: f64,
    /// Chord distance between the two shape points after polishing.
    pub gap: f64,
    /// Sine of the angle between the two branches at the crossing.
    pub transversality: f64,
}

/// Crossings flatter than this are too ill-conditioned to polish reliably.
const MIN_TRANSVERSALITY: f64 = 0.05;

/// Self-intersections of the oriented shape curve with `tb − ta ≥ min_separation`,
/// polished by Gauss–Newton on `w(ta) − w(tb) = 0`.
pub fn find_self_intersections(otr: &OrientedTrajectory, min_separation: f64, max_count: usize) -> Result<Vec<ShapeCrossing>> {
    let times = otr.trajectory.times();
    let w: Vec<Vec3> = times.iter().map(|&t| otr.shape_at(t).map(|s| s.w)).collect::<Result<_>>()?;
    let n = w.len();
    let mut found: Vec<ShapeCrossing> = Vec::new();
    if n < 4 {
        return Ok(found);
    }
    let len: Vec<f64> = (0..n - 1).map(|i| (w[i + 1] - w[i]).norm()).collect();
    for i in 0..n - 1 {
        for j in i + 2..n - 1 {
            if times[j] - times[i + 1] < min_separation {
                continue;
            }
            if (w[i] - w[j]).norm() > len[i] + len[j] {
                continue;
            }
            let Some((s, u)) = segment_crossing(&w[i], &w[i + 1], &w[j], &w[j + 1]) else { continue };
            let ta = times[i] + s * (times[i + 1] - times[i]);
            let tb = times[j] + u * (times[j + 1] - times[j]);
            if let Some(c) = polish(otr, ta, tb)? {
                if c.tb - c.ta >= min_separation && !found.iter().any(|f| (f.ta - c.ta).abs() < 1e-8 && (f.tb - c.tb).abs() < 1e-8) {
                    found.push(c);
                    if found.len() >= max_count {
                        return Ok(found);
                    }
                }
            }
        }
    }
    Ok(found)
}

/// Crossing parameters of two short chords on the sphere, via projection to
/// the tangent plane at the first point.
fn segment_crossing(a0: &Vec3, a1: &Vec3, b0: &Vec3, b1: &Vec3) -> Option<(f64, f64)> {
    let nrm = a0.normalize();
    let e1 = crate::rigid::any_perpendicular(&nrm);
    let e2 = nrm.cross(&e1);
    let p = |v: &Vec3| (v.dot(&e1), v.dot(&e2));
    let (p0, p1, q0, q1) = (p(a0), p(a1), p(b0), p(b1));
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let d = (q1.0 - q0.0, q1.1 - q0.1);
    let den = r.0 * d.1 - r.1 * d.0;
    if den == 0.0 {
        return None;
    }
    let qp = (q0.0 - p0.0, q0.1 - p0.1);
    let s = (qp.0 * d.1 - qp.1 * d.0) / den;
    let u = (qp.0 * r.1 - qp.1 * r.0) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&u)).then_some((s, u))
}

fn polish(otr: &OrientedTrajectory, mut ta: f64, mut tb: f64) -> Result<Option<ShapeCrossing>> {
    let (lo, hi) = (otr.trajectory.start_time(), otr.trajectory.end_time());
    let mut gap = f64::INFINITY;
    let mut sin = 0.0;
    for _ in 0..40 {
        let (wa, da) = otr.shape_velocity_at(ta)?;
        let (wb, db) = otr.shape_velocity_at(tb)?;
        let f = wa - wb;
        gap = f.norm();
        sin = da.cross(&db).norm() / (da.norm() * db.norm()).max(f64::MIN_POSITIVE);
        if gap < 1e-15 {
            break;
        }
        // least squares on [da, −db]·δ = −f
        let (a11, a12, a22) = (da.dot(&da), -da.dot(&db), db.dot(&db));
        let (g1, g2) = (-da.dot(&f), db.dot(&f));
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-30 * (a11 * a22).max(f64::MIN_POSITIVE) {
            return Ok(None);
        }
        let dta = (a22 * g1 - a12 * g2) / det;
        let dtb = (a11 * g2 - a12 * g1) / det;
        ta += dta;
        tb += dtb;
        if !(ta >= lo && tb <= hi && ta < tb) {
            return Ok(None);
        }
        if dta.abs().max(dtb.abs()) < 1e-15 * (1.0 + tb.abs()) {
            let (wa, _) = otr.shape_velocity_at(ta)?;
            let (wb, _) = otr.shape_velocity_at(tb)?;
            gap = (wa - wb).norm();
            break;
        }
    }
    Ok((gap < 1e-11 && sin >= MIN_TRANSVERSALITY).then_some(ShapeCrossing { ta, tb, gap, transversality: sin }))
}
