//! Closing the reduced curve and integrating the gauge potential
//! `β = J0(½ z1 z2 dθ1 + (z2 − 1) dθ2)`, whose differential is `Ω_J0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauge::connection::panel_breaks;
use crate::gauge::frame::{fiber_point, GaugeTrajectory};
use crate::quadrature::{integrate_panels, Estimate};
use crate::shape::shape_distance;

/// The gauge potential used for the geometric phase. `sign` is +1; the
/// validation suite flips it to check that the Stokes and reconstruction
/// tests notice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugePotential {
    pub sign: f64,
}

impl Default for GaugePotential {
    fn default() -> Self {
        GaugePotential { sign: 1.0 }
    }
}

impl GaugePotential {
    pub fn sign_flipped() -> Self {
        GaugePotential { sign: -1.0 }
    }

    /// `β` evaluated on a chart velocity `(ż1, θ̇1, ż2, θ̇2)` at `(z1, θ1, z2, θ2)`.
    pub fn eval(&self, j0: f64, p: [f64; 4], dp: [f64; 4]) -> f64 {
        let [z1, _, z2, _] = p;
        self.sign * j0 * (0.5 * z1 * z2 * dp[1] + (z2 - 1.0) * dp[3])
    }

    /// `Ω_J0 = J0(½ d(z1z2)∧dθ1 + dz2∧dθ2)` on two chart tangent vectors.
    pub fn curvature(&self, j0: f64, p: [f64; 4], a: [f64; 4], b: [f64; 4]) -> f64 {
        let [z1, _, z2, _] = p;
        let dzz = |v: [f64; 4]| z2 * v[0] + z1 * v[2];
        j0 * (0.5 * (dzz(a) * b[1] - dzz(b) * a[1]) + (a[2] * b[3] - b[2] * a[3]))
    }
}

/// A meridian arc in one fiber sphere from the north pole `z2 = 1` to `z2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosingArc {
    pub z1: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub z2: f64,
    /// Arc length `J0·arccos z2` on the fiber sphere of radius `J0`.
    pub length: f64,
}

impl ClosingArc {
    fn new(j0: f64, z1: f64, theta1: f64, z2: f64, theta2: f64) -> Self {
        ClosingArc { z1, theta1, theta2, z2, length: j0 * z2.clamp(-1.0, 1.0).acos() }
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0.0
    }
}

/// Reduced curve over `[0, t*]` closed by two meridian arcs through the north pole.
#[derive(Clone, Debug)]
pub struct ClosedReducedLoop {
    pub gauge: GaugeTrajectory,
    pub t_end: f64,
    /// North pole to the curve's start.
    pub start_arc: ClosingArc,
    /// Curve's end back to the north pole.
    pub end_arc: ClosingArc,
    /// Shape-sphere distance between the curve's endpoints.
    pub shape_gap: f64,
}

/// Closes the reduced curve of `gt` on `[start, t_end]`; the shape must return
/// to within `tol` (great-circle distance on the radius-½ sphere).
pub fn close_reduced_loop(gt: &GaugeTrajectory, t_end: f64, tol: f64) -> Result<ClosedReducedLoop> {
    let t0 = gt.start_time();
    if !(t_end > t0 && t_end <= gt.end_time()) {
        return Err(Error::PreconditionViolated(format!("loop end {t_end} outside the gauge trajectory")));
    }
    let s0 = gt.otr.shape_at(t0)?;
    let s1 = gt.otr.shape_at(t_end)?;
    let distance = shape_distance(&s0, &s1);
    if distance > tol {
        return Err(Error::ShapeNotClosed { distance });
    }
    let j0 = gt.j0.norm();
    let p0 = gt.reduced_at(t0)?;
    let p1 = gt.reduced_at(t_end)?;
    Ok(ClosedReducedLoop {
        gauge: gt.clone(),
        t_end,
        start_arc: ClosingArc::new(j0, p0.z1, p0.theta1, p0.z2, p0.theta2),
        end_arc: ClosingArc::new(j0, p1.z1, p1.theta1, p1.z2, p1.theta2),
        shape_gap: distance,
    })
}

/// The geometric-phase line integral split into its two terms.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct GeometricLine {
    /// `∫ ½ J0 z1 z2 dθ1`.
    pub shape_term: f64,
    /// `∫ J0 (z2 − 1) dθ2`.
    pub fiber_term: f64,
    /// Sum of the two.
    pub value: f64,
    pub error: f64,
}

/// `∮β` over the closed loop. The meridian arcs have `dθ1 = dθ2 = 0` and add
/// nothing; the curve part is integrated adaptively between integrator steps.
pub fn geometric_phase_line(lp: &ClosedReducedLoop, potential: &GaugePotential) -> Result<GeometricLine> {
    beta_line(&lp.gauge, lp.gauge.start_time(), lp.t_end, potential)
}

/// `∫β` along the reduced curve of `gt` on `[ta, tb]`, not closed.
///
/// Panels where the fiber point dips into the southern hemisphere integrate the
/// fiber part in the south-pole form and convert back with `−2J0·Δθ2`. The
/// conversion fixes the value only up to multiples of `4πJ0`, which do not
/// change the reconstructed angle.
pub fn beta_line(gt: &GaugeTrajectory, ta: f64, tb: f64, potential: &GaugePotential) -> Result<GeometricLine> {
    let breaks = panel_breaks(&gt.otr.trajectory, ta, tb);
    let j0 = gt.j0.norm();
    let abs_tol = 1e-12 * j0;
    let mut failure = None;

    let mut f = |t: f64| match gt.beta_rates(t) {
        Ok((a, _)) => a,
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    };
    let shape = integrate_panels(&mut f, &breaks, abs_tol, 1e-12);

    let mut south = Vec::with_capacity(breaks.len().saturating_sub(1));
    for w in breaks.windows(2) {
        let mut low = false;
        for t in [w[0], 0.5 * (w[0] + w[1]), w[1]] {
            low |= gt.reduced_at(t)?.z2 < 0.0;
        }
        south.push(low);
    }
    let mut fiber = Estimate::default();
    let mut k = 0;
    while k < south.len() {
        let run = south[k..].iter().take_while(|&&x| x == south[k]).count();
        let seg = &breaks[k..=k + run];
        let mut f = |t: f64| match gt.beta_rates_in(t, south[k]) {
            Ok((_, b)) => b,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let mut part = integrate_panels(&mut f, seg, abs_tol, 1e-12);
        if south[k] {
            let angle = |t: f64| -> Result<f64> {
                let frame = gt.frame_at(t)?;
                fiber_point(&frame, &gt.j0).1.ok_or_else(|| {
                    Error::PreconditionViolated(format!("fiber angle undefined at a gauge switch, t = {t}"))
                })
            };
            part.value -= 2.0 * j0 * (angle(seg[run])? - angle(seg[0])?);
        }
        fiber = fiber + part;
        k += run;
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let sign = potential.sign;
    Ok(GeometricLine {
        shape_term: sign * shape.value,
        fiber_term: sign * fiber.value,
        value: sign * (shape.value + fiber.value),
        error: shape.error + fiber.error,
    })
}

/// A parametrized surface `[0,1]² → (z1, θ1, z2, θ2)` with partial derivatives.
pub trait ChartSurface {
    fn point(&self, u: f64, v: f64) -> [f64; 4];
    fn du(&self, u: f64, v: f64) -> [f64; 4];
    fn dv(&self, u: f64, v: f64) -> [f64; 4];
}

/// Bilinear interpolation of four chart points, corners in counter-clockwise
/// order `(0,0), (1,0), (1,1), (0,1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearPatch {
    pub corners: [[f64; 4]; 4],
}

impl BilinearPatch {
    /// A skewed square of half-width `size` around `c` with corners jittered by
    /// up to `0.2·size` per coordinate.
    pub fn jittered<R: rand::Rng + ?Sized>(c: [f64; 4], size: f64, rng: &mut R) -> Self {
        let mut corner = |su: f64, sv: f64| -> [f64; 4] {
            let e1 = [1.0, 0.4, -0.3, 0.2];
            let e2 = [0.2, -0.5, 1.0, 0.7];
            std::array::from_fn(|k| c[k] + size * (su * e1[k] + sv * e2[k]) + size * 0.2 * rng.random_range(-1.0..1.0))
        };
        BilinearPatch { corners: [corner(-1.0, -1.0), corner(1.0, -1.0), corner(1.0, 1.0), corner(-1.0, 1.0)] }
    }
}

impl ChartSurface for BilinearPatch {
    fn point(&self, u: f64, v: f64) -> [f64; 4] {
        let [a, b, c, d] = self.corners;
        std::array::from_fn(|k| (1.0 - u) * (1.0 - v) * a[k] + u * (1.0 - v) * b[k] + u * v * c[k] + (1.0 - u) * v * d[k])
    }

    fn du(&self, _u: f64, v: f64) -> [f64; 4] {
        let [a, b, c, d] = self.corners;
        std::array::from_fn(|k| (1.0 - v) * (b[k] - a[k]) + v * (c[k] - d[k]))
    }

    fn dv(&self, u: f64, _v: f64) -> [f64; 4] {
        let [a, b, c, d] = self.corners;
        std::array::from_fn(|k| (1.0 - u) * (d[k] - a[k]) + u * (c[k] - b[k]))
    }
}

fn check_chart(p: [f64; 4]) -> Result<()> {
    let ok = |z: f64| z.is_finite() && z > -1.0 && z < 1.0;
    if !ok(p[0]) || !ok(p[2]) || !p[1].is_finite() || !p[3].is_finite() {
        return Err(Error::ChartViolation(format!("point (z1, θ1, z2, θ2) = {p:?} is outside the open chart")));
    }
    Ok(())
}

/// `∫∫ Ω_J0` over the surface by tensor Gauss–Legendre with `n` nodes per side
/// (error from comparing with `2n`).
pub fn omega_surface_quadrature<S: ChartSurface + ?Sized>(surface: &S, j0: f64, n: usize) -> Result<Estimate> {
    let pot = GaugePotential::default();
    let mut failure = None;
    let mut f = |u: f64, v: f64| {
        let p = surface.point(u, v);
        if let Err(e) = check_chart(p) {
            failure.get_or_insert(e);
            return 0.0;
        }
        pot.curvature(j0, p, surface.du(u, v), surface.dv(u, v))
    };
    let est = crate::quadrature::integrate_unit_square(&mut f, n);
    match failure {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// `∮β` around the boundary of the parameter square, counter-clockwise.
pub fn boundary_beta<S: ChartSurface + ?Sized>(surface: &S, j0: f64, potential: &GaugePotential) -> Result<Estimate> {
    let mut failure = None;
    let mut total = Estimate::default();
    // (start, direction) of each side in parameter space
    let sides: [((f64, f64), (f64, f64)); 4] = [((0.0, 0.0), (1.0, 0.0)), ((1.0, 0.0), (0.0, 1.0)), ((1.0, 1.0), (-1.0, 0.0)), ((0.0, 1.0), (0.0, -1.0))];
    for ((u0, v0), (du, dv)) in sides {
        let mut f = |s: f64| {
            let (u, v) = (u0 + du * s, v0 + dv * s);
            let p = surface.point(u, v);
            if let Err(e) = check_chart(p) {
                failure.get_or_insert(e);
                return 0.0;
            }
            let (pu, pv) = (surface.du(u, v), surface.dv(u, v));
            let dp = std::array::from_fn(|k| pu[k] * du + pv[k] * dv);
            potential.eval(j0, p, dp)
        };
        total = total + crate::quadrature::integrate(&mut f, 0.0, 1.0, 1e-15 * j0.max(1e-300), 1e-13);
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stokes_on_random_small_patches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let j0 = rng.random_range(0.1..5.0);
            let c = [rng.random_range(-0.7..0.7), rng.random_range(-3.0..3.0), rng.random_range(-0.7..0.7), rng.random_range(-3.0..3.0)];
            let patch = BilinearPatch::jittered(c, rng.random_range(0.01..0.2), &mut rng);
            let line = boundary_beta(&patch, j0, &GaugePotential::default()).unwrap();
            let area = omega_surface_quadrature(&patch, j0, 8).unwrap();
            assert!((line.value - area.value).abs() <= 1e-8 * j0, "{} vs {}", line.value, area.value);
        }
    }

    #[test]
    fn flipped_potential_breaks_stokes() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let patch = BilinearPatch::jittered([0.2, 1.0, 0.3, 0.5], 0.1, &mut rng);
        let line = boundary_beta(&patch, 1.0, &GaugePotential::sign_flipped()).unwrap();
        let area = omega_surface_quadrature(&patch, 1.0, 8).unwrap();
        assert!((line.value - area.value).abs() > 1e-4);
    }

    #[test]
    fn fiber_square_leading_term() {
        let eps = 1e-3;
        let (z1, t1, z2, t2) = (0.3, 0.4, 0.1, -0.7);
        let patch = BilinearPatch {
            corners: [[z1, t1, z2, t2], [z1, t1, z2 + eps, t2], [z1, t1, z2 + eps, t2 + eps], [z1, t1, z2, t2 + eps]],
        };
        let j0 = 2.0;
        let area = omega_surface_quadrature(&patch, j0, 4).unwrap();
        assert!((area.value - j0 * eps * eps).abs() < 1e-12);
    }

    #[test]
    fn constant_products_give_zero() {
        // z1 z2 constant and z2 constant: both terms vanish
        let patch = BilinearPatch { corners: [[0.2, 0.0, 0.5, 0.0], [0.2, 1.0, 0.5, 0.0], [0.2, 1.0, 0.5, 0.0], [0.2, 0.0, 0.5, 0.0]] };
        assert_eq!(omega_surface_quadrature(&patch, 1.0, 4).unwrap().value, 0.0);
    }

    #[test]
    fn chart_violation() {
        let patch = BilinearPatch { corners: [[0.9, 0.0, 0.0, 0.0], [1.2, 0.0, 0.0, 0.0], [1.2, 1.0, 0.0, 0.0], [0.9, 1.0, 0.0, 0.0]] };
        assert!(matches!(omega_surface_quadrature(&patch, 1.0, 4), Err(Error::ChartViolation(_))));
    }
}
