//! Dormand–Prince 5(4) with step-size control, plus fixed-step Störmer–Verlet.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Adaptive embedded Runge–Kutta 5(4).
    Dopri5,
    /// Fixed-step kick-drift-kick leapfrog with step `max_step`.
    Verlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Spacing of resampled output for archives and plots; 0 keeps the raw steps.
    pub output_spacing: f64,
    /// Allowed `|E(t) − E(0)|/|E(0)|`.
    pub energy_budget: f64,
    /// Allowed `‖J(t) − J(0)‖/(1 + ‖J(0)‖)`.
    pub momentum_budget: f64,
    /// Abort when `I < floor·I(0)`.
    pub triple_collision_floor: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Dopri5,
            rtol: 1e-10,
            atol: 1e-12,
            max_step: 0.05,
            output_spacing: 0.0,
            energy_budget: 1e-7,
            momentum_budget: 1e-7,
            triple_collision_floor: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        IntegratorConfig { rtol: tol, atol: tol * 1e-2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.rtol) || !positive(self.atol) || !positive(self.max_step) {
            return Err(Error::Config("integrator tolerances and max_step must be positive".into()));
        }
        if !(self.output_spacing >= 0.0) || !positive(self.energy_budget) || !positive(self.momentum_budget) {
            return Err(Error::Config("output spacing and drift budgets must be non-negative / positive".into()));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// What the step observer wants after an accepted step.
pub enum Control {
    Continue,
    Stop,
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`, calling `observe(t, y)`
/// after every accepted step (and once at `t0`).
pub fn dopri5<F, O>(mut f: F, t0: f64, y0: &[f64], t1: f64, cfg: &IntegratorConfig, mut observe: O) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Result<Control>,
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    if let Control::Stop = observe(t, &y)? {
        return Ok(());
    }
    if t1 <= t0 {
        return Ok(());
    }
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k1)?;

    let mut h = initial_step(&mut f, t, &y, &k1, cfg)?.min(cfg.max_step).min(t1 - t0);
    let mut last_err: f64 = 1e-4;
    let mut rejected = false;
    let min_step = 1e-14 * (t1 - t0).abs().max(1.0);
    loop {
        if h < min_step {
            return Err(Error::StepFailure { t, reason: format!("step size {h:.3e} below minimum") });
        }
        let last = t + h >= t1 * (1.0 - 1e-15) - 1e-300;
        if last {
            h = t1 - t;
        }
        for i in 0..n {
            ytmp[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ytmp, &mut k2)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ytmp, &mut k3)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ytmp, &mut k4)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ytmp, &mut k5)?;
        for i in 0..n {
            ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ytmp, &mut k6)?;
        for i in 0..n {
            ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t + h, &ynew, &mut k7)?;
        let mut err2 = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = cfg.atol + cfg.rtol * y[i].abs().max(ynew[i].abs());
            err2 += (e / sc) * (e / sc);
        }
        let err = (err2 / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            rejected = true;
            continue;
        }
        if err <= 1.0 {
            // PI controller (Gustafsson), exponents as in Hairer's DOPRI5.
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.17) * last_err.powf(0.04)).clamp(0.2, 5.0) };
            let fac = if rejected { fac.min(1.0) } else { fac };
            last_err = err.max(1e-4);
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            rejected = false;
            if let Control::Stop = observe(t, &y)? {
                return Ok(());
            }
            if last {
                return Ok(());
            }
            h = (h * fac).min(cfg.max_step);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            rejected = true;
        }
    }
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], cfg: &IntegratorConfig) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|v| cfg.atol + cfg.rtol * v.abs()).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / n as f64).sqrt();
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; n];
    f(t + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    Ok((100.0 * h0).min(h1))
}

/// Kick-drift-kick leapfrog for `q'' = a(q)` with `y = [q, v]`.
pub fn verlet<A, O>(mut accel: A, t0: f64, y0: &[f64], t1: f64, step: f64, mut observe: O) -> Result<()>
where
    A: FnMut(&[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Result<Control>,
{
    let n = y0.len() / 2;
    let mut y = y0.to_vec();
    let mut a = vec![0.0; n];
    let mut t = t0;
    if let Control::Stop = observe(t, &y)? {
        return Ok(());
    }
    if t1 <= t0 {
        return Ok(());
    }
    let steps = ((t1 - t0) / step).ceil().max(1.0) as usize;
    let h = (t1 - t0) / steps as f64;
    accel(&y[..n], &mut a)?;
    for k in 0..steps {
        for i in 0..n {
            y[n + i] += 0.5 * h * a[i];
        }
        for i in 0..n {
            y[i] += h * y[n + i];
        }
        accel(&y[..n], &mut a)?;
        for i in 0..n {
            y[n + i] += 0.5 * h * a[i];
        }
        t = if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h };
        if let Control::Stop = observe(t, &y)? {
            return Ok(());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    fn final_error(tol: f64) -> (f64, usize) {
        let cfg = IntegratorConfig { rtol: tol, atol: tol, max_step: 10.0, ..Default::default() };
        let mut last = (0.0, vec![]);
        let mut steps = 0;
        dopri5(oscillator, 0.0, &[1.0, 0.0], 10.0, &cfg, |t, y| {
            last = (t, y.to_vec());
            steps += 1;
            Ok(Control::Continue)
        })
        .unwrap();
        assert_eq!(last.0, 10.0);
        ((last.1[0] - 10f64.cos()).abs().max((last.1[1] + 10f64.sin()).abs()), steps)
    }

    #[test]
    fn error_tracks_tolerance() {
        let (e6, n6) = final_error(1e-6);
        let (e10, n10) = final_error(1e-10);
        assert!(e6 < 1e-4, "{e6}");
        assert!(e10 < 1e-8, "{e10}");
        assert!(e10 < e6);
        // fifth order: 1e4 tighter tolerance costs about 10^(4/5) ≈ 6x steps
        let ratio = n10 as f64 / n6 as f64;
        assert!(ratio > 3.0 && ratio < 12.0, "{ratio}");
    }

    #[test]
    fn verlet_is_second_order() {
        let run = |h: f64| {
            let mut out = vec![];
            verlet(
                |q, a| {
                    a[0] = -q[0];
                    Ok(())
                },
                0.0,
                &[1.0, 0.0],
                1.0,
                h,
                |_, y| {
                    out = y.to_vec();
                    Ok(Control::Continue)
                },
            )
            .unwrap();
            (out[0] - 1f64.cos()).abs()
        };
        let r = run(0.01) / run(0.005);
        assert!((r - 4.0).abs() < 0.1, "{r}");
    }

    #[test]
    fn observer_can_stop() {
        let cfg = IntegratorConfig::default();
        let mut count = 0;
        dopri5(oscillator, 0.0, &[1.0, 0.0], 100.0, &cfg, |_, _| {
            count += 1;
            Ok(if count == 5 { Control::Stop } else { Control::Continue })
        })
        .unwrap();
        assert_eq!(count, 5);
    }
}
