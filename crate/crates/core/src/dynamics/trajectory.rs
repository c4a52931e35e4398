//! Integrated trajectories with dense output and conservation diagnostics.

use crate::dynamics::integrator::{dopri5, verlet, Control, IntegratorConfig, Method};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::triangle::{angular_momentum, kinetic_energy, polar_moment, Configuration, Masses, State};
use crate::Vec3;

/// One accepted integrator step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: State,
    pub accel: [Vec3; 3],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleDiagnostics {
    pub energy: f64,
    pub angular_momentum: Vec3,
    pub polar_moment: f64,
}

/// Largest conservation errors over a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriftReport {
    /// `max |E(t) − E(0)| / |E(0)|`.
    pub energy: f64,
    /// `max ‖J(t) − J(0)‖ / (1 + ‖J(0)‖)`.
    pub momentum: f64,
    /// `max ‖Σ m q‖ / size` and the same for velocities.
    pub center_of_mass: f64,
    pub energy_budget: f64,
    pub momentum_budget: f64,
    pub within_budget: bool,
}

/// Samples of a solution together with a piecewise quintic Hermite interpolant
/// built from positions, velocities and accelerations at the step ends.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub masses: Masses,
    pub potential: PotentialSpec,
    pub config: IntegratorConfig,
    samples: Vec<Sample>,
    diagnostics: Vec<SampleDiagnostics>,
}

impl Trajectory {
    /// Builds a trajectory from stored states, recomputing accelerations.
    pub fn from_states(
        masses: Masses,
        potential: PotentialSpec,
        config: IntegratorConfig,
        states: impl IntoIterator<Item = (f64, State)>,
    ) -> Result<Self> {
        let mut samples: Vec<Sample> = Vec::new();
        for (t, state) in states {
            if let Some(prev) = samples.last() {
                if !(t > prev.t) {
                    return Err(Error::PreconditionViolated(format!("sample times must increase (t = {t})")));
                }
            }
            let accel = potential.accelerations(&state.config, &masses)?;
            samples.push(Sample { t, state, accel });
        }
        if samples.is_empty() {
            return Err(Error::PreconditionViolated("trajectory has no samples".into()));
        }
        let diagnostics = samples
            .iter()
            .map(|s| diagnose(&s.state, &masses, &potential))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { masses, potential, config, samples, diagnostics })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn diagnostics(&self) -> &[SampleDiagnostics] {
        &self.diagnostics
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn initial_state(&self) -> State {
        self.samples[0].state
    }

    /// Angular momentum at the first sample.
    pub fn initial_momentum(&self) -> Vec3 {
        self.diagnostics[0].angular_momentum
    }

    /// Index `k` with `t_k ≤ t ≤ t_{k+1}` (clamped to the valid range).
    pub fn interval(&self, t: f64) -> usize {
        let n = self.samples.len();
        if n < 2 {
            return 0;
        }
        let k = self.samples.partition_point(|s| s.t <= t);
        k.saturating_sub(1).min(n - 2)
    }

    /// Dense state at `t`, which must lie in `[start_time, end_time]`.
    pub fn state_at(&self, t: f64) -> State {
        if self.samples.len() == 1 {
            return self.samples[0].state;
        }
        let k = self.interval(t);
        let (a, b) = (&self.samples[k], &self.samples[k + 1]);
        if t == a.t {
            return a.state;
        }
        if t == b.t {
            return b.state;
        }
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * s3 - s4 + 0.5 * s5;
        let d0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let d1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let d2 = s - 4.5 * s2 + 6.0 * s3 - 2.5 * s4;
        let d3 = -d0;
        let d4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let d5 = 1.5 * s2 - 4.0 * s3 + 2.5 * s4;
        let mut q = [Vec3::zeros(); 3];
        let mut v = [Vec3::zeros(); 3];
        for i in 0..3 {
            let (p0, v0, a0) = (a.state.config.0[i], a.state.velocities[i], a.accel[i]);
            let (p1, v1, a1) = (b.state.config.0[i], b.state.velocities[i], b.accel[i]);
            q[i] = p0 * h0 + v0 * (h * h1) + a0 * (h * h * h2) + p1 * h3 + v1 * (h * h4) + a1 * (h * h * h5);
            v[i] = p0 * (d0 / h) + v0 * d1 + a0 * (h * d2) + p1 * (d3 / h) + v1 * d4 + a1 * (h * d5);
        }
        State::new(Configuration(q), v)
    }

    pub fn config_at(&self, t: f64) -> Configuration {
        self.state_at(t).config
    }

    /// Conservation errors measured against the first sample.
    pub fn drift(&self) -> DriftReport {
        let d0 = &self.diagnostics[0];
        let e_scale = if d0.energy != 0.0 { d0.energy.abs() } else { 1.0 };
        let j_scale = 1.0 + d0.angular_momentum.norm();
        let mut energy: f64 = 0.0;
        let mut momentum: f64 = 0.0;
        let mut com: f64 = 0.0;
        for (s, d) in self.samples.iter().zip(&self.diagnostics) {
            energy = energy.max((d.energy - d0.energy).abs() / e_scale);
            momentum = momentum.max((d.angular_momentum - d0.angular_momentum).norm() / j_scale);
            let m = &self.masses;
            let size = s.state.config.size().max(f64::MIN_POSITIVE);
            let pc: Vec3 = (0..3).map(|a| s.state.config.0[a] * m.0[a]).sum();
            let vc: Vec3 = (0..3).map(|a| s.state.velocities[a] * m.0[a]).sum();
            com = com.max(pc.norm() / (m.total() * size)).max(vc.norm() / m.total());
        }
        DriftReport {
            energy,
            momentum,
            center_of_mass: com,
            energy_budget: self.config.energy_budget,
            momentum_budget: self.config.momentum_budget,
            within_budget: energy <= self.config.energy_budget && momentum <= self.config.momentum_budget,
        }
    }

    /// Like [`Trajectory::drift`], but fails with [`Error::DriftBudget`] on a breach.
    pub fn check_budgets(&self) -> Result<DriftReport> {
        let d = self.drift();
        if d.within_budget {
            Ok(d)
        } else {
            Err(Error::DriftBudget { energy: d.energy, momentum: d.momentum })
        }
    }

    /// The part of the trajectory on `[ta, tb]`, shifted to start at time 0.
    /// Interior samples are reused; the two ends are integrated from the nearest
    /// earlier sample so they carry integrator accuracy rather than
    /// interpolation error.
    pub fn window(&self, ta: f64, tb: f64) -> Result<Trajectory> {
        let (lo, hi) = (self.start_time(), self.end_time());
        if !(lo <= ta && ta < tb && tb <= hi) {
            return Err(Error::PreconditionViolated(format!("window [{ta}, {tb}] outside [{lo}, {hi}]")));
        }
        let mut states = vec![(0.0, self.stepped_state(ta)?)];
        for s in &self.samples {
            if s.t > ta && s.t < tb {
                states.push((s.t - ta, s.state));
            }
        }
        if tb - ta > states.last().map(|x| x.0).unwrap_or(0.0) {
            states.push((tb - ta, self.stepped_state(tb)?));
        }
        // drop samples squeezed against the new first point
        states.dedup_by(|b, a| b.0 <= a.0);
        Trajectory::from_states(self.masses, self.potential, self.config, states)
    }

    /// The state at `t` from a fresh integration off the sample at or before `t`.
    pub fn stepped_state(&self, t: f64) -> Result<State> {
        let a = &self.samples[self.interval(t)];
        if t <= a.t {
            return Ok(a.state);
        }
        if let Some(b) = self.samples.iter().find(|s| s.t == t) {
            return Ok(b.state);
        }
        let piece = integrate(&a.state, t - a.t, &self.masses, &self.potential, &self.config)?;
        Ok(piece.samples.last().map(|s| s.state).unwrap_or(a.state))
    }

    /// States at a uniform grid of spacing `dt`, always including both ends.
    pub fn resampled(&self, dt: f64) -> Vec<(f64, State)> {
        if !(dt > 0.0) {
            return self.samples.iter().map(|s| (s.t, s.state)).collect();
        }
        let (t0, t1) = (self.start_time(), self.end_time());
        let n = ((t1 - t0) / dt).floor() as usize;
        let mut out: Vec<(f64, State)> = (0..=n).map(|k| t0 + k as f64 * dt).map(|t| (t, self.state_at(t))).collect();
        if out.last().map(|(t, _)| *t < t1).unwrap_or(true) {
            out.push((t1, self.state_at(t1)));
        }
        out
    }
}

fn diagnose(s: &State, m: &Masses, spec: &PotentialSpec) -> Result<SampleDiagnostics> {
    Ok(SampleDiagnostics {
        energy: kinetic_energy(s, m) + spec.energy(&s.config, m)?,
        angular_momentum: angular_momentum(s, m),
        polar_moment: polar_moment(&s.config, m),
    })
}

fn pack(s: &State) -> Vec<f64> {
    let mut y = Vec::with_capacity(18);
    for q in &s.config.0 {
        y.extend_from_slice(q.as_slice());
    }
    for v in &s.velocities {
        y.extend_from_slice(v.as_slice());
    }
    y
}

fn unpack_config(y: &[f64]) -> Configuration {
    Configuration([0, 1, 2].map(|a| Vec3::new(y[3 * a], y[3 * a + 1], y[3 * a + 2])))
}

fn unpack(y: &[f64]) -> State {
    let v = [0, 1, 2].map(|a| Vec3::new(y[9 + 3 * a], y[9 + 3 * a + 1], y[9 + 3 * a + 2]));
    State::new(unpack_config(y), v)
}

/// Integrates Newton's equations on `[0, t1]` from `s0`.
pub fn integrate(s0: &State, t1: f64, m: &Masses, spec: &PotentialSpec, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    spec.validate()?;
    if !(t1 >= 0.0) || !t1.is_finite() {
        return Err(Error::Config(format!("duration must be a non-negative number, got {t1}")));
    }
    let i0 = polar_moment(&s0.config, m);
    if i0 <= 0.0 {
        return Err(Error::TripleCollision);
    }
    let scale = s0.config.size();
    let pc: Vec3 = (0..3).map(|a| s0.config.0[a] * m.0[a]).sum();
    let vc: Vec3 = (0..3).map(|a| s0.velocities[a] * m.0[a]).sum();
    if pc.norm() > 1e-12 * scale * m.total() || vc.norm() > 1e-12 * m.total() * (1.0 + s0.velocities.iter().map(|v| v.norm()).fold(0.0, f64::max)) {
        return Err(Error::PreconditionViolated("initial state is not in the center-of-mass frame".into()));
    }

    let mut samples: Vec<Sample> = Vec::new();
    let floor = cfg.triple_collision_floor * i0;
    let mut observe = |t: f64, y: &[f64]| -> Result<Control> {
        let state = unpack(y);
        let i = polar_moment(&state.config, m);
        if i < floor {
            return Err(Error::TripleCollisionApproach { t, ratio: i / i0 });
        }
        let accel = spec.accelerations(&state.config, m)?;
        samples.push(Sample { t, state, accel });
        Ok(Control::Continue)
    };
    let y0 = pack(s0);
    match cfg.method {
        Method::Dopri5 => {
            let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
                let acc = spec.accelerations(&unpack_config(y), m)?;
                dy[..9].copy_from_slice(&y[9..]);
                for a in 0..3 {
                    dy[9 + 3 * a..12 + 3 * a].copy_from_slice(acc[a].as_slice());
                }
                Ok(())
            };
            dopri5(rhs, 0.0, &y0, t1, cfg, &mut observe)?;
        }
        Method::Verlet => {
            let acc = |q: &[f64], out: &mut [f64]| -> Result<()> {
                let acc = spec.accelerations(&unpack_config(q), m)?;
                for a in 0..3 {
                    out[3 * a..3 * a + 3].copy_from_slice(acc[a].as_slice());
                }
                Ok(())
            };
            verlet(acc, 0.0, &y0, t1, cfg.max_step, &mut observe)?;
        }
    }
    let diagnostics = samples.iter().map(|s| diagnose(&s.state, m, spec)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { masses: *m, potential: *spec, config: *cfg, samples, diagnostics })
}

/// Rigidly rotating equilateral (Lagrange) solution with side `d` in the
/// xy-plane, turning counter-clockwise about e3. Returns the state and the rate.
pub fn lagrange_solution(m: &Masses, d: f64) -> (State, f64) {
    let raw = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(d, 0.0, 0.0), Vec3::new(0.5 * d, 0.5 * 3f64.sqrt() * d, 0.0)];
    let q = Configuration::centered(raw, m);
    let omega = (m.total() / d.powi(3)).sqrt();
    let v = q.0.map(|p| Vec3::z().cross(&p) * omega);
    (State::new(q, v), omega)
}

/// The same configuration with all velocities negated.
pub fn time_reversed(s: &State) -> State {
    State::new(s.config, s.velocities.map(|v| -v))
}
