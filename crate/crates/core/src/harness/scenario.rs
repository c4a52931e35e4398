//! Scenario files: masses, initial data or a generator, potential, integrator,
//! return selection and phase tolerances. Natural units with G = 1.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{lagrange_solution, IntegratorConfig};
use crate::error::{Error, Result};
use crate::phase::ReconstructOptions;
use crate::potential::PotentialSpec;
use crate::triangle::{angular_momentum, collinearity_measure, kinetic_energy, principal_normal, Configuration, Masses, OrientedConfiguration, PlaneNormal, State};
use crate::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub masses: Masses,
    pub duration: f64,
    /// Seed for the random generators.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub returns: ReturnSpec,
    #[serde(default)]
    pub phase: PhaseSpec,
}

/// Explicit initial data. Positions and velocities are shifted to the
/// center-of-mass frame on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub positions: [[f64; 3]; 3],
    pub velocities: [[f64; 3]; 3],
    /// Orientation of the initial triangle. Defaults to the plane normal on the
    /// side of the angular momentum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// Rigidly rotating equilateral triangle of side `side` in the xy-plane.
    Lagrange {
        #[serde(default = "one")]
        side: f64,
    },
    /// Random triangle and velocities in the xy-plane with kinetic energy
    /// `virial·|V|` (bound for `virial < 1`).
    RandomPlanar {
        #[serde(default = "default_virial")]
        virial: f64,
    },
    /// As `random-planar`, with out-of-plane velocities of relative size `tilt`,
    /// which tilts the angular momentum off the triangle's normal.
    RandomSpatial {
        #[serde(default = "default_virial")]
        virial: f64,
        #[serde(default = "default_tilt")]
        tilt: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_virial() -> f64 {
    0.3
}

fn default_tilt() -> f64 {
    0.4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReturnMode {
    /// The whole run; the shape at the end must match the start.
    End,
    /// A later time at which the shape comes back to the initial shape.
    Start,
    /// A self-intersection `shape(ta) = shape(tb)` of the shape curve.
    Crossing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReturnSpec {
    pub mode: ReturnMode,
    /// Largest accepted shape gap (great-circle distance on the radius-½ sphere).
    pub tolerance: f64,
    /// Smallest `tb − ta` for crossings.
    pub min_separation: f64,
    /// Which return to use, in order of detection.
    pub select: usize,
}

impl Default for ReturnSpec {
    fn default() -> Self {
        ReturnSpec { mode: ReturnMode::Start, tolerance: 1e-6, min_separation: 0.5, select: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSpec {
    /// PASS threshold on the wrapped residual, radians.
    pub tolerance: f64,
    pub similarity_tolerance: f64,
}

impl Default for PhaseSpec {
    fn default() -> Self {
        let d = ReconstructOptions::default();
        PhaseSpec { tolerance: d.tolerance, similarity_tolerance: d.similarity_tolerance }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scenario::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn reconstruct_options(&self) -> ReconstructOptions {
        ReconstructOptions {
            tolerance: self.phase.tolerance,
            return_tolerance: self.returns.tolerance,
            similarity_tolerance: self.phase.similarity_tolerance,
            ..Default::default()
        }
    }

    /// Checks every field that can be checked without integrating.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Error::Config(format!("field `{name}`: {msg}"));
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(field("duration", "must be a non-negative number"));
        }
        match (&self.initial, &self.generator) {
            (Some(_), Some(_)) => return Err(field("generator", "give either [initial] or [generator], not both")),
            (None, None) => return Err(field("initial", "missing; give [initial] or [generator]")),
            _ => {}
        }
        if let Some(g) = &self.generator {
            match *g {
                Generator::Lagrange { side } if !(side > 0.0 && side.is_finite()) => return Err(field("generator.side", "must be positive")),
                Generator::RandomPlanar { virial } | Generator::RandomSpatial { virial, .. } if !(virial > 0.0 && virial.is_finite()) => {
                    return Err(field("generator.virial", "must be positive"))
                }
                Generator::RandomSpatial { tilt, .. } if !(tilt >= 0.0 && tilt.is_finite()) => return Err(field("generator.tilt", "must be non-negative")),
                Generator::RandomPlanar { .. } | Generator::RandomSpatial { .. } if self.seed.is_none() => {
                    return Err(field("seed", "random generators need a seed"))
                }
                _ => {}
            }
        }
        self.integrator.validate().map_err(|e| field("integrator", &e.to_string()))?;
        self.potential.validate().map_err(|e| field("potential", &e.to_string()))?;
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.returns.tolerance) {
            return Err(field("returns.tolerance", "must be positive"));
        }
        if !(self.returns.min_separation >= 0.0) {
            return Err(field("returns.min_separation", "must be non-negative"));
        }
        if !positive(self.phase.tolerance) {
            return Err(field("phase.tolerance", "must be positive"));
        }
        if !positive(self.phase.similarity_tolerance) {
            return Err(field("phase.similarity_tolerance", "must be positive"));
        }
        if let Some(init) = &self.initial {
            let all = init.positions.iter().chain(&init.velocities).flatten();
            if !all.into_iter().all(|x| x.is_finite()) {
                return Err(field("initial", "positions and velocities must be finite"));
            }
        }
        self.initial_state().map(|_| ())
    }

    /// The centered initial state and the orientation of its triangle.
    pub fn initial_state(&self) -> Result<(State, Vec3)> {
        let m = &self.masses;
        let state = match (&self.initial, &self.generator) {
            (Some(init), _) => State::centered(init.positions.map(Vec3::from), init.velocities.map(Vec3::from), m),
            (None, Some(Generator::Lagrange { side })) => lagrange_solution(m, *side).0,
            (None, Some(g)) => random_state(g, m, &self.potential, self.seed.unwrap_or(0)),
            (None, None) => return Err(Error::Config("field `initial`: missing".into())),
        };
        let q = &state.config;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let d = (q.0[a] - q.0[b]).norm();
            if d <= self.potential.collision_floor {
                return Err(Error::BinaryCollision { i: a, j: b, distance: d });
            }
        }
        let given = self.initial.as_ref().and_then(|i| i.normal);
        let normal = match given {
            Some(n) => {
                let n = Vec3::from(n);
                if !(n.norm() > 0.0) {
                    return Err(Error::Config("field `initial.normal`: must be nonzero".into()));
                }
                OrientedConfiguration::new(*q, n.normalize())
                    .map_err(|e| Error::Config(format!("field `initial.normal`: {e}")))?
                    .normal
            }
            None => default_normal(&state, m)?,
        };
        Ok((state, normal))
    }
}

/// The plane normal on the side of the angular momentum (either side if they
/// are orthogonal).
pub fn default_normal(s: &State, m: &Masses) -> Result<Vec3> {
    match principal_normal(&s.config, m)? {
        PlaneNormal::Normal(n) => Ok(if n.dot(&angular_momentum(s, m)) < 0.0 { -n } else { n }),
        PlaneNormal::Collinear(_) => Err(Error::PreconditionViolated("initial triangle is collinear; give [initial] normal".into())),
    }
}

fn random_state(g: &Generator, m: &Masses, spec: &PotentialSpec, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (virial, tilt) = match *g {
        Generator::RandomPlanar { virial } => (virial, 0.0),
        Generator::RandomSpatial { virial, tilt } => (virial, tilt),
        Generator::Lagrange { .. } => unreachable!("handled by the caller"),
    };
    let mut u = |r: f64| rng.random_range(-r..r);
    let config = loop {
        let raw = [0; 3].map(|_| Vec3::new(u(1.0), u(1.0), 0.0));
        let q = Configuration::centered(raw, m);
        let apart = (0..3).all(|a| (q.0[a] - q.0[(a + 1) % 3]).norm() > 0.3);
        if apart && collinearity_measure(&q, m).map(|c| c > 0.02).unwrap_or(false) {
            break q;
        }
    };
    let v = [0; 3].map(|_| Vec3::new(u(1.0), u(1.0), tilt * u(1.0)));
    let s = State::centered(config.0, v, m);
    let kinetic = kinetic_energy(&s, m);
    let potential = spec.energy(&s.config, m).unwrap_or(-1.0).abs();
    let scale = if kinetic > 0.0 { (virial * potential / kinetic).sqrt() } else { 0.0 };
    State::centered(s.config.0, s.velocities.map(|v| v * scale), m)
}
