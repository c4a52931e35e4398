//! Pairwise potentials. Gravitational constant is 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::{Configuration, Masses};
use crate::Vec3;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialKind {
    Newtonian,
    /// `V_ij = −m_i m_j r^(−exponent)`; exponent 1 is Newtonian, 0 is constant.
    PowerLaw { exponent: f64 },
}

/// Pairwise potential with optional Plummer softening `r → √(r² + ε²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub kind: PotentialKind,
    #[serde(default)]
    pub softening: f64,
    /// Pair distances below this raise [`Error::BinaryCollision`].
    #[serde(default = "default_floor")]
    pub collision_floor: f64,
}

fn default_floor() -> f64 {
    1e-9
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec { kind: PotentialKind::Newtonian, softening: 0.0, collision_floor: default_floor() }
    }
}

impl PotentialSpec {
    pub fn newtonian() -> Self {
        Self::default()
    }

    pub fn power_law(exponent: f64) -> Self {
        PotentialSpec { kind: PotentialKind::PowerLaw { exponent }, ..Self::default() }
    }

    pub fn exponent(&self) -> f64 {
        match self.kind {
            PotentialKind::Newtonian => 1.0,
            PotentialKind::PowerLaw { exponent } => exponent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.softening >= 0.0) || !self.softening.is_finite() {
            return Err(Error::Config("softening must be a non-negative number".into()));
        }
        if !(self.collision_floor >= 0.0) {
            return Err(Error::Config("collision_floor must be non-negative".into()));
        }
        if !self.exponent().is_finite() {
            return Err(Error::Config("power-law exponent must be finite".into()));
        }
        Ok(())
    }

    fn check_pairs(&self, q: &Configuration) -> Result<()> {
        for &(i, j) in &PAIRS {
            let d = (q.0[i] - q.0[j]).norm();
            if d < self.collision_floor || (d == 0.0 && self.softening == 0.0) {
                return Err(Error::BinaryCollision { i: i + 1, j: j + 1, distance: d });
            }
        }
        Ok(())
    }

    /// Potential energy, single-counting each pair.
    pub fn energy(&self, q: &Configuration, m: &Masses) -> Result<f64> {
        self.check_pairs(q)?;
        let p = self.exponent();
        let eps2 = self.softening * self.softening;
        let mut v = 0.0;
        for &(i, j) in &PAIRS {
            let s = (q.0[i] - q.0[j]).norm_squared() + eps2;
            v -= m.0[i] * m.0[j] * s.powf(-0.5 * p);
        }
        Ok(v)
    }

    /// `a_a = −(1/m_a) ∇_a V`.
    pub fn accelerations(&self, q: &Configuration, m: &Masses) -> Result<[Vec3; 3]> {
        self.check_pairs(q)?;
        let p = self.exponent();
        let eps2 = self.softening * self.softening;
        let mut acc = [Vec3::zeros(); 3];
        if p == 0.0 {
            return Ok(acc);
        }
        for &(i, j) in &PAIRS {
            let d = q.0[i] - q.0[j];
            let s = d.norm_squared() + eps2;
            // force on i: −p m_i m_j s^(−(p+2)/2) (q_i − q_j)
            let f = d * (-p * s.powf(-0.5 * (p + 2.0)));
            acc[i] += f * m.0[j];
            acc[j] -= f * m.0[i];
        }
        Ok(acc)
    }
}

/// Free-function form of [`PotentialSpec::energy`].
pub fn potential_energy(q: &Configuration, m: &Masses, spec: &PotentialSpec) -> Result<f64> {
    spec.energy(q, m)
}

/// Free-function form of [`PotentialSpec::accelerations`].
pub fn accelerations(q: &Configuration, m: &Masses, spec: &PotentialSpec) -> Result<[Vec3; 3]> {
    spec.accelerations(q, m)
}
