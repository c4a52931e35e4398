//! Columnar text archives of integrated runs.
//!
//! Layout: `# key = value` metadata lines, one header line naming the columns,
//! then one whitespace-separated row per sample in shortest round-trip `{:e}`
//! notation. Unavailable values are written as `NaN`.

use std::io::Write;

use crate::dynamics::{orientation_lift, OrientedTrajectory, Trajectory};
use crate::error::{Error, Result};
use crate::gauge::eigenframe_track;
use crate::harness::scenario::Scenario;
use crate::triangle::{angular_momentum, kinetic_energy, polar_moment, Configuration, State};
use crate::Vec3;

pub const FORMAT: &str = "tbphase-archive 1";

pub const COLUMNS: [&str; 34] = [
    "t", "q1x", "q1y", "q1z", "q2x", "q2y", "q2z", "q3x", "q3y", "q3z", "v1x", "v1y", "v1z", "v2x", "v2y", "v2z", "v3x", "v3y", "v3z", "I", "E", "Jx",
    "Jy", "Jz", "nx", "ny", "nz", "w1", "w2", "w3", "z1", "theta1", "z2", "theta2",
];

pub type Row = [f64; 34];

const T: usize = 0;
const Q: usize = 1;
const V: usize = 10;
const N: usize = 24;

#[derive(Clone, Debug)]
pub struct Archive {
    pub scenario: Scenario,
    pub rows: Vec<Row>,
}

impl Archive {
    /// Tabulates `otr`: the raw integrator steps, or a uniform grid when the
    /// scenario sets `output_spacing`. A zero-duration run has no rows.
    pub fn from_run(scenario: &Scenario, otr: &OrientedTrajectory) -> Result<Self> {
        let tr = &otr.trajectory;
        if scenario.duration == 0.0 {
            return Ok(Archive { scenario: scenario.clone(), rows: Vec::new() });
        }
        let states: Vec<(f64, State)> = if tr.config.output_spacing > 0.0 {
            tr.resampled(tr.config.output_spacing)
        } else {
            tr.samples().iter().map(|s| (s.t, s.state)).collect()
        };
        let m = &tr.masses;
        let j0 = tr.initial_momentum();
        let gauge = if j0.norm() > 0.0 { eigenframe_track(otr, &j0).ok() } else { None };
        let mut rows = Vec::with_capacity(states.len());
        for (t, s) in states {
            let mut row = [f64::NAN; 34];
            row[T] = t;
            for a in 0..3 {
                row[Q + 3 * a..Q + 3 * a + 3].copy_from_slice(s.config.0[a].as_slice());
                row[V + 3 * a..V + 3 * a + 3].copy_from_slice(s.velocities[a].as_slice());
            }
            row[19] = polar_moment(&s.config, m);
            row[20] = kinetic_energy(&s, m) + tr.potential.energy(&s.config, m)?;
            row[21..24].copy_from_slice(angular_momentum(&s, m).as_slice());
            let n = otr.normal_at(t);
            row[N..N + 3].copy_from_slice(n.as_slice());
            let shape = otr.shape_at(t)?;
            row[27..30].copy_from_slice(shape.w.as_slice());
            row[30] = shape.z1;
            row[31] = shape.theta1;
            if j0.norm() > 0.0 {
                row[32] = (j0.dot(&n) / j0.norm()).clamp(-1.0, 1.0);
            }
            if let Some(gt) = &gauge {
                if let Ok(p) = gt.reduced_at(t) {
                    row[33] = p.theta2;
                }
            }
            rows.push(row);
        }
        Ok(Archive { scenario: scenario.clone(), rows })
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        let json = serde_json::to_string(&self.scenario).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(out, "# format = {FORMAT}")?;
        writeln!(out, "# version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# config_hash = {}", self.scenario.config_hash())?;
        writeln!(out, "# scenario = {json}")?;
        writeln!(out, "{}", COLUMNS.join(" "))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (k, x) in row.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{x:e}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("archive text is UTF-8"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Config(format!("archive line {line}: {msg}"));
        let mut scenario = None;
        let mut format = None;
        let mut header = false;
        let mut rows = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let ln = k + 1;
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.split_once('=') else { continue };
                match key.trim() {
                    "format" => format = Some(value.trim().to_string()),
                    "scenario" => {
                        let s: Scenario = serde_json::from_str(value.trim()).map_err(|e| bad(ln, format!("scenario: {e}")))?;
                        scenario = Some(s);
                    }
                    _ => {}
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !header {
                let names: Vec<&str> = line.split_whitespace().collect();
                if names != COLUMNS {
                    return Err(bad(ln, "header does not match the archive columns".into()));
                }
                header = true;
                continue;
            }
            let mut row = [0.0; 34];
            let mut count = 0;
            for (i, tok) in line.split_whitespace().enumerate() {
                if i >= 34 {
                    return Err(bad(ln, "too many columns".into()));
                }
                row[i] = tok.parse().map_err(|_| bad(ln, format!("column `{}`: cannot parse {tok:?}", COLUMNS[i])))?;
                count += 1;
            }
            if count != 34 {
                return Err(bad(ln, format!("expected 34 columns, found {count}")));
            }
            rows.push(row);
        }
        match format.as_deref() {
            Some(FORMAT) => {}
            Some(other) => return Err(Error::Config(format!("unsupported archive format {other:?}"))),
            None => return Err(Error::Config("not an archive: missing `# format` line".into())),
        }
        if !header {
            return Err(Error::Config("archive has no header line".into()));
        }
        let scenario = scenario.ok_or_else(|| Error::Config("archive has no `# scenario` line".into()))?;
        scenario.validate()?;
        Ok(Archive { scenario, rows })
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r[T]).collect()
    }

    /// Rebuilds the oriented trajectory from the stored states and the stored
    /// initial normal.
    pub fn trajectory(&self) -> Result<OrientedTrajectory> {
        let first = self.rows.first().ok_or_else(|| Error::PreconditionViolated("archive has no samples".into()))?;
        let s = &self.scenario;
        let states = self.rows.iter().map(|r| {
            let v3 = |k: usize| Vec3::new(r[k], r[k + 1], r[k + 2]);
            (r[T], State::new(Configuration([v3(Q), v3(Q + 3), v3(Q + 6)]), [v3(V), v3(V + 3), v3(V + 6)]))
        });
        let tr = Trajectory::from_states(s.masses, s.potential, s.integrator, states)?;
        orientation_lift(tr, &Vec3::new(first[N], first[N + 1], first[N + 2]))
    }
}

/// Whether `text` starts like an archive rather than a scenario file.
pub fn looks_like_archive(text: &str) -> bool {
    text.lines().next().map(|l| l.starts_with("# format = tbphase-archive")).unwrap_or(false)
}
