//! Plot-ready tables from an archive: the shape-sphere trace, the fiber trace
//! with its two closing meridians, and the accumulated phases.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::gauge::{dynamic_phase_between, eigenframe_track};
use crate::harness::archive::Archive;
use crate::phase::{beta_line, GaugePotential};

/// Points per closing meridian.
const ARC_POINTS: usize = 33;

pub const SHAPE_FILE: &str = "shape_trace.dat";
pub const FIBER_FILE: &str = "fiber_trace.dat";
pub const PHASE_FILE: &str = "phase.dat";

#[derive(Clone, Debug, Default)]
pub struct PlotData {
    /// `t w1 w2 w3 z1 theta1`
    pub shape: String,
    /// `series param z2 theta2 x y z`; series is `curve`, `start_arc` or `end_arc`.
    pub fiber: String,
    /// `t dynamic shape fiber geometric`, each accumulated from the first sample.
    pub phase: String,
}

fn push_row(out: &mut String, cells: &[f64]) {
    for (k, x) in cells.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:e}");
    }
    out.push('\n');
}

fn sphere(z2: f64, theta2: f64) -> [f64; 3] {
    let r = (1.0 - z2 * z2).max(0.0).sqrt();
    [r * theta2.cos(), r * theta2.sin(), z2]
}

pub fn plot_data(archive: &Archive) -> Result<PlotData> {
    let mut out = PlotData {
        shape: "t w1 w2 w3 z1 theta1\n".into(),
        fiber: "series param z2 theta2 x y z\n".into(),
        phase: "t dynamic shape fiber geometric\n".into(),
    };
    for r in &archive.rows {
        push_row(&mut out.shape, &[r[0], r[27], r[28], r[29], r[30], r[31]]);
    }
    for r in &archive.rows {
        let [x, y, z] = sphere(r[32], r[33]);
        out.fiber.push_str("curve ");
        push_row(&mut out.fiber, &[r[0], r[32], r[33], x, y, z]);
    }
    if let (Some(first), Some(last)) = (archive.rows.first(), archive.rows.last()) {
        for (name, r) in [("start_arc", first), ("end_arc", last)] {
            let polar = r[32].clamp(-1.0, 1.0).acos();
            for k in 0..ARC_POINTS {
                let s = k as f64 / (ARC_POINTS - 1) as f64;
                let z2 = (s * polar).cos();
                let [x, y, z] = sphere(z2, r[33]);
                out.fiber.push_str(name);
                out.fiber.push(' ');
                push_row(&mut out.fiber, &[s, z2, r[33], x, y, z]);
            }
        }
    }
    if archive.rows.is_empty() {
        return Ok(out);
    }

    let otr = archive.trajectory()?;
    let tr = &otr.trajectory;
    let j0 = tr.initial_momentum();
    let jn = j0.norm();
    let gauge = if jn > 0.0 { eigenframe_track(&otr, &j0).ok() } else { None };
    let times = archive.times();
    let (mut dynamic, mut shape, mut fiber) = (0.0, 0.0, 0.0);
    push_row(&mut out.phase, &[times[0], 0.0, 0.0, 0.0, 0.0]);
    for w in times.windows(2) {
        if jn > 0.0 {
            dynamic += dynamic_phase_between(tr, &j0, w[0], w[1]).map(|e| e.value).unwrap_or(f64::NAN);
        }
        match &gauge {
            Some(gt) => match beta_line(gt, w[0], w[1], &GaugePotential::default()) {
                Ok(line) => {
                    shape += line.shape_term;
                    // the fiber increment is fixed modulo 4πJ0; keep the small representative
                    let period = 4.0 * PI * jn;
                    fiber += line.fiber_term - period * (line.fiber_term / period).round();
                }
                Err(_) => {
                    shape = f64::NAN;
                    fiber = f64::NAN;
                }
            },
            None => {
                shape = f64::NAN;
                fiber = f64::NAN;
            }
        }
        push_row(&mut out.phase, &[w[1], dynamic, shape, fiber, shape + fiber]);
    }
    Ok(out)
}

/// Writes the three tables into `dir` and returns their paths.
pub fn write_plot_data(dir: &Path, data: &PlotData) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, text) in [(SHAPE_FILE, &data.shape), (FIBER_FILE, &data.fiber), (PHASE_FILE, &data.phase)] {
        let p = dir.join(name);
        std::fs::write(&p, text)?;
        paths.push(p);
    }
    Ok(paths)
}
