use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tbphase::gauge::{Latitude, Polygon, ShapeCurve};
use tbphase::harness::{
    all_pass, exit_code, format_table, looks_like_archive, plot_data, reconstruct_run, run_scenario, run_validation, simulate, summary,
    write_plot_data, Archive, Scenario, ValidationOptions, EXIT_PASS, EXIT_TOLERANCE,
};
use tbphase::phase::{holonomy_check, HOLONOMY_TOL};
use tbphase::triangle::Masses;
use tbphase::{Error, Result, Vec3};

/// Three-body rotation reconstruction from shape and fiber data.
#[derive(Parser)]
#[command(name = "tbphase", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write its archive.
    Simulate {
        scenario: PathBuf,
        /// Archive path; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Reconstruct the rotation over a return window of a scenario or archive.
    Reconstruct {
        /// Scenario file, or an archive written by `simulate`.
        input: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(short, long)]
        report: Option<PathBuf>,
        /// Add wall-clock timings to the report.
        #[arg(long)]
        timing: bool,
        /// Suppress the human summary on stderr.
        #[arg(short, long)]
        quiet: bool,
        /// Phase residual tolerance, in radians.
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Holonomy of a closed planar shape loop under the zero-momentum lift.
    Holonomy {
        #[command(subcommand)]
        shape_loop: LoopSpec,
        /// Masses as `m1,m2,m3`.
        #[arg(long, global = true, value_parser = parse_masses, default_value = "1,1,1")]
        masses: Masses,
        /// Lift integration tolerance.
        #[arg(long, global = true, default_value_t = 1e-11)]
        lift_tolerance: f64,
    },
    /// Run the randomized property suite.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cases per property.
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Flip the sign of the gauge potential (mutation canary).
        #[arg(long)]
        inject_beta_sign_flip: bool,
    },
    /// Write plot-ready tables from an archive.
    Plotdata {
        archive: PathBuf,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
    },
}

/// Integrator and scenario overrides applied after loading.
#[derive(Args)]
struct Overrides {
    /// Relative integrator tolerance.
    #[arg(long)]
    rtol: Option<f64>,
    /// Absolute integrator tolerance.
    #[arg(long)]
    atol: Option<f64>,
    /// Seed for generated initial data.
    #[arg(long)]
    seed: Option<u64>,
    /// Run duration.
    #[arg(long)]
    duration: Option<f64>,
}

#[derive(Subcommand)]
enum LoopSpec {
    /// Circle of constant z1.
    Latitude {
        #[arg(long, allow_hyphen_values = true)]
        z1: f64,
    },
    /// Great-circle polygon; closed automatically.
    Polygon {
        /// Vertex as `z1,theta1`; repeat for each vertex.
        #[arg(long = "vertex", value_parser = parse_pair, allow_hyphen_values = true, required = true)]
        vertices: Vec<(f64, f64)>,
    },
    /// Sampled curve: one point per line, `z1 theta1` or `w1 w2 w3`.
    Curve { file: PathBuf },
}

fn parse_numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect()
}

fn parse_masses(s: &str) -> std::result::Result<Masses, String> {
    let v = parse_numbers(s)?;
    let m: [f64; 3] = v.try_into().map_err(|_| "expected three comma-separated masses".to_string())?;
    Masses::try_from(m).map_err(|e| e.to_string())
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    match parse_numbers(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err("expected `z1,theta1`".into()),
    }
}

impl Overrides {
    fn apply(&self, scn: &mut Scenario) -> Result<()> {
        if let Some(x) = self.rtol {
            scn.integrator.rtol = x;
        }
        if let Some(x) = self.atol {
            scn.integrator.atol = x;
        }
        if let Some(x) = self.seed {
            scn.seed = Some(x);
        }
        if let Some(x) = self.duration {
            scn.duration = x;
        }
        scn.validate()
    }
}

fn load_scenario(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let mut scn = Scenario::load(path)?;
    overrides.apply(&mut scn)?;
    Ok(scn)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_simulate(scenario: &Path, output: Option<&Path>, overrides: &Overrides) -> Result<i32> {
    let scn = load_scenario(scenario, overrides)?;
    let otr = simulate(&scn)?;
    let archive = Archive::from_run(&scn, &otr)?;
    emit(output, &archive.to_text()?)?;
    let d = otr.trajectory.drift();
    eprintln!(
        "{} samples to t = {}, energy drift {:.2e}, momentum drift {:.2e}{}",
        archive.rows.len(),
        otr.trajectory.end_time(),
        d.energy,
        d.momentum,
        if d.within_budget { "" } else { "  BUDGET BREACH" }
    );
    Ok(if d.within_budget { EXIT_PASS } else { EXIT_TOLERANCE })
}

fn cmd_reconstruct(input: &Path, report: Option<&Path>, timing: bool, quiet: bool, tolerance: Option<f64>, overrides: &Overrides) -> Result<i32> {
    let text = fs::read_to_string(input)?;
    let rep = if looks_like_archive(&text) {
        if overrides.rtol.is_some() || overrides.atol.is_some() || overrides.seed.is_some() || overrides.duration.is_some() {
            return Err(Error::Config("integrator and scenario overrides do not apply to an archive".into()));
        }
        let mut archive = Archive::parse(&text)?;
        if let Some(t) = tolerance {
            archive.scenario.phase.tolerance = t;
            archive.scenario.validate()?;
        }
        let otr = archive.trajectory()?;
        reconstruct_run(&archive.scenario, &otr)?
    } else {
        let mut scn = Scenario::from_toml(&text)?;
        if let Some(t) = tolerance {
            scn.phase.tolerance = t;
        }
        overrides.apply(&mut scn)?;
        run_scenario(&scn, timing)?
    };
    let json = serde_json::to_string_pretty(&rep).map_err(|e| Error::Config(e.to_string()))?;
    emit(report, &(json + "\n"))?;
    if !quiet {
        eprint!("{}", summary(&rep));
    }
    Ok(if rep.pass { EXIT_PASS } else { EXIT_TOLERANCE })
}

fn read_curve(path: &Path) -> Result<Polygon> {
    let text = fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Config(format!("{}:{}: {msg}", path.display(), k + 1));
        let v: Vec<f64> = line.split_whitespace().map(|x| x.parse::<f64>().map_err(|_| bad(format!("cannot parse {x:?}")))).collect::<Result<_>>()?;
        let w = match v.as_slice() {
            [z1, t1] => tbphase::shape::ShapePoint::from_angles(*z1, *t1).w,
            [a, b, c] => Vec3::new(*a, *b, *c),
            _ => return Err(bad(format!("expected 2 or 3 numbers, found {}", v.len()))),
        };
        points.push(w);
    }
    if points.is_empty() {
        return Err(Error::Config(format!("{}: no curve points", path.display())));
    }
    Polygon::new(points)
}

fn cmd_holonomy(spec: &LoopSpec, masses: &Masses, tol: f64) -> Result<i32> {
    let (label, curve): (String, Box<dyn ShapeCurve>) = match spec {
        LoopSpec::Latitude { z1 } => {
            if !(-1.0..=1.0).contains(z1) {
                return Err(Error::Config(format!("field `z1`: {z1} is outside [-1, 1]")));
            }
            (format!("latitude z1 = {z1}"), Box::new(Latitude { z1: *z1 }))
        }
        LoopSpec::Polygon { vertices } => {
            let mut v = vertices.clone();
            if v.first() != v.last() || v.len() == 1 {
                v.push(v[0]);
            }
            (format!("polygon with {} vertices", vertices.len()), Box::new(Polygon::from_angles(&v)?))
        }
        LoopSpec::Curve { file } => (format!("curve {}", file.display()), Box::new(read_curve(file)?)),
    };
    let rep = holonomy_check(curve.as_ref(), None, masses, tol)?;
    let json = serde_json::json!({ "loop": label, "masses": masses.0, "tolerance": HOLONOMY_TOL, "report": rep });
    println!("{}", serde_json::to_string_pretty(&json).map_err(|e| Error::Config(e.to_string()))?);
    eprintln!("{label}: holonomy {:+.12}, predicted {:+.12}, residual {:+.3e} {}", rep.holonomy, rep.predicted, rep.residual, if rep.pass { "PASS" } else { "FAIL" });
    Ok(if rep.pass { EXIT_PASS } else { EXIT_TOLERANCE })
}

fn cmd_validate(seed: u64, count: usize, flip: bool) -> Result<i32> {
    let res = run_validation(&ValidationOptions { seed, count, beta_sign_flip: flip });
    print!("{}", format_table(&res));
    Ok(if all_pass(&res) { EXIT_PASS } else { EXIT_TOLERANCE })
}

fn cmd_plotdata(archive: &Path, dir: &Path) -> Result<i32> {
    let a = Archive::parse(&fs::read_to_string(archive)?)?;
    let data = plot_data(&a)?;
    for p in write_plot_data(dir, &data)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(EXIT_PASS)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Simulate { scenario, output, overrides } => cmd_simulate(&scenario, output.as_deref(), &overrides),
        Command::Reconstruct { input, report, timing, quiet, tolerance, overrides } => {
            cmd_reconstruct(&input, report.as_deref(), timing, quiet, tolerance, &overrides)
        }
        Command::Holonomy { shape_loop, masses, lift_tolerance } => cmd_holonomy(&shape_loop, &masses, lift_tolerance),
        Command::Validate { seed, count, inject_beta_sign_flip } => cmd_validate(seed, count, inject_beta_sign_flip),
        Command::Plotdata { archive, output } => cmd_plotdata(&archive, &output),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors in the exit-code contract
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
