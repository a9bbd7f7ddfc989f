//! `harmsim` command-line front end.
//!
//! Exit codes: 0 success, 1 model/validation/study failure, 2 I/O or usage
//! failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{run_assessment, AssessmentConfig, DEFAULT_ORDERS};
use crate::error::Error;
use crate::format::sig9;
use crate::indices::{IndexReport, PhiOptions};
use crate::network::{load_network, parse_network, validate_topology, NetworkModel};
use crate::phasor::PhaseId;
use crate::sweep::{
    angle_range, angle_sweep, compare_points, coupled_phase_study, index_report, write_box_csv, write_index_csv,
    CoupledStudySpec, Metric, SweepSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "harmsim",
    version,
    about = "Harmonic propagation and phasor-based distortion indices for radial feeders"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a network file; prints one finding per line.
    Validate { network: PathBuf },
    /// Run the harmonic assessment and write the per-order results table.
    Solve {
        network: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Results CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// THDV, THDI, TPF, PHI-V and PHI-I at one point.
    Indices {
        network: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Bus, branch or substation id (default: substation bus).
        #[arg(long)]
        point: Option<String>,
        /// A, B, C or ALL.
        #[arg(long, default_value = "ALL")]
        phase: String,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-source phase-angle sensitivity surface.
    Sweep {
        network: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Two source ids (default: the first two in the file).
        #[arg(long, value_delimiter = ',')]
        sources: Vec<String>,
        #[command(flatten)]
        angles: AngleArgs,
        #[arg(long, default_value = "thdv")]
        metric: Metric,
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value = "B")]
        phase: PhaseId,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-phase injection study: per-phase box statistics of a metric.
    Couple {
        network: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        /// Phase the sources are reduced to.
        #[arg(long, default_value = "B")]
        phase: PhaseId,
        #[command(flatten)]
        angles: AngleArgs,
        #[arg(long, default_value = "phi_i")]
        metric: Metric,
        #[arg(long)]
        point: Option<String>,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// All indices at two points from one assessment.
    Compare {
        network: PathBuf,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        points: Vec<String>,
        #[command(flatten)]
        phi: PhiArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// Harmonic orders to solve.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ORDERS.to_vec())]
    pub orders: Vec<u32>,
    /// Fundamental power-flow tolerance (per-unit voltage change).
    #[arg(long, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Scale resistances by sqrt(h).
    #[arg(long)]
    pub skin_effect: bool,
}

impl EngineArgs {
    fn config(&self) -> Result<AssessmentConfig, Error> {
        let mut cfg = AssessmentConfig::default().with_orders(self.orders.iter().copied())?;
        cfg.power_flow_tolerance = self.tolerance;
        cfg.max_iterations = self.max_iterations;
        cfg.skin_effect = self.skin_effect;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct AngleArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub angle_start: f64,
    #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
    pub angle_stop: f64,
    #[arg(long, default_value_t = 15.0)]
    pub angle_step: f64,
}

#[derive(Debug, Args)]
pub struct PhiArgs {
    /// Start the PHI sums at the first harmonic instead of the fundamental.
    #[arg(long)]
    pub phi_skip_fundamental: bool,
}

impl PhiArgs {
    fn options(&self) -> PhiOptions {
        PhiOptions {
            include_fundamental: !self.phi_skip_fundamental,
        }
    }
}

enum Failure {
    Domain(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("cannot write {}: {e}", path.display()))
}

fn write_output(
    out: &mut dyn Write,
    path: Option<&Path>,
    render: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(io_failure(p))?;
            let mut w = BufWriter::new(file);
            render(&mut w).map_err(io_failure(p))?;
            w.flush().map_err(io_failure(p))
        }
        None => match render(out) {
            // A closed downstream pipe (`| head`) is not a failure.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            r => r.map_err(|e| Failure::Io(e.to_string())),
        },
    }
}

fn default_point(m: &NetworkModel<f64>, point: Option<String>) -> String {
    point.unwrap_or_else(|| m.substation.bus.clone())
}

fn parse_phase_filter(s: &str) -> Result<Option<Vec<PhaseId>>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    s.split(',')
        .map(|p| {
            p.parse()
                .map_err(|e: crate::phasor::ParsePhaseError| Failure::Domain(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn print_table(out: &mut dyn Write, reports: &[IndexReport<f64>], phases: Option<&[PhaseId]>) -> std::io::Result<()> {
    let cell = |v: Option<f64>| v.map(sig9).unwrap_or_else(|| "undefined".into());
    writeln!(
        out,
        "{:<12} {:<5} {:>14} {:>14} {:>14} {:>14} {:>14}",
        "point", "phase", "THDV(%)", "THDI(%)", "TPF", "PHI-V", "PHI-I"
    )?;
    for r in reports {
        for (phase, ix) in &r.per_phase {
            if phases.is_some_and(|p| !p.contains(phase)) {
                continue;
            }
            writeln!(
                out,
                "{:<12} {:<5} {:>14} {:>14} {:>14} {:>14} {:>14}",
                r.point_id,
                phase.as_str(),
                cell(ix.thdv),
                cell(ix.thdi),
                cell(ix.tpf),
                cell(ix.phi_v),
                cell(ix.phi_i)
            )?;
        }
    }
    Ok(())
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    let wr = |e: std::io::Error| Failure::Io(e.to_string());
    match cli.command {
        Command::Validate { network } => {
            let text = std::fs::read_to_string(&network)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", network.display())))?;
            let model: NetworkModel<f64> = parse_network(&text)?;
            let findings = validate_topology(&model);
            for f in &findings {
                writeln!(out, "{f}").map_err(wr)?;
            }
            Ok(if findings.is_empty() { EXIT_OK } else { EXIT_DOMAIN })
        }
        Command::Solve {
            network,
            engine,
            out: path,
        } => {
            let model: NetworkModel<f64> = load_network(&network)?;
            let cfg = engine.config()?;
            let store = run_assessment(&model, &cfg)?;
            write_output(out, path.as_deref(), |w| store.write_csv(w))?;
            if path.is_some() {
                let orders: Vec<String> = store.solutions().map(|s| s.order.to_string()).collect();
                writeln!(out, "orders solved: {}", orders.join(",")).map_err(wr)?;
                writeln!(out, "fundamental iterations: {}", store.fundamental.iterations).map_err(wr)?;
                writeln!(out, "max residual: {}", sig9(store.max_residual())).map_err(wr)?;
            }
            Ok(EXIT_OK)
        }
        Command::Indices {
            network,
            engine,
            point,
            phase,
            phi,
            out: path,
        } => {
            let model: NetworkModel<f64> = load_network(&network)?;
            let phases = parse_phase_filter(&phase)?;
            let point = default_point(&model, point);
            let store = run_assessment(&model, &engine.config()?)?;
            let report = index_report(&model, &store, &point, phi.options())?;
            if let Some(p) = &phases {
                if let Some(missing) = p.iter().find(|ph| !report.per_phase.contains_key(ph)) {
                    return Err(Failure::Domain(format!("point `{point}` has no phase {missing}")));
                }
            }
            print_table(out, std::slice::from_ref(&report), phases.as_deref()).map_err(wr)?;
            if let Some(p) = path {
                write_output(out, Some(&p), |w| write_index_csv([&report], phases.as_deref(), w))?;
            }
            Ok(EXIT_OK)
        }
        Command::Sweep {
            network,
            engine,
            sources,
            angles,
            metric,
            point,
            phase,
            phi,
            out: path,
        } => {
            let model: NetworkModel<f64> = load_network(&network)?;
            let pair = match sources.as_slice() {
                [] if model.sources.len() >= 2 => (model.sources[0].id.clone(), model.sources[1].id.clone()),
                [a, b] => (a.clone(), b.clone()),
                _ => return Err(Failure::Domain("--sources needs exactly two source ids".into())),
            };
            let mut spec = SweepSpec::new(pair, metric, default_point(&model, point), phase);
            spec.angles_deg = angle_range(angles.angle_start, angles.angle_stop, angles.angle_step)?;
            spec.phi = phi.options();
            let grid = angle_sweep(&model, &engine.config()?, &spec)?;
            write_output(out, path.as_deref(), |w| grid.write_csv(w))?;
            Ok(EXIT_OK)
        }
        Command::Couple {
            network,
            engine,
            phase,
            angles,
            metric,
            point,
            phi,
            out: path,
        } => {
            let model: NetworkModel<f64> = load_network(&network)?;
            let mut spec = CoupledStudySpec::new(phase, default_point(&model, point));
            spec.angles_deg = angle_range(angles.angle_start, angles.angle_stop, angles.angle_step)?;
            spec.metric = metric;
            spec.phi = phi.options();
            let stats = coupled_phase_study(&model, &engine.config()?, &spec)?;
            write_output(out, path.as_deref(), |w| write_box_csv(&stats, w))?;
            Ok(EXIT_OK)
        }
        Command::Compare {
            network,
            engine,
            points,
            phi,
            out: path,
        } => {
            let [a, b] = points.as_slice() else {
                return Err(Failure::Domain("--points needs exactly two point ids".into()));
            };
            let model: NetworkModel<f64> = load_network(&network)?;
            let report = compare_points(&model, &engine.config()?, a, b, phi.options())?;
            let reports = [report.points.0, report.points.1];
            match path {
                Some(p) => {
                    print_table(out, &reports, None).map_err(wr)?;
                    write_output(out, Some(&p), |w| write_index_csv(&reports, None, w))?;
                }
                None => write_index_csv(&reports, None, &mut *out).map_err(wr)?,
            }
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs one subcommand.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(Failure::Domain(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_DOMAIN
        }
        Err(Failure::Io(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_IO
        }
    }
}
