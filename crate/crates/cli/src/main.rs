//! `holstein`: parameter sweeps, table verification, oracle comparison and
//! eigensystem dumps for the spin-generalized Holstein model.
//!
//! Exit codes: 0 success, 1 validation error, 2 verification failure.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use holstein_core::oracle::DEFAULT_DIMENSION_CAP;
use holstein_core::perturbation::{EnergyOrder, FinalSector};
use holstein_core::spin::table1_eigensystem;
use holstein_core::sweep::{self, parse_axis, SweepObservable, SweepSpec};
use holstein_core::tables::verify_all;
use holstein_core::{validate_params, ModelParams};

#[derive(Parser)]
#[command(name = "holstein", version, about = "Spin-generalized Holstein model sweeps and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON parameter file; missing keys take the published values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Upper bound for the automatic phonon cutoff.
    #[arg(long)]
    max_cutoff: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sector {
    All,
    Acceptor,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Zeroth,
    Second,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// pt, ps, kt, ks, pts, pts_max or b0_scan.
    #[arg(long, default_value = "pt")]
    observable: String,
    /// AXIS=START:STOP:COUNT with AXIS one of t, theta, B0, T (repeatable).
    #[arg(long = "sweep")]
    sweeps: Vec<String>,
    #[arg(long, value_enum, default_value_t = Sector::Acceptor)]
    final_sector: Sector,
    /// Energies entering the conversion phases.
    #[arg(long, value_enum, default_value_t = Order::Second)]
    energy_order: Order,
    /// Read and print times in units of 1/ω.
    #[arg(long)]
    time_in_inverse_omega: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an observable on a parameter grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check the eigenstate, rate and conversion tables entry by entry.
    VerifyTables {
        #[command(flatten)]
        common: Common,
    },
    /// Perturbative against exact evolution of the truncated Hamiltonian.
    OracleCompare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sweep: SweepArgs,
        /// Phonon levels kept by the exact solver.
        #[arg(long, default_value_t = 4)]
        oracle_cutoff: usize,
        /// Largest matrix dimension the exact solver accepts.
        #[arg(long, default_value_t = DEFAULT_DIMENSION_CAP)]
        max_dimension: usize,
        /// Relative error allowed before the first recurrence (whole grid when
        /// the recurrence precedes it).
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
    /// Print the 24 spin eigenpairs.
    DumpEigensystem {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Validation(String),
    Verification(String),
}

impl From<holstein_core::Error> for Failure {
    fn from(e: holstein_core::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

fn load_params(common: &Common) -> Result<ModelParams, Failure> {
    let mut p = match &common.config {
        Some(path) => ModelParams::from_config_file(path)?,
        None => ModelParams::paper(),
    };
    if let Some(cap) = common.max_cutoff {
        p.max_cutoff = cap;
    }
    Ok(p)
}

fn build_spec(args: &SweepArgs) -> Result<SweepSpec, Failure> {
    let observable: SweepObservable = args.observable.parse()?;
    let mut spec = SweepSpec::new(observable);
    for text in &args.sweeps {
        let (name, axis) = parse_axis(text)?;
        spec.set_axis(name, axis);
    }
    spec.final_sector = match args.final_sector {
        Sector::All => FinalSector::All,
        Sector::Acceptor => FinalSector::Acceptor,
    };
    spec.energy_order = match args.energy_order {
        Order::Zeroth => EnergyOrder::Zeroth,
        Order::Second => EnergyOrder::Second,
    };
    spec.time_in_inverse_omega = args.time_in_inverse_omega;
    spec.validate()?;
    Ok(spec)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn simulate(common: &Common, args: &SweepArgs, workers: Option<usize>, format: Format) -> Result<(), Failure> {
    let p = load_params(common)?;
    let spec = build_spec(args)?;
    let result = match workers {
        Some(w) => sweep::run_sweep_with_workers(&spec, &p, w)?,
        None => sweep::run_sweep(&spec, &p)?,
    };
    let text = match format {
        Format::Csv => result.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&result.to_json()).map_err(|e| Failure::Validation(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    emit(common, &text)?;
    let unreliable = result.unreliable_rows();
    if unreliable > 0 {
        eprintln!("warning: {unreliable} rows outside first-order validity (flag 'unreliable')");
    }
    Ok(())
}

fn verify_tables(common: &Common) -> Result<(), Failure> {
    let p = validate_params(load_params(common)?)?;
    let report = verify_all(&p)?;
    emit(common, &report.to_csv())?;
    for e in report.flagged() {
        eprintln!("warning: table {} {}: deviation {:.3e} ({})", e.table, e.entry, e.deviation, e.note);
    }
    match report.failures() {
        0 => Ok(()),
        n => Err(Failure::Verification(format!("{n} eigen-residual checks exceed the threshold"))),
    }
}

fn oracle_compare(
    common: &Common,
    args: &SweepArgs,
    cutoff: usize,
    max_dimension: usize,
    tolerance: f64,
) -> Result<(), Failure> {
    let p = load_params(common)?;
    let spec = build_spec(args)?;
    let report = sweep::oracle_compare(&spec, &p, cutoff, max_dimension)?;
    emit(common, &report.to_csv())?;
    if report.window_fallback {
        eprintln!(
            "warning: the first recurrence ({:.3e} s) precedes every grid time; errors cover the whole grid",
            report.recurrence_time
        );
    }
    if report.max_relative_error > tolerance {
        return Err(Failure::Verification(format!(
            "relative error {:.3e} exceeds {tolerance}",
            report.max_relative_error
        )));
    }
    Ok(())
}

fn dump_eigensystem(common: &Common) -> Result<(), Failure> {
    let p = validate_params(load_params(common)?)?;
    let sys = table1_eigensystem(&p);
    let mut out = String::from("q,energy_ev");
    for i in 1..=24 {
        let _ = write!(out, ",a{i}");
    }
    out.push('\n');
    for q in 0..24 {
        let _ = write!(out, "{},{:.16e}", q + 1, sys.energies[q]);
        for a in sys.state(q).iter() {
            let _ = write!(out, ",{a:.16e}");
        }
        out.push('\n');
    }
    emit(common, &out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate { common, sweep, workers, format } => simulate(common, sweep, *workers, *format),
        Command::VerifyTables { common } => verify_tables(common),
        Command::OracleCompare { common, sweep, oracle_cutoff, max_dimension, tolerance } => {
            oracle_compare(common, sweep, *oracle_cutoff, *max_dimension, *tolerance)
        }
        Command::DumpEigensystem { common } => dump_eigensystem(common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}
