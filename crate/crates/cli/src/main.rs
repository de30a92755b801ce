#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddlv::io::{self, OutputFormat};
use ddlv::sensitivity::{entangled_benchmark, optimal_working_point, steepest_point};
use ddlv::sequence::{fringe_grid, linspace, Fringe};
use ddlv::sidereal::{bound_c02, fit_harmonics, Confidence};
use ddlv::species::{default_species, find_species, parse_species};
use ddlv::{HalfInt, SpinSystem};

#[derive(Parser, Debug)]
#[command(name = "ddlv", version, about = "Dynamical-decoupling tensor-shift simulator")]
struct Cli {
    /// Master seed; overrides the seed in a run configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for tables and reports.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Kv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fringe surface P(κT, φ) on a grid.
    Fringe(FringeArgs),
    /// Tensor-shift table for a species file.
    Table(TableArgs),
    /// Optimal working points and Δκ coefficients.
    Sensitivity(SensitivityArgs),
    /// Monte Carlo measurement run from a configuration file.
    Simulate(SimulateArgs),
    /// Harmonic fit of a κ record and C₀⁽²⁾ bounds.
    Fit(FitArgs),
}

fn angle(s: &str) -> Result<f64, String> {
    io::parse_angle(s).map_err(|e| e.to_string())
}

fn half(s: &str) -> Result<HalfInt, String> {
    s.parse::<HalfInt>().map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct FringeArgs {
    /// Total angular momentum, e.g. 7/2.
    #[arg(long = "J", value_parser = half)]
    j: HalfInt,
    /// Initial projection m.
    #[arg(long, value_parser = half, allow_hyphen_values = true)]
    m: HalfInt,
    /// Lower κT limit, rad.
    #[arg(long, default_value = "0", value_parser = angle, allow_hyphen_values = true)]
    kt_min: f64,
    /// Upper κT limit, rad (included).
    #[arg(long, default_value = "pi", value_parser = angle, allow_hyphen_values = true)]
    kt_max: f64,
    /// Number of κT samples.
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(1..))]
    kt_points: u32,
    /// Lower φ limit, rad.
    #[arg(long, default_value = "0", value_parser = angle, allow_hyphen_values = true)]
    phi_min: f64,
    /// Upper φ limit (excluded from the grid).
    #[arg(long, default_value = "2pi", value_parser = angle, allow_hyphen_values = true)]
    phi_max: f64,
    /// Number of φ samples.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    phi_points: u32,
    /// Also emit the 1-D fringe at this φ, with the steepest point marked.
    #[arg(long, value_parser = angle, allow_hyphen_values = true)]
    slice_phi: Option<f64>,
    /// Where to write the slice (default: `<out>.slice.csv`, or after the
    /// grid on stdout).
    #[arg(long, requires = "slice_phi")]
    slice_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Species file (default: the built-in table).
    #[arg(long)]
    species: Option<PathBuf>,
    /// C₀⁽²⁾ value the shifts are evaluated at.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    c02: f64,
}

#[derive(Args, Debug)]
struct SensitivityArgs {
    /// Total angular momentum, e.g. 7/2.
    #[arg(long = "J", value_parser = half)]
    j: HalfInt,
    /// Comma-separated projections.
    #[arg(long, value_parser = half, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    m: Vec<HalfInt>,
    /// Phase of the closing π/2 pulse, rad.
    #[arg(long, default_value = "pi", value_parser = angle, allow_hyphen_values = true)]
    phi: f64,
    /// Number of spins (ions).
    #[arg(long = "N", default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    n: u32,
    /// Total measurement time τ, s.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Ramsey time T, s.
    #[arg(long = "T", default_value_t = 1.0)]
    t: f64,
    /// Add the entangled N-ion benchmark.
    #[arg(long)]
    compare_entangled: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Run configuration (key = value).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Measurement record or κ table (CSV).
    #[arg(long)]
    record: PathBuf,
    /// Comma-separated angular frequencies (rad/s or sidereal, 2sidereal, annual, solar).
    #[arg(long, default_value = "sidereal,2sidereal")]
    freqs: String,
    /// Species label used to convert κ bounds to C₀⁽²⁾.
    #[arg(long, default_value = "Yb+")]
    species: String,
    /// Species file (default: the built-in table).
    #[arg(long)]
    species_file: Option<PathBuf>,
    /// Fit epoch, UTC seconds (default: first sample).
    #[arg(long)]
    epoch: Option<f64>,
    /// Two-sided Gaussian confidence level for the bounds.
    #[arg(long, default_value_t = 0.95, conflicts_with = "z")]
    confidence: f64,
    /// Bound width in standard errors.
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Invalid(String),
}

impl From<ddlv::Error> for Failure {
    fn from(e: ddlv::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write(path: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn format_of(cli: &Cli, default: OutputFormat) -> OutputFormat {
    match cli.format {
        Some(Format::Csv) => OutputFormat::Csv,
        Some(Format::Kv) => OutputFormat::Kv,
        None => default,
    }
}

fn cmd_fringe(cli: &Cli, a: &FringeArgs) -> Result<(), Failure> {
    if !(a.kt_max > a.kt_min) || !(a.phi_max > a.phi_min) {
        return Err(Failure::Usage("ranges need max > min".into()));
    }
    let sys = SpinSystem::new(a.j)?;
    let kt = linspace(a.kt_min, a.kt_max, a.kt_points as usize, true);
    let ph = linspace(a.phi_min, a.phi_max, a.phi_points as usize, false);
    let grid = fringe_grid(&sys, a.m, &kt, &ph)?;
    let header = format!(
        "ddlv fringe\nJ = {}\nm = {}\nkt_range = {}, {}, {} points inclusive\nphi_range = {}, {}, {} points, end excluded\nseed = none",
        a.j, a.m, a.kt_min, a.kt_max, a.kt_points, a.phi_min, a.phi_max, a.phi_points
    );
    let mut text = io::format_fringe_grid(&grid, &header);
    if let Some(phi) = a.slice_phi {
        let fringe = Fringe::new(&sys, a.m, phi)?;
        let chi_m = steepest_point(&fringe);
        let p: Vec<f64> = kt.iter().map(|&x| fringe.probability(x)).collect();
        let slice = io::format_fringe_slice(&kt, &p, phi, chi_m);
        let derived = cli.out.as_ref().map(|p| p.with_extension("slice.csv"));
        match a.slice_out.as_ref().or(derived.as_ref()) {
            Some(path) => write(Some(path), &slice)?,
            None => {
                text.push('\n');
                text.push_str(&slice);
            }
        }
    }
    write(cli.out.as_ref(), &text)
}

fn cmd_table(cli: &Cli, a: &TableArgs) -> Result<(), Failure> {
    let species = match &a.species {
        Some(p) => parse_species(&read(p)?)?,
        None => default_species(),
    };
    if species.is_empty() {
        return Err(Failure::Invalid("no species".into()));
    }
    let rows = io::shift_table(&species, a.c02)?;
    write(cli.out.as_ref(), &io::format_shift_table(&rows, a.c02, format_of(cli, OutputFormat::Csv)))
}

fn cmd_sensitivity(cli: &Cli, a: &SensitivityArgs) -> Result<(), Failure> {
    if a.m.is_empty() {
        return Err(Failure::Usage("--m needs at least one projection".into()));
    }
    let sys = SpinSystem::new(a.j)?;
    let mut reports = Vec::new();
    for &m in &a.m {
        reports.push(optimal_working_point(&sys, m, a.phi)?);
    }
    if a.compare_entangled {
        reports.push(entangled_benchmark(a.n)?);
    }
    write(cli.out.as_ref(), &io::format_sensitivity(&reports, a.n as f64, a.tau, a.t, format_of(cli, OutputFormat::Csv)))
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<(), Failure> {
    let mut cfg = io::parse_run_config(&read(&a.config)?)?;
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    let record = ddlv::run_experiment(&cfg)?;
    write(cli.out.as_ref(), &io::format_record(&record))
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> Result<(), Failure> {
    let samples = io::parse_kappa_record(&read(&a.record)?)?;
    if samples.is_empty() {
        return Err(Failure::Invalid("record has no usable samples".into()));
    }
    let freqs: Vec<f64> = a.freqs.split(',').map(io::parse_omega).collect::<Result<_, _>>()?;
    let table = match &a.species_file {
        Some(p) => parse_species(&read(p)?)?,
        None => default_species(),
    };
    let species = find_species(&table, &a.species).ok_or_else(|| Failure::Invalid(format!("unknown species '{}'", a.species)))?;
    let epoch = a.epoch.unwrap_or(samples[0].t);
    let fit = fit_harmonics(&samples, &freqs, epoch)?;
    let confidence = match a.z {
        Some(z) => Confidence::Sigma(z),
        None => Confidence::Level(a.confidence),
    };
    let z = confidence.z()?;
    let bounds = bound_c02(&fit, species, confidence)?;
    let text = match format_of(cli, OutputFormat::Kv) {
        OutputFormat::Kv => io::format_fit_report(&fit, &bounds, &species.label, z),
        OutputFormat::Csv => {
            let mut o = format!("# species = {}\n# epoch_unix_s = {epoch}\n# z = {z}\n", species.label);
            o.push_str("omega_rad_per_s,cos_amp,cos_err,sin_amp,sin_err,quadrature,quadrature_err,bound_c02\n");
            for (h, b) in fit.harmonics.iter().zip(&bounds) {
                o.push_str(&format!(
                    "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.6e}\n",
                    h.omega,
                    h.cos_amp,
                    h.cos_err,
                    h.sin_amp,
                    h.sin_err,
                    h.quadrature(),
                    h.quadrature_err(),
                    b.bound_c02
                ));
            }
            o
        }
    };
    write(cli.out.as_ref(), &text)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Fringe(a) => cmd_fringe(cli, a),
        Command::Table(a) => cmd_table(cli, a),
        Command::Sensitivity(a) => cmd_sensitivity(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global() {
            eprintln!("ddlv: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("ddlv: usage: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("ddlv: error: {msg}");
            ExitCode::from(2)
        }
    }
}
