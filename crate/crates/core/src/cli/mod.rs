//! Command-line front end. Flags and JSON files resolve to the same
//! [`RunConfig`]; every run writes its artifacts with a `.meta.json` sidecar
//! that holds the resolved configuration.

mod commands;
pub mod config;
pub mod emit;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, kernel_records, verify_reports, Artifacts};
pub use config::{BenchOp, Command, ConfigError, Format, Forcing, Points, RunConfig, Scheme, Spatial, Suite};

use crate::error::Error;
use crate::kernels::KernelKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_PROBE_FAILURE: i32 = 4;

pub const THREADS_VAR: &str = "CAPUTOKIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "caputokit", version, about = "Caputo diffusion-wave kernels, solvers and estimate probes")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    /// JSON run configuration, used instead of a subcommand
    #[arg(long)]
    config: Option<PathBuf>,
    /// directory receiving every artifact
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// print the resolved configuration and exit
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Mittag-Leffler values E_{alpha,beta}(z) on real arguments
    Ml(MlArgs),
    /// Kernel table along the first axis
    Kernel(KernelArgs),
    /// Solve on the periodic box
    Solve(SolveArgs),
    /// Run estimate probes and write reports
    Verify(VerifyArgs),
    /// Timing table with per-regime medians
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// artifact file name inside --out-dir
    #[arg(long)]
    output: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    ml_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    series_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    series_terms: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    contour_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    contour_nodes: Option<usize>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// time horizon T
    #[arg(long, allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// side of the periodic box
    #[arg(long, allow_negative_numbers = true)]
    length: Option<f64>,
    /// points per axis
    #[arg(long, allow_negative_numbers = true)]
    nx: Option<usize>,
    /// time steps
    #[arg(long, allow_negative_numbers = true)]
    nt: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    p: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
}

#[derive(Debug, Args)]
struct MlArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// arguments as start:end:count or a comma list
    #[arg(long, allow_hyphen_values = true)]
    zs: Option<Points>,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// p, q or K
    #[arg(long)]
    kind: Option<KernelKind>,
    /// time derivative order
    #[arg(long, allow_negative_numbers = true)]
    n: Option<usize>,
    /// none, grad:i, hess:i:j or laplacian
    #[arg(long)]
    spatial: Option<Spatial>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    /// distances as start:end:count or a comma list
    #[arg(long, allow_hyphen_values = true)]
    xs: Option<Points>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum)]
    scheme: Option<Scheme>,
    #[arg(long, value_enum)]
    forcing: Option<Forcing>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    /// ensemble size
    #[arg(long, allow_negative_numbers = true)]
    samples: Option<usize>,
    /// envelope grid points per side
    #[arg(long, allow_negative_numbers = true)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    op: Option<BenchOp>,
    #[arg(long, allow_negative_numbers = true)]
    repeats: Option<usize>,
    #[arg(long)]
    kind: Option<KernelKind>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    zs: Option<Points>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl CommonArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.alpha, self.alpha);
        set(&mut c.d, self.d);
        set(&mut c.seed, self.seed);
        set(&mut c.format, self.format);
        if self.output.is_some() {
            c.output = self.output;
        }
        set(&mut c.ml_tol, self.ml_tol);
        set(&mut c.series_tol, self.series_tol);
        set(&mut c.series_terms, self.series_terms);
        set(&mut c.contour_tol, self.contour_tol);
        set(&mut c.contour_nodes, self.contour_nodes);
    }
}

impl GridArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.horizon, self.horizon);
        set(&mut c.length, self.length);
        set(&mut c.nx, self.nx);
        set(&mut c.nt, self.nt);
        set(&mut c.p, self.p);
        set(&mut c.q, self.q);
    }
}

impl Sub {
    fn into_config(self) -> RunConfig {
        match self {
            Sub::Ml(a) => {
                let mut c = RunConfig::for_command(Command::Ml);
                a.common.apply(&mut c);
                set(&mut c.beta, a.beta);
                set(&mut c.zs, a.zs);
                c
            }
            Sub::Kernel(a) => {
                let mut c = RunConfig::for_command(Command::Kernel);
                a.common.apply(&mut c);
                set(&mut c.kind, a.kind);
                set(&mut c.n, a.n);
                set(&mut c.spatial, a.spatial);
                set(&mut c.t, a.t);
                set(&mut c.xs, a.xs);
                c
            }
            Sub::Solve(a) => {
                let mut c = RunConfig::for_command(Command::Solve);
                a.common.apply(&mut c);
                a.grid.apply(&mut c);
                set(&mut c.scheme, a.scheme);
                set(&mut c.forcing, a.forcing);
                c
            }
            Sub::Verify(a) => {
                let mut c = RunConfig::for_command(Command::Verify);
                a.common.apply(&mut c);
                a.grid.apply(&mut c);
                set(&mut c.suite, a.suite);
                set(&mut c.samples, a.samples);
                set(&mut c.points, a.points);
                c
            }
            Sub::Bench(a) => {
                let mut c = RunConfig::for_command(Command::Bench);
                a.common.apply(&mut c);
                set(&mut c.op, a.op);
                set(&mut c.repeats, a.repeats);
                set(&mut c.kind, a.kind);
                set(&mut c.beta, a.beta);
                set(&mut c.zs, a.zs);
                c
            }
        }
    }
}

/// Failure of a run, mapped onto the exit-code taxonomy.
#[derive(Debug)]
pub enum CliError {
    /// clap usage error or help/version output
    Usage(clap::Error),
    Config(ConfigError),
    Run(Error),
    ProbeFailure(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Run(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Run(Error::Io(_)) => EXIT_IO,
            // invalid input that only the library could detect
            CliError::Run(_) => EXIT_CONFIG,
            CliError::ProbeFailure(_) => EXIT_PROBE_FAILURE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::ProbeFailure(ids) => write!(f, "probes failed: {}", ids.join(", ")),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Parsed invocation: the resolved config plus options outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub config: RunConfig,
    pub out_dir: PathBuf,
    pub print_config: bool,
}

/// Resolves flags or a `--config` file into a validated [`RunConfig`].
pub fn parse_args<I, T>(args: I) -> Result<Invocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliError::Usage)?;
    let config = match (cli.config, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        (None, Some(sub)) => {
            let c = sub.into_config();
            c.validate()?;
            c
        }
        (None, None) => return Err(ConfigError::new("command", "give a subcommand or --config FILE").into()),
        (Some(_), Some(_)) => unreachable!("clap rejects --config with a subcommand"),
    };
    Ok(Invocation {
        config,
        out_dir: cli.out_dir,
        print_config: cli.print_config,
    })
}

/// Reads the thread cap; unset means rayon's default.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, ConfigError> {
    match value {
        None => Ok(None),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(ConfigError::new(THREADS_VAR, format!("`{s}` lies outside {THREADS_VAR} >= 1"))),
        },
    }
}

/// Executes the configuration and writes its artifacts under `out_dir`.
/// Returns the written paths; failed probes still write their reports.
pub fn run_command(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let artifacts = execute(cfg)?;
    let mut paths = Vec::new();
    for (name, bytes) in &artifacts.files {
        paths.push(emit::write_atomic(out_dir, name, bytes)?);
    }
    if artifacts.failed.is_empty() {
        Ok(paths)
    } else {
        Err(CliError::ProbeFailure(artifacts.failed))
    }
}

fn install_threads() -> Result<(), CliError> {
    let var = std::env::var(THREADS_VAR).ok();
    if let Some(n) = thread_cap(var.as_deref())? {
        // a pool installed earlier in the process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Whole program: parse, run, report. Returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let outcome = parse_args(args).and_then(|inv| {
        install_threads()?;
        eprintln!("resolved config:\n{}", inv.config.to_json());
        if inv.print_config {
            println!("{}", inv.config.to_json());
            return Ok(());
        }
        for p in run_command(&inv.config, &inv.out_dir)? {
            println!("{}", p.display());
        }
        Ok(())
    });
    match outcome {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
