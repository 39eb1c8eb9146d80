//! `coten`: exact energies, mapping checks, variational optimization and
//! finite-size scaling from the command line.

mod commands;
mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use error::CliError;
use output::{csv_preamble, envelope_json, Sink};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "coten",
    version,
    about = "Boltzmann-machine states as constrained tensor networks on the Ising chain",
    args_override_self = true
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// File of `key = value` lines; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base random seed, recorded in every output
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (for `fss`, a prefix for three files); standard output if absent
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; each subcommand has its own default
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for independent runs; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Exact ground-state energy of the periodic chain
    #[command(args_override_self = true, allow_negative_numbers = true)]
    IsingExact(IsingExactArgs),
    /// Compare tensor-network amplitudes with exhaustive hidden-unit sums
    #[command(args_override_self = true, allow_negative_numbers = true)]
    MapCheck(MapCheckArgs),
    /// Variationally optimize a uRBM
    #[command(args_override_self = true, allow_negative_numbers = true)]
    OptimizeUrbm(OptimizeUrbmArgs),
    /// Variationally optimize a uniform MPS
    #[command(args_override_self = true, allow_negative_numbers = true)]
    OptimizeMps(OptimizeMpsArgs),
    /// Optimize a uRBM across a range of transverse fields
    #[command(args_override_self = true, allow_negative_numbers = true)]
    ScanLambda(ScanLambdaArgs),
    /// Connected ZZ correlator of a stored parameter set
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Corr(CorrArgs),
    /// Finite-size scaling of the energy error and its bond-dimension exponent
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Fss(FssArgs),
    /// Check the two-dimensional contraction on a small torus
    #[command(args_override_self = true, allow_negative_numbers = true)]
    CopepsCheck(CopepsCheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::IsingExact(_) => "ising-exact",
            Command::MapCheck(_) => "map-check",
            Command::OptimizeUrbm(_) => "optimize-urbm",
            Command::OptimizeMps(_) => "optimize-mps",
            Command::ScanLambda(_) => "scan-lambda",
            Command::Corr(_) => "corr",
            Command::Fss(_) => "fss",
            Command::CopepsCheck(_) => "copeps-check",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::IsingExact(_) | Command::ScanLambda(_) | Command::Corr(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct IsingExactArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MapAnsatz {
    Rbm,
    Urbm,
    Urbm2d,
}

#[derive(Debug, Args, Serialize)]
pub struct MapCheckArgs {
    #[arg(long, value_enum)]
    pub ansatz: MapAnsatz,
    /// Chain length, or torus side for `urbm2d`
    #[arg(long)]
    pub n: usize,
    /// Hidden layers (uRBM ansätze)
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Hidden units (RBM); defaults to the chain length
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Independent parameter draws
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    /// Independent starts, seeded `seed, seed + 1, ...`
    #[arg(long, default_value_t = 8)]
    pub seeds: usize,
    /// Initial parameters are uniform in `[-init-range, init-range)`
    #[arg(long)]
    pub init_range: Option<f64>,
    /// Extra start read from a parameter file
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    /// uRBM search run from each start
    #[arg(long, value_enum, default_value_t = Method::Rotation)]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Simplex searches in rotated three-parameter subspaces
    Rotation,
    /// L-BFGS on central differences
    Gradient,
    /// Gradient descent followed by the rotation search
    Hybrid,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeUrbmArgs {
    #[arg(long)]
    pub layers: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub n: usize,
    /// Rotation rounds per start
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizeMpsArgs {
    #[arg(long)]
    pub chi: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long)]
    pub n: usize,
    /// L-BFGS iterations per start
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanLambdaArgs {
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub lambda_min: f64,
    #[arg(long)]
    pub lambda_max: f64,
    /// Number of grid points, endpoints included
    #[arg(long)]
    pub steps: usize,
    /// Rotation rounds per start
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariationalAnsatz {
    Urbm,
    Mps,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrArgs {
    #[arg(long, value_enum)]
    pub ansatz: VariationalAnsatz,
    /// JSON output of `optimize-*`, a JSON array, or whitespace/comma separated numbers
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub rmax: usize,
    /// Field used for the exact reference column
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
}

/// A list of chain lengths, `start:stop:step` or comma separated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeGrid(pub Vec<usize>);

impl FromStr for SizeGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected start:stop:step or a comma separated list, got {s:?}");
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let sizes = if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
            if step == 0 || stop < start {
                return Err(bad());
            }
            (start..=stop).step_by(step).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if sizes.is_empty() {
            return Err(bad());
        }
        Ok(SizeGrid(sizes))
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FssArgs {
    #[arg(long, value_enum)]
    pub ansatz: VariationalAnsatz,
    /// Bond dimensions; for the uRBM these are `2^(layers+1)`
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    pub chis: Vec<usize>,
    /// Chain lengths, `start:stop:step` or a comma separated list
    #[arg(long, default_value = "10:200:10")]
    pub n_grid: SizeGrid,
    /// Target relative energy error
    #[arg(long, default_value_t = 1e-5)]
    pub goal: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Start every size from scratch instead of from the previous optimum
    #[arg(long)]
    pub cold: bool,
    /// Size that gets the full multi-start; the others continue from their
    /// neighbour's optimum, moving away from it. Defaults to the smallest size
    #[arg(long)]
    pub anchor: Option<usize>,
    /// Random starts added at every continued size
    #[arg(long, default_value_t = 0)]
    pub refresh_seeds: usize,
    /// Rotation rounds per uRBM start
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// L-BFGS iterations per MPS start
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CopepsCheckArgs {
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    /// Torus side, 2 or 3
    #[arg(long, default_value_t = 3)]
    pub side: usize,
    #[arg(long, default_value_t = 20)]
    pub draws: usize,
}

/// Files written by `fss` when an output prefix is given.
const FSS_FILES: [&str; 3] = ["detail.csv", "nstar.csv", "summary.json"];

fn fss_path(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push("_");
    s.push(suffix);
    PathBuf::from(s)
}

fn parse_cli(argv: &[String]) -> Result<Option<Cli>, CliError> {
    let Some(path) = config::find_path(argv) else {
        return Cli::try_parse_from(argv).map(Some).or_else(clap_outcome);
    };
    let names: Vec<String> = <Cli as clap::CommandFactory>::command()
        .get_subcommands()
        .map(|c| c.get_name().to_string())
        .collect();
    let Some(sub) = argv.iter().skip(1).find(|a| names.contains(a)) else {
        return Cli::try_parse_from(argv).map(Some).or_else(clap_outcome);
    };
    let merged = config::splice(argv, sub, config::load(&path)?);
    Cli::try_parse_from(&merged).map(Some).or_else(clap_outcome)
}

/// Help and version requests print and succeed; everything else is a usage error.
fn clap_outcome(e: clap::Error) -> Result<Option<Cli>, CliError> {
    use clap::error::ErrorKind;
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = e.print();
            Ok(None)
        }
        ErrorKind::ValueValidation | ErrorKind::InvalidValue => {
            Err(CliError::Invalid(e.render().to_string().trim().to_string()))
        }
        _ => Err(CliError::Usage(e.render().to_string().trim().to_string())),
    }
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let Some(cli) = parse_cli(argv)? else {
        return Ok(());
    };
    let echo = serde_json::to_value(&cli).expect("serializable config");
    let name = cli.command.name();
    let format = cli.common.format.unwrap_or(cli.command.default_format());

    let multi = matches!(cli.command, Command::Fss(_)) && cli.common.output.is_some();
    let mut sinks = Vec::new();
    if let Some(out) = &cli.common.output {
        if multi {
            for f in FSS_FILES {
                sinks.push(Sink::create(&fss_path(out, f))?);
            }
        } else {
            sinks.push(Sink::create(out)?);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.workers)
        .build()
        .map_err(|e| {
            CliError::Invalid(format!("cannot start {} workers: {e}", cli.common.workers))
        })?;
    let report = pool.install(|| commands::execute(&cli.command, &cli.common))?;

    let json = || envelope_json(name, &echo, &report.payload);
    let csv = |i: usize| report.tables[i].1.to_csv();
    if multi {
        let mut it = sinks.into_iter();
        for i in 0..2 {
            let s = it.next().expect("sink");
            s.write(&format!("{}{}", csv_preamble(name, &echo), csv(i)))?;
        }
        it.next().expect("sink").write(&json())?;
        output::stdout(&json())?;
    } else {
        let text = match format {
            Format::Json => json(),
            Format::Csv if sinks.is_empty() => csv(0),
            Format::Csv => format!("{}{}", csv_preamble(name, &echo), csv(0)),
        };
        match sinks.pop() {
            Some(s) => s.write(&text)?,
            None => output::stdout(&text)?,
        }
    }
    match report.failure {
        Some(msg) => Err(CliError::CheckFailed(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
