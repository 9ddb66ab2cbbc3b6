use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ellmirror::verify::{run, Mode, Report, RunConfig, Suite, WeightInput};
use ellmirror::{Error, Permutation};
use num_complex::Complex64;

/// Exit status for a run whose checks did not all pass.
const EXIT_FAILED: u8 = 1;
/// Bad flags or inconsistent configuration.
const EXIT_CONFIG: u8 = 2;
/// No non-resonant parameter point could be sampled.
const EXIT_RESAMPLING: u8 = 3;
/// Evaluation error outside a suite (pole, range, i/o).
const EXIT_EVALUATION: u8 = 4;

/// Numerical verification of elliptic weight functions, restriction
/// matrices and the z/μ mirror identity.
///
/// The thread count follows RAYON_NUM_THREADS.
#[derive(Parser, Debug)]
#[command(name = "ellmirror", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the restriction matrix directly and by both recursions.
    Matrix {
        #[command(flatten)]
        common: Common,
        /// Write the moduli of the direct matrix at the first point as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON file with a parameter point (`{"point": …, "t": …}`).
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Evaluate every weight function at random or supplied points.
    Weights {
        #[command(flatten)]
        common: Common,
        /// JSON file with `{"point": {...}, "t": {...}}`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run verification suites and report residuals.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated subset of theta, triangular, diagonal, rmatrel,
        /// dualrel, mirror, interface, pprop.
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<String>>,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Modular parameter, `re` or `re,im`.
    #[arg(long, default_value = "0.3")]
    q: String,
    /// Number of factors kept in each q-product, or `auto`.
    #[arg(long, default_value = "auto")]
    trunc: String,
    #[arg(long, default_value_t = ellmirror::qtheta::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random parameter points.
    #[arg(long, default_value_t = 3)]
    points: usize,
    /// Chamber permutation as a comma-separated word, e.g. `2,1,3`.
    #[arg(long)]
    sigma: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lift the cap on n.
    #[arg(long)]
    allow_large_n: bool,
}

fn parse_q(s: &str) -> Result<Complex64, Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Config(format!("bad number '{t}' in q")));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Config(format!("q must be 're' or 're,im', got '{s}'"))),
    }
}

fn parse_trunc(s: &str) -> Result<Option<usize>, Error> {
    if s == "auto" {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::Config(format!("trunc must be a positive integer or 'auto', got '{s}'")))
}

fn parse_sigma(s: &str) -> Result<Permutation, Error> {
    let word = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::Config(format!("bad sigma entry '{t}'"))))
        .collect::<Result<Vec<_>, _>>()?;
    Permutation::new(word).map_err(|e| Error::Config(e.to_string()))
}

fn read_input(path: &PathBuf) -> Result<WeightInput, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn config_from(common: &Common, mode: Mode) -> Result<RunConfig, Error> {
    Ok(RunConfig {
        n: common.n,
        q: parse_q(&common.q)?,
        trunc: parse_trunc(&common.trunc)?,
        tol: common.tol,
        seed: common.seed,
        points: common.points,
        sigma: common.sigma.as_deref().map(parse_sigma).transpose()?,
        mode,
        suites: Suite::ALL.to_vec(),
        allow_large_n: common.allow_large_n,
        input: None,
    })
}

fn emit(report: &Report, out: Option<&PathBuf>) -> Result<(), Error> {
    let io = |e: io::Error| Error::Io(e.to_string());
    let text = report.to_json();
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io)?);
            writeln!(w, "{text}").map_err(io)?;
            w.flush().map_err(io)
        }
        None => writeln!(io::stdout().lock(), "{text}").map_err(io),
    }
}

fn execute(cli: Cli) -> Result<bool, Error> {
    let (config, common, csv) = match &cli.command {
        Command::Matrix { common, csv, input } => {
            let mut c = config_from(common, Mode::Matrix)?;
            c.input = input.as_ref().map(read_input).transpose()?;
            (c, common, csv.clone())
        }
        Command::Weights { common, input } => {
            let mut c = config_from(common, Mode::Weights)?;
            c.input = input.as_ref().map(read_input).transpose()?;
            (c, common, None)
        }
        Command::Verify { common, suites } => {
            let mut c = config_from(common, Mode::Verify)?;
            if let Some(list) = suites {
                c.suites = list.iter().map(|s| s.trim().parse()).collect::<Result<_, _>>()?;
            }
            (c, common, None)
        }
    };
    let report = run(&config)?;
    if let (Some(path), Some(first)) = (csv, report.matrices.first()) {
        let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        first.write_csv(BufWriter::new(file))?;
    }
    emit(&report, common.out.as_ref())?;
    Ok(report.passed)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidContext(_) | Error::InvalidPermutation { .. } | Error::SizeMismatch { .. } => {
            EXIT_CONFIG
        }
        Error::ResamplingExhausted { .. } => EXIT_RESAMPLING,
        _ => EXIT_EVALUATION,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("ellmirror: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
