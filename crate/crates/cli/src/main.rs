use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use groupsync::commands::{
    cmd_check, cmd_rate, cmd_reduce, cmd_simulate, cmd_spectrum, describe_fit, export_matrices,
};
use groupsync::scenario::Scenario;
use groupsync::Error;

/// Group synchronization checks and simulations for coupled damped systems.
#[derive(Parser)]
#[command(name = "groupsync", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test the compatibility and rank conditions.
    Check(RunArgs),
    /// Write the reduced and limit coupling matrices.
    Reduce(RunArgs),
    /// Integrate the coupled system and judge synchronization decay.
    Simulate(RunArgs),
    /// Eigenvalues of the first-order generator.
    Spectrum(RunArgs),
    /// Fit an exponential decay rate to an existing trajectory CSV.
    Rate(RateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; repeat to run a sweep.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    /// Output directory (overrides the scenario's).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the assembled model and coupling matrices.
    #[arg(long)]
    export_matrices: bool,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Column to fit (default `sync_total`, else the first data column).
    #[arg(long)]
    column: Option<String>,
    /// Fit window as `START,END`.
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
}

#[derive(Clone, Copy)]
enum Verb {
    Check,
    Reduce,
    Simulate,
    Spectrum,
}

const OK: u8 = 0;
const FAILED: u8 = 1;
const USAGE: u8 = 2;

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Scenario(_)
        | Error::InvalidConfig(_)
        | Error::InvalidPartition(_)
        | Error::InvalidCoupling { .. }
        | Error::InvalidModel(_) => USAGE,
        _ => FAILED,
    }
}

/// Runs one scenario; returns the exit code, the text to print and whether
/// the text is an error message.
fn run_one(verb: Verb, config: &Path, args: &RunArgs, sweep: bool) -> (u8, String, bool) {
    let mut sc = match Scenario::load(config) {
        Ok(sc) => sc,
        Err(e) => return (USAGE, format!("error: {e}\n"), true),
    };
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    let mut dir = args.out.clone().unwrap_or_else(|| sc.out_dir.clone());
    if sweep {
        dir = dir.join(&sc.name);
    }
    let result = (|| -> groupsync::Result<(u8, String)> {
        if args.export_matrices {
            export_matrices(&sc, &dir)?;
        }
        Ok(match verb {
            Verb::Check => {
                let r = cmd_check(&sc, &dir)?;
                (if r.holds() { OK } else { FAILED }, r.text)
            }
            Verb::Reduce => (OK, cmd_reduce(&sc, &dir)?),
            Verb::Simulate => {
                let r = cmd_simulate(&sc, &dir)?;
                (if r.expectation_met { OK } else { FAILED }, r.text)
            }
            Verb::Spectrum => {
                let r = cmd_spectrum(&sc, &dir)?;
                let text = format!(
                    "scenario: {}\neigenvalues: {}\nabscissa: {:e}\nnear-imaginary: {}\n",
                    sc.name,
                    r.eigenvalues.len(),
                    r.abscissa,
                    r.near_imaginary_count
                );
                (OK, text)
            }
        })
    })();
    match result {
        Ok((code, text)) => (code, text, false),
        Err(e) => (
            error_code(&e),
            format!("scenario {}: error: {e}\n", sc.name),
            true,
        ),
    }
}

fn run_many(verb: Verb, args: &RunArgs) -> u8 {
    if args.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return USAGE;
    }
    let sweep = args.configs.len() > 1;
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return USAGE;
        }
    };
    let results: Vec<(u8, String, bool)> = pool.install(|| {
        args.configs
            .par_iter()
            .map(|c| run_one(verb, c, args, sweep))
            .collect()
    });
    let mut code = OK;
    for (c, text, is_error) in results {
        if is_error {
            eprint!("{text}");
        } else {
            print!("{text}");
        }
        code = code.max(c);
    }
    code
}

fn run_rate(args: &RateArgs) -> u8 {
    let window = match args.window.as_deref() {
        None => None,
        Some(&[a, b]) => Some((a, b)),
        Some(_) => {
            eprintln!("error: --window takes START,END");
            return USAGE;
        }
    };
    match cmd_rate(&args.input, args.column.as_deref(), window) {
        Ok(fit) => {
            print!("{}", describe_fit(&fit));
            OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e).max(FAILED)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Check(a) => run_many(Verb::Check, a),
        Command::Reduce(a) => run_many(Verb::Reduce, a),
        Command::Simulate(a) => run_many(Verb::Simulate, a),
        Command::Spectrum(a) => run_many(Verb::Spectrum, a),
        Command::Rate(a) => run_rate(a),
    };
    ExitCode::from(code)
}
