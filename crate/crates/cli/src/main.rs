use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thicklab_cli::{run, validate, CliError, ExperimentConfig, Kind, RunOptions};

#[derive(Parser)]
#[command(name = "thicklab", version, about = "Hermite spectral inequalities, coverings and null-control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral constants C_N over a degree range.
    #[command(name = "spectral-scan")]
    SpectralScan(RunArgs),
    /// Bernstein-type inequalities on random elements of E_N.
    #[command(name = "bernstein-check")]
    BernsteinCheck(RunArgs),
    /// Ball coverings for a slowly varying density.
    Covering(RunArgs),
    /// Tail decay of the fractional oscillator semigroup.
    Dissipation(RunArgs),
    /// Null-control synthesis and observability constants.
    #[command(name = "control-run")]
    ControlRun(RunArgs),
    /// Singular space of a quadratic symbol.
    #[command(name = "singular-space")]
    SingularSpace(RunArgs),
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ExperimentConfig::parse(&text)
}

fn execute(kind: Kind, args: RunArgs) -> Result<bool, CliError> {
    let config = load(&args.config)?;
    if config.kind() != kind {
        return Err(CliError::KindMismatch { requested: kind, declared: config.kind() });
    }
    let outcome = run(&config, &RunOptions { out: args.out, seed: args.seed, threads: args.threads })?;
    for a in &outcome.manifest.acceptance {
        let value = a.value.map_or("missing".to_owned(), |v| format!("{v:.6e}"));
        println!("{} {} = {value}", if a.passed { "PASS" } else { "FAIL" }, a.metric);
    }
    println!("manifest: {}", outcome.dir.join(thicklab_cli::manifest::MANIFEST_NAME).display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Validate { config } => {
            return match load(&config).map(|c| validate(&c)) {
                Ok(d) if d.is_empty() => ExitCode::SUCCESS,
                Ok(d) => {
                    eprintln!("{}", CliError::Validation(d));
                    ExitCode::from(2)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
        Command::SpectralScan(a) => (Kind::SpectralScan, a),
        Command::BernsteinCheck(a) => (Kind::BernsteinCheck, a),
        Command::Covering(a) => (Kind::Covering, a),
        Command::Dissipation(a) => (Kind::Dissipation, a),
        Command::ControlRun(a) => (Kind::ControlRun, a),
        Command::SingularSpace(a) => (Kind::SingularSpace, a),
    };
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
