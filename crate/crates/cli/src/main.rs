use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spin_triangle_cli::{check_outcome, load_config, resolve_output_dir, run, CliError, Experiment};

#[derive(Parser)]
#[command(
    name = "spin-triangle",
    version,
    about = "Spin-5/2 triangle experiments: spectra, magnetization, entanglement, dynamics and sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, total-spin sectors and optionally the Hamiltonian matrix.
    Spectrum(RunArgs),
    /// Thermal magnetization curves and plateaus.
    Magnetization(RunArgs),
    /// Bipartite and tripartite negativity over field and temperature.
    Negativity(RunArgs),
    /// Local magnetization dynamics of Dicke states.
    Dynamics(RunArgs),
    /// Classical Fisher information of sequential site-3 measurements.
    Sensing(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config with a [model] table and this experiment's table.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Compare anchor quantities against the bundled reference values.
    #[arg(long)]
    check: bool,
    /// Output directory (default: `output_dir` from the config, else `results`).
    #[arg(long, value_name = "DIR", env = "SPIN_TRIANGLE_OUT")]
    out: Option<PathBuf>,
}

fn execute(experiment: Experiment, args: RunArgs) -> Result<(), CliError> {
    let config = load_config(experiment, args.config.as_deref())?;
    let out = resolve_output_dir(args.out, &config);
    let summary = run(experiment, &config, args.check, &out)?;
    println!("{experiment}: wrote {} files to {}", summary.files.len(), out.display());
    if let Some(lines) = &summary.checks {
        for line in lines {
            println!("{line}");
        }
    }
    check_outcome(&summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Spectrum(a) => (Experiment::Spectrum, a),
        Command::Magnetization(a) => (Experiment::Magnetization, a),
        Command::Negativity(a) => (Experiment::Negativity, a),
        Command::Dynamics(a) => (Experiment::Dynamics, a),
        Command::Sensing(a) => (Experiment::Sensing, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
