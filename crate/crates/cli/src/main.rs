mod commands;
mod error;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{asym, compare, engines, kernel, series};
use error::CliError;

/// Long-range random walk, self-avoiding walk and oriented percolation:
/// exact evolution, Monte Carlo and gyration-radius asymptotics.
#[derive(Parser)]
#[command(name = "gyrad", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "GYRAD_THREADS")]
    threads: Option<usize>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect a Kac kernel file.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Random walk.
    #[command(subcommand)]
    Rw(RwCmd),
    /// Self-avoiding walk.
    #[command(subcommand)]
    Saw(SawCmd),
    /// Oriented percolation.
    #[command(subcommand)]
    Op(OpCmd),
    /// Series tools.
    #[command(subcommand)]
    Series(SeriesCmd),
    /// Asymptotic predictions.
    #[command(subcommand)]
    Asym(AsymCmd),
    /// Annotate an engine table with predicted ratios and relative errors.
    Compare(compare::CompareArgs),
}

#[derive(Subcommand)]
enum KernelCmd {
    Build(kernel::BuildArgs),
    /// Tabulate D̂ along e_1 and fit its small-k behaviour.
    Inspect(kernel::InspectArgs),
}

#[derive(Subcommand)]
enum RwCmd {
    /// Evolve φ_t exactly and record moments per t.
    Evolve(engines::RwArgs),
}

#[derive(Subcommand)]
enum SawCmd {
    /// Exact two-point function by enumeration (small kernels only).
    Enumerate(engines::SawEnumerateArgs),
    /// Monte Carlo moments.
    Sample(engines::McArgs),
}

#[derive(Subcommand)]
enum OpCmd {
    /// Monte Carlo moments of the cluster slices.
    Sample(engines::McArgs),
}

#[derive(Subcommand)]
enum SeriesCmd {
    /// Coefficients of (1 − z)^{−(1+β)} log^γ(1/(1 − z)).
    Fo90(series::Fo90Args),
    /// Solve the lace expansion for J_t.
    Deconvolve(series::DeconvolveArgs),
    /// Fit the blowup of a generating function at m_c.
    Fit(series::FitArgs),
}

#[derive(Subcommand)]
enum AsymCmd {
    /// Fixed-t moment ratio prediction.
    Predict(asym::PredictArgs),
    /// K_r in closed form and by quadrature.
    Kr(asym::KrArgs),
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start {n} threads: {e}")))?;
    }
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Kernel(KernelCmd::Build(a)) => kernel::build(a, cfg),
        Command::Kernel(KernelCmd::Inspect(a)) => kernel::inspect(a, cfg),
        Command::Rw(RwCmd::Evolve(a)) => engines::rw_evolve(a, cfg),
        Command::Saw(SawCmd::Enumerate(a)) => engines::saw_enumerate(a, cfg),
        Command::Saw(SawCmd::Sample(a)) => engines::saw_sample(a, cfg),
        Command::Op(OpCmd::Sample(a)) => engines::op_sample(a, cfg),
        Command::Series(SeriesCmd::Fo90(a)) => series::fo90(a, cfg),
        Command::Series(SeriesCmd::Deconvolve(a)) => series::deconvolve(a, cfg),
        Command::Series(SeriesCmd::Fit(a)) => series::fit(a, cfg),
        Command::Asym(AsymCmd::Predict(a)) => asym::predict(a, cfg),
        Command::Asym(AsymCmd::Kr(a)) => asym::kr(a, cfg),
        Command::Compare(a) => compare::compare(a, cfg),
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::config(e.render().to_string().trim_end())),
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
