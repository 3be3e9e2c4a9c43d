//! `respiro` — estimate, fit, simulate, synthesize and evaluate breathing
//! patterns modeled as a continuous-time Markov chain.

mod cmd;
mod config;
mod error;

use clap::Parser;

#[derive(Parser)]
#[command(
    name = "respiro",
    version,
    about = "CTMC breathing-pattern modeling: RR estimation, model fitting, \
             simulation, synthesis and evaluation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Estimate an RR trajectory from a pneumogram CSV
    EstimateRr(cmd::estimate_rr::Args),
    /// Fit a CTMC model (state space + generator) from a trajectory CSV
    Fit(cmd::fit::Args),
    /// Simulate a sojourn schedule from a model JSON
    Simulate(cmd::simulate::Args),
    /// Synthesize a motion signal or a warped frame sequence from a schedule
    Synth(cmd::synth::Args),
    /// Score an estimator or detector against ground truth
    Eval(cmd::eval::Args),
    /// Kullback-Leibler divergence between two PMF files, in bits
    Kl(cmd::kl::Args),
}

fn main() {
    let cli = Cli::parse();
    // exit codes: 0 success, 2 usage/data (clap also uses 2), 1 internal
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| match cli.command {
        Command::EstimateRr(args) => cmd::estimate_rr::run(args),
        Command::Fit(args) => cmd::fit::run(args),
        Command::Simulate(args) => cmd::simulate::run(args),
        Command::Synth(args) => cmd::synth::run(args),
        Command::Eval(args) => cmd::eval::run(args),
        Command::Kl(args) => cmd::kl::run(args),
    }))
    .unwrap_or_else(|panic| {
        let what = panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown panic".into());
        Err(error::CliError::Internal(what))
    });
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
