use crate::error::CliError;
use respiro::ctmc::{simulate, strip_movement_state};
use respiro::io::{write_schedule_csv, ModelFile};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Model JSON input
    pub model: PathBuf,
    /// Schedule CSV output
    #[arg(short, long)]
    pub output: PathBuf,
    /// Simulation length, seconds
    #[arg(long)]
    pub duration_s: f64,
    /// PRNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Remove the movement state before simulating
    #[arg(long)]
    pub strip_movement: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let model = ModelFile::read(&args.model)?;
    let mut generator = model.generator()?;
    let mut ss = model.state_space()?;
    if args.strip_movement {
        (generator, ss) = strip_movement_state(&generator, &ss)?;
    }
    let schedule = simulate(&generator, args.duration_s, args.seed)?;
    write_schedule_csv(
        &args.output,
        &schedule,
        &ss,
        &[
            ("model", args.model.display().to_string()),
            ("duration_s", args.duration_s.to_string()),
            ("strip_movement", args.strip_movement.to_string()),
        ],
    )?;
    Ok(())
}
