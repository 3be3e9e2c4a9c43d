use crate::config::ConfigFlags;
use crate::error::CliError;
use respiro::io::{read_pneumogram_csv, write_trajectory_csv};
use respiro::signal::{estimate_rr_trajectory, WindowConfig};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Pneumogram CSV input
    pub input: PathBuf,
    /// Trajectory CSV output
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub config: ConfigFlags,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let record = read_pneumogram_csv(&args.input)?;
    let window = WindowConfig::from_duration(record.sample_rate_hz(), cfg.window_s, cfg.overlap)?;
    let bounds = cfg.bounds()?;
    let trajectory = estimate_rr_trajectory(
        &record,
        &window,
        cfg.movement_threshold_uv,
        &bounds,
        cfg.amp_threshold(),
    )?;

    let mut comments = cfg.echo();
    comments.push(("fs_hz", record.sample_rate_hz().to_string()));
    comments.push(("source", args.input.display().to_string()));
    write_trajectory_csv(&args.output, &trajectory, &comments)?;
    Ok(())
}
