use crate::config::ConfigFlags;
use crate::error::CliError;
use respiro::ctmc::{fit_generator, stationary, stationary_partial, CtmcError};
use respiro::io::{read_trajectory_csv, ModelFile, ModelMeta};
use respiro::quantizer::{build_state_space, quantize};
use std::path::PathBuf;

#[derive(clap::Args)]
pub struct Args {
    /// Trajectory CSV input
    pub input: PathBuf,
    /// Model JSON output
    #[arg(short, long)]
    pub output: PathBuf,
    /// Accept trajectories that never visit some states: the stationary
    /// distribution is then computed on the visited class only
    #[arg(long)]
    pub allow_partial: bool,
    #[command(flatten)]
    pub config: ConfigFlags,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let file = read_trajectory_csv(&args.input)?;
    // rate bounds and window settings travel with the trajectory file
    let cfg = args.config.resolve_with(Some(&file.comments))?;
    let bounds = cfg.bounds()?;

    let ss = build_state_space(
        &file.trajectory,
        cfg.states,
        cfg.include_apnea,
        cfg.include_movement,
        &bounds,
    )?;
    let quantized = quantize(&file.trajectory, &ss);
    let fit = fit_generator(&quantized)?;

    let pi = match stationary(&fit.generator) {
        Ok(pi) => pi,
        Err(CtmcError::Reducible { classes }) if args.allow_partial => {
            eprintln!(
                "note: chain is reducible (classes {classes:?}); \
                 restricting the stationary solve to the visited states"
            );
            stationary_partial(&fit.generator, &fit.visited)?
        }
        Err(e) => return Err(e.into()),
    };

    let model = ModelFile::from_parts(
        &fit.generator,
        &ss,
        &pi,
        ModelMeta {
            source: Some(args.input.display().to_string()),
            fit_step_s: Some(file.trajectory.step_s),
            seed: None,
            ..Default::default()
        },
    );
    model.write(&args.output)?;
    Ok(())
}
