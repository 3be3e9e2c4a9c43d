use crate::error::CliError;
use clap::ArgGroup;
use respiro::ctmc::strip_movement_state;
use respiro::io::{read_fseq, read_schedule_csv, write_fseq, write_pneumogram_csv, ModelFile};
use respiro::synth::{
    estimate_noise_variance, normalize_rates, plan_warp, scale_to_longest_sojourn,
    synth_motion_signal, warp_frames, NoiseOptions, Rect,
};
use std::path::PathBuf;

#[derive(clap::Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["signal", "frames"])))]
pub struct Args {
    /// Schedule CSV input
    pub schedule: PathBuf,
    /// Model JSON the schedule was simulated from
    pub model: PathBuf,
    /// Output path (pneumogram CSV or frame tensor file)
    #[arg(short, long)]
    pub output: PathBuf,
    /// Render a 1-D motion signal
    #[arg(long)]
    pub signal: bool,
    /// Warp this source frame tensor file instead
    #[arg(long, value_name = "SRC.FSEQ")]
    pub frames: Option<PathBuf>,
    /// Remove the movement state from the model before mapping states
    #[arg(long)]
    pub strip_movement: bool,
    /// PRNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    // signal options
    /// Motion-signal sampling rate, Hz
    #[arg(long, default_value_t = 32.0)]
    pub sample_rate_hz: f64,
    /// Breathing oscillation amplitude, microvolts
    #[arg(long, default_value_t = 300.0)]
    pub amplitude_uv: f64,
    /// White measurement-noise standard deviation, microvolts
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma_uv: f64,

    // frames options
    /// Breathing rate of the subject in the source video, Hz (frames mode)
    #[arg(long)]
    pub source_rate_hz: Option<f64>,
    /// Playback rate substituted for the apnea state, Hz
    #[arg(long, default_value_t = 0.1)]
    pub apnea_rate_hz: f64,
    /// Static region `x,y,WxH` for noise estimation; enables compensation
    #[arg(long, value_name = "X,Y,WxH")]
    pub noise_region: Option<String>,
    /// Scale playback so the longest-mean-sojourn state runs at native speed
    #[arg(long)]
    pub scale_native: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let schedule_file = read_schedule_csv(&args.schedule)?;
    let schedule = schedule_file.schedule;
    let model = ModelFile::read(&args.model)?;
    let mut generator = model.generator()?;
    let mut ss = model.state_space()?;
    if args.strip_movement {
        (generator, ss) = strip_movement_state(&generator, &ss)?;
    }

    if args.signal {
        let record = synth_motion_signal(
            &schedule,
            &ss,
            args.sample_rate_hz,
            args.amplitude_uv,
            args.noise_sigma_uv,
            args.seed,
        )?;
        write_pneumogram_csv(
            &args.output,
            &record,
            &[
                ("schedule", args.schedule.display().to_string()),
                ("model", args.model.display().to_string()),
                ("amplitude_uv", args.amplitude_uv.to_string()),
                ("noise_sigma_uv", args.noise_sigma_uv.to_string()),
                ("seed", args.seed.to_string()),
            ],
        )?;
        return Ok(());
    }

    let source_path = args.frames.expect("clap group guarantees a mode");
    let src = read_fseq(&source_path)?;
    let source_rate = args.source_rate_hz.ok_or_else(|| {
        CliError::Data(
            "--frames mode requires --source-rate-hz (subject rate in the source)".into(),
        )
    })?;
    let mut ratios = normalize_rates(&ss, source_rate, args.apnea_rate_hz)?;
    if args.scale_native {
        ratios = scale_to_longest_sojourn(&ratios, &generator)?;
    }
    let plan = plan_warp(&schedule, &ratios, src.frame_rate_hz(), src.frame_count())?;
    let noise = match &args.noise_region {
        Some(spec) => {
            let region = parse_region(spec)?;
            NoiseOptions::with_variance(estimate_noise_variance(&src, region)?)
        }
        None => NoiseOptions::disabled(),
    };
    let out = warp_frames(&src, &plan, noise, args.seed)?;
    write_fseq(&args.output, &out)?;
    Ok(())
}

/// Parse `x,y,WxH`, e.g. `0,0,16x16`.
fn parse_region(spec: &str) -> Result<Rect, CliError> {
    let bad = || CliError::Data(format!("bad --noise-region {spec:?}, expected x,y,WxH"));
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let (w, h) = parts[2].split_once('x').ok_or_else(bad)?;
    Ok(Rect {
        x: parts[0].trim().parse().map_err(|_| bad())?,
        y: parts[1].trim().parse().map_err(|_| bad())?,
        width: w.trim().parse().map_err(|_| bad())?,
        height: h.trim().parse().map_err(|_| bad())?,
    })
}
