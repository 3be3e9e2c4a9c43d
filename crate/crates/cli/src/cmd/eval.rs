use crate::config::ConfigFlags;
use crate::error::CliError;
use respiro::eval::{
    confusion_times, evenly_spaced_thresholds, roc, rr_accuracy, sens_spec_dor,
    truth_trajectory_from_schedule, window_truth_from_schedule,
};
use respiro::io::{
    read_schedule_csv, read_timeline_csv, read_trajectory_csv, write_report, write_roc_csv,
    MetricValue, ModelFile, Report,
};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Compare RR trajectories: probability of correct estimation, RMSE
    Rr,
    /// Compare apnea timelines: confusion times, sensitivity/specificity/DOR,
    /// plus ROC when the prediction carries scores
    Apnea,
}

#[derive(clap::Args)]
pub struct Args {
    /// Evaluation mode
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Prediction file (trajectory CSV for rr, timeline CSV for apnea)
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground truth: a matching trajectory/timeline CSV, or a schedule CSV
    #[arg(long)]
    pub truth: PathBuf,
    /// Model JSON, required when the truth is a schedule CSV
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Report JSON output
    #[arg(long)]
    pub report: PathBuf,
    /// ROC curve CSV output (apnea mode with scores)
    #[arg(long)]
    pub roc_out: Option<PathBuf>,
    /// Relative tolerance for a correct RR estimate
    #[arg(long, default_value_t = 0.15)]
    pub tolerance: f64,
    #[command(flatten)]
    pub config: ConfigFlags,
}

/// Sniff whether a CSV file is a schedule export by its header row.
fn is_schedule_csv(path: &Path) -> Result<bool, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .is_some_and(|header| header.starts_with("state_index")))
}

pub fn run(args: Args) -> Result<(), CliError> {
    match args.mode {
        Mode::Rr => run_rr(args),
        Mode::Apnea => run_apnea(args),
    }
}

fn run_rr(args: Args) -> Result<(), CliError> {
    let pred = read_trajectory_csv(&args.pred)?;
    let cfg = args.config.resolve_with(Some(&pred.comments))?;

    let truth = if is_schedule_csv(&args.truth)? {
        let model_path = args.model.as_ref().ok_or_else(|| {
            CliError::Data("--model is required when the truth is a schedule CSV".into())
        })?;
        let model = ModelFile::read(model_path)?;
        let ss = model.state_space()?;
        let schedule = read_schedule_csv(&args.truth)?.schedule;
        truth_trajectory_from_schedule(
            &schedule,
            &ss,
            cfg.window_s,
            pred.trajectory.step_s,
            pred.trajectory.len(),
        )
    } else {
        read_trajectory_csv(&args.truth)?.trajectory
    };

    let accuracy = rr_accuracy(&pred.trajectory, &truth, args.tolerance)?;
    let mut report = Report::new("rr-accuracy")
        .with_metric(
            "p_correct",
            MetricValue::new(accuracy.p_correct, "fraction"),
        )
        .with_metric("rmse", MetricValue::new(accuracy.rmse_hz, "Hz"))
        .with_metric(
            "normalized_rmse",
            MetricValue::new(accuracy.normalized_rmse, "fraction"),
        )
        .with_metric(
            "windows",
            MetricValue::new(pred.trajectory.len() as f64, "count"),
        )
        .with_metric("tolerance", MetricValue::new(args.tolerance, "fraction"));
    for (key, value) in cfg.echo() {
        report.config.insert(key.to_string(), value);
    }
    write_report(&args.report, &report)?;
    Ok(())
}

fn run_apnea(args: Args) -> Result<(), CliError> {
    let pred = read_timeline_csv(&args.pred)?;
    let cfg = args.config.resolve_with(Some(&pred.comments))?;

    let truth = if is_schedule_csv(&args.truth)? {
        let model_path = args.model.as_ref().ok_or_else(|| {
            CliError::Data("--model is required when the truth is a schedule CSV".into())
        })?;
        let model = ModelFile::read(model_path)?;
        let ss = model.state_space()?;
        let apnea_state = ss.apnea_index().ok_or_else(|| {
            CliError::Data("the model has no apnea state; timeline truth required".into())
        })?;
        let schedule = read_schedule_csv(&args.truth)?.schedule;
        window_truth_from_schedule(
            &schedule,
            apnea_state,
            cfg.window_s,
            pred.timeline.step_s(),
            pred.timeline.len(),
        )?
    } else {
        read_timeline_csv(&args.truth)?.timeline
    };

    let ct = confusion_times(&pred.timeline, &truth)?;
    let metrics = sens_spec_dor(&ct);
    let mut report = Report::new("apnea-detection")
        .with_metric("true_positive", MetricValue::new(ct.true_positive_s, "s"))
        .with_metric("true_negative", MetricValue::new(ct.true_negative_s, "s"))
        .with_metric("false_positive", MetricValue::new(ct.false_positive_s, "s"))
        .with_metric("false_negative", MetricValue::new(ct.false_negative_s, "s"))
        .with_metric(
            "sensitivity",
            MetricValue::new(metrics.sensitivity, "fraction"),
        )
        .with_metric(
            "specificity",
            MetricValue::new(metrics.specificity, "fraction"),
        )
        .with_metric(
            "diagnostic_odds_ratio",
            MetricValue::new(metrics.diagnostic_odds_ratio, "ratio"),
        );

    // ROC sweep when the prediction carries scores (higher = more apnea-like)
    if let Some(scores) = &pred.scores {
        let sweep = evenly_spaced_thresholds(scores, cfg.roc_thresholds);
        let analysis = roc(scores, &truth, &sweep)?;
        report = report
            .with_metric("auc", MetricValue::new(analysis.auc, "fraction"))
            .with_metric(
                "optimal_threshold",
                MetricValue::new(analysis.optimal.threshold, "score"),
            );
        if let Some(roc_path) = &args.roc_out {
            write_roc_csv(roc_path, &analysis)?;
        }
    }

    for (key, value) in cfg.echo() {
        report.config.insert(key.to_string(), value);
    }
    write_report(&args.report, &report)?;
    Ok(())
}
