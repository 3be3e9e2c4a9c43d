//! Pipeline configuration: defaults mirror the reference operating point
//! (10 s windows, 95% overlap, 400 uV movement threshold, newborn rate
//! bounds, 0.1 Hz apnea playback rate).
//!
//! Resolution order: defaults, then values carried by an input file's
//! comments, then command-line flags, then a `--config` JSON file (the file
//! overrides flags). Every command echoes the effective configuration into
//! its output so a run can be reproduced from its artifacts.

use crate::error::CliError;
use clap::Args;
use respiro::signal::AmplitudeThreshold;
use respiro::RateBounds;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub window_s: f64,
    pub overlap: f64,
    pub movement_threshold_uv: f64,
    pub r_low_hz: f64,
    pub r_high_hz: f64,
    pub r_move_hz: f64,
    pub apnea_rate_hz: f64,
    pub amp_threshold_fraction: f64,
    pub amp_threshold_uv: Option<f64>,
    pub states: usize,
    pub include_apnea: bool,
    pub include_movement: bool,
    pub min_event_s: f64,
    pub roc_thresholds: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let bounds = RateBounds::newborn();
        Self {
            window_s: 10.0,
            overlap: 0.95,
            movement_threshold_uv: 400.0,
            r_low_hz: bounds.r_low_hz,
            r_high_hz: bounds.r_high_hz,
            r_move_hz: bounds.r_move_hz,
            apnea_rate_hz: 0.1,
            amp_threshold_fraction: 0.1,
            amp_threshold_uv: None,
            states: 5,
            include_apnea: true,
            include_movement: true,
            min_event_s: 10.0,
            roc_thresholds: 100,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn bounds(&self) -> Result<RateBounds, CliError> {
        RateBounds::new(self.r_low_hz, self.r_high_hz, self.r_move_hz)
            .map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn amp_threshold(&self) -> AmplitudeThreshold {
        match self.amp_threshold_uv {
            Some(uv) => AmplitudeThreshold::Absolute(uv),
            None => AmplitudeThreshold::MedianFraction(self.amp_threshold_fraction),
        }
    }

    /// Effective configuration as comment key/value pairs.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("window_s", self.window_s.to_string()),
            ("overlap", self.overlap.to_string()),
            (
                "movement_threshold_uv",
                self.movement_threshold_uv.to_string(),
            ),
            ("r_low_hz", self.r_low_hz.to_string()),
            ("r_high_hz", self.r_high_hz.to_string()),
            ("r_move_hz", self.r_move_hz.to_string()),
            ("apnea_rate_hz", self.apnea_rate_hz.to_string()),
            (
                "amp_threshold_fraction",
                self.amp_threshold_fraction.to_string(),
            ),
            ("states", self.states.to_string()),
            ("include_apnea", self.include_apnea.to_string()),
            ("include_movement", self.include_movement.to_string()),
            ("min_event_s", self.min_event_s.to_string()),
            ("roc_thresholds", self.roc_thresholds.to_string()),
            ("seed", self.seed.to_string()),
        ];
        if let Some(uv) = self.amp_threshold_uv {
            out.push(("amp_threshold_uv", uv.to_string()));
        }
        out
    }
}

/// Optional per-field overrides, used both for the `--config` JSON file and
/// for values recovered from input-file comments.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigOverlay {
    pub window_s: Option<f64>,
    pub overlap: Option<f64>,
    pub movement_threshold_uv: Option<f64>,
    pub r_low_hz: Option<f64>,
    pub r_high_hz: Option<f64>,
    pub r_move_hz: Option<f64>,
    pub apnea_rate_hz: Option<f64>,
    pub amp_threshold_fraction: Option<f64>,
    pub amp_threshold_uv: Option<f64>,
    pub states: Option<usize>,
    pub include_apnea: Option<bool>,
    pub include_movement: Option<bool>,
    pub min_event_s: Option<f64>,
    pub roc_thresholds: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigOverlay {
    /// Overlay recovered from `# key=value` comments of an input file
    /// (unknown keys ignored; malformed values rejected).
    pub fn from_comments(comments: &BTreeMap<String, String>) -> Result<Self, CliError> {
        fn get<T: std::str::FromStr>(
            comments: &BTreeMap<String, String>,
            key: &str,
        ) -> Result<Option<T>, CliError> {
            comments
                .get(key)
                .map(|v| {
                    v.parse::<T>()
                        .map_err(|_| CliError::Data(format!("bad {key} comment: {v:?}")))
                })
                .transpose()
        }
        Ok(Self {
            window_s: get(comments, "window_s")?,
            overlap: get(comments, "overlap")?,
            movement_threshold_uv: get(comments, "movement_threshold_uv")?,
            r_low_hz: get(comments, "r_low_hz")?,
            r_high_hz: get(comments, "r_high_hz")?,
            r_move_hz: get(comments, "r_move_hz")?,
            apnea_rate_hz: get(comments, "apnea_rate_hz")?,
            amp_threshold_fraction: get(comments, "amp_threshold_fraction")?,
            amp_threshold_uv: get(comments, "amp_threshold_uv")?,
            states: get(comments, "states")?,
            include_apnea: get(comments, "include_apnea")?,
            include_movement: get(comments, "include_movement")?,
            min_event_s: get(comments, "min_event_s")?,
            roc_thresholds: get(comments, "roc_thresholds")?,
            seed: get(comments, "seed")?,
        })
    }

    fn apply(&self, config: &mut PipelineConfig) {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field.clone() { config.$field = v; })*
            };
        }
        take!(
            window_s,
            overlap,
            movement_threshold_uv,
            r_low_hz,
            r_high_hz,
            r_move_hz,
            apnea_rate_hz,
            amp_threshold_fraction,
            states,
            include_apnea,
            include_movement,
            min_event_s,
            roc_thresholds,
            seed
        );
        if self.amp_threshold_uv.is_some() {
            config.amp_threshold_uv = self.amp_threshold_uv;
        }
    }
}

/// Configuration flags shared by the pipeline subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON config file; values present in it override the flags below
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Observation window length, seconds
    #[arg(long)]
    pub window_s: Option<f64>,
    /// Window overlap fraction in [0, 1)
    #[arg(long)]
    pub overlap: Option<f64>,
    /// Movement-artifact threshold, microvolts
    #[arg(long)]
    pub movement_threshold_uv: Option<f64>,
    /// Lowest admissible breathing rate, Hz
    #[arg(long)]
    pub r_low_hz: Option<f64>,
    /// Highest admissible breathing rate, Hz
    #[arg(long)]
    pub r_high_hz: Option<f64>,
    /// Movement sentinel rate, Hz (at least 10x the high bound)
    #[arg(long)]
    pub r_move_hz: Option<f64>,
    /// Apnea playback rate for synthesis, Hz
    #[arg(long)]
    pub apnea_rate_hz: Option<f64>,
    /// Apnea gate as a fraction of the median window amplitude
    #[arg(long)]
    pub amp_threshold_fraction: Option<f64>,
    /// Apnea gate as an absolute amplitude, microvolts (overrides the fraction)
    #[arg(long)]
    pub amp_threshold_uv: Option<f64>,
    /// Number of model states
    #[arg(long, short = 'N')]
    pub states: Option<usize>,
    /// Reserve a zero-rate apnea state
    #[arg(long, value_name = "BOOL")]
    pub include_apnea: Option<bool>,
    /// Reserve a movement sentinel state
    #[arg(long, value_name = "BOOL")]
    pub include_movement: Option<bool>,
    /// Shortest event counted as apnea, seconds
    #[arg(long)]
    pub min_event_s: Option<f64>,
    /// Number of thresholds in a ROC sweep
    #[arg(long)]
    pub roc_thresholds: Option<usize>,
    /// PRNG seed
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigFlags {
    fn as_overlay(&self) -> ConfigOverlay {
        ConfigOverlay {
            window_s: self.window_s,
            overlap: self.overlap,
            movement_threshold_uv: self.movement_threshold_uv,
            r_low_hz: self.r_low_hz,
            r_high_hz: self.r_high_hz,
            r_move_hz: self.r_move_hz,
            apnea_rate_hz: self.apnea_rate_hz,
            amp_threshold_fraction: self.amp_threshold_fraction,
            amp_threshold_uv: self.amp_threshold_uv,
            states: self.states,
            include_apnea: self.include_apnea,
            include_movement: self.include_movement,
            min_event_s: self.min_event_s,
            roc_thresholds: self.roc_thresholds,
            seed: self.seed,
        }
    }

    /// Resolve: defaults, then `file_comments` overlays (lowest priority),
    /// then these flags, then the `--config` file.
    pub fn resolve_with(
        &self,
        file_comments: Option<&BTreeMap<String, String>>,
    ) -> Result<PipelineConfig, CliError> {
        let mut config = PipelineConfig::default();
        if let Some(comments) = file_comments {
            ConfigOverlay::from_comments(comments)?.apply(&mut config);
        }
        self.as_overlay().apply(&mut config);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let overlay: ConfigOverlay = serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: bad config JSON: {e}", path.display())))?;
            overlay.apply(&mut config);
        }
        Ok(config)
    }

    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        self.resolve_with(None)
    }
}
