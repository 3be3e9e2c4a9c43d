//! Respiratory-rate estimation from pneumogram-like signals.
//!
//! A pneumogram window is modeled as a constant plus a sinusoid at the
//! breathing frequency plus noise. The fundamental is estimated per window by
//! locating the peak of the DFT magnitude inside the physiological band after
//! removing the window mean (which would otherwise make the zero bin win).
//! Windows that exceed the movement-artifact threshold report the movement
//! sentinel; windows whose oscillation amplitude falls under a threshold
//! report 0 (absence of breathing).

use crate::RateBounds;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SignalError {
    #[error("empty signal")]
    Empty,
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("invalid sample rate {0} Hz")]
    InvalidSampleRate(f64),
    #[error("invalid window config: {0}")]
    InvalidWindow(String),
    #[error(
        "band [{lo}, {hi}] Hz maps to no DFT bin of a {len}-sample window at {sample_rate} Hz"
    )]
    InvalidBand {
        lo: f64,
        hi: f64,
        len: usize,
        sample_rate: f64,
    },
    #[error("record too short: {available} samples, need at least {needed}")]
    InsufficientData { needed: usize, available: usize },
}

/// Uniformly sampled chest-movement signal, in microvolts.
#[derive(Debug, Clone, PartialEq)]
pub struct PneumogramRecord {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl PneumogramRecord {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(SignalError::NonFinite {
                context: "pneumogram samples",
            });
        }
        if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
            return Err(SignalError::InvalidSampleRate(sample_rate_hz));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sample_interval_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Interlaced observation windows: length and overlap in samples.
///
/// Estimation advances by `window - overlap` samples per window; a trailing
/// stretch that does not fill a whole window is discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    window_samples: usize,
    overlap_samples: usize,
}

impl WindowConfig {
    pub const MIN_WINDOW: usize = 4;

    pub fn new(window_samples: usize, overlap_samples: usize) -> Result<Self, SignalError> {
        if window_samples < Self::MIN_WINDOW {
            return Err(SignalError::InvalidWindow(format!(
                "window of {window_samples} samples is below the minimum of {}",
                Self::MIN_WINDOW
            )));
        }
        if overlap_samples >= window_samples {
            return Err(SignalError::InvalidWindow(format!(
                "overlap of {overlap_samples} samples must be smaller than the window \
                 ({window_samples} samples)"
            )));
        }
        Ok(Self {
            window_samples,
            overlap_samples,
        })
    }

    /// Build from a window duration and an overlap fraction in [0, 1).
    pub fn from_duration(
        sample_rate_hz: f64,
        window_s: f64,
        overlap_fraction: f64,
    ) -> Result<Self, SignalError> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(SignalError::InvalidSampleRate(sample_rate_hz));
        }
        if !window_s.is_finite() || window_s <= 0.0 {
            return Err(SignalError::InvalidWindow(format!(
                "window duration {window_s} s must be positive"
            )));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(SignalError::InvalidWindow(format!(
                "overlap fraction {overlap_fraction} outside [0, 1)"
            )));
        }
        let window = (window_s * sample_rate_hz).round() as usize;
        let overlap =
            ((window as f64 * overlap_fraction).round() as usize).min(window.saturating_sub(1));
        Self::new(window, overlap)
    }

    pub fn window_samples(&self) -> usize {
        self.window_samples
    }

    pub fn overlap_samples(&self) -> usize {
        self.overlap_samples
    }

    pub fn step_samples(&self) -> usize {
        self.window_samples - self.overlap_samples
    }

    pub fn window_s(&self, sample_rate_hz: f64) -> f64 {
        self.window_samples as f64 / sample_rate_hz
    }

    pub fn step_s(&self, sample_rate_hz: f64) -> f64 {
        self.step_samples() as f64 / sample_rate_hz
    }

    /// Number of full windows in `len` samples.
    pub fn window_count(&self, len: usize) -> usize {
        if len < self.window_samples {
            0
        } else {
            (len - self.window_samples) / self.step_samples() + 1
        }
    }
}

/// Iterator over the interlaced windows of a sample slice.
pub fn sliding_windows<'a>(
    samples: &'a [f64],
    cfg: &WindowConfig,
) -> impl Iterator<Item = &'a [f64]> + 'a {
    let window = cfg.window_samples();
    let step = cfg.step_samples();
    (0..cfg.window_count(samples.len())).map(move |j| &samples[j * step..j * step + window])
}

/// Estimated RR over time: one value per window, spaced `step_s` apart.
///
/// Each value is 0 (absence of breathing), a rate inside the admissible band,
/// or the movement sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct RrTrajectory {
    pub values_hz: Vec<f64>,
    pub step_s: f64,
    pub origin_s: f64,
}

impl RrTrajectory {
    pub fn len(&self) -> usize {
        self.values_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values_hz.is_empty()
    }
}

/// Amplitude floor below which a window is classified as absence of breathing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmplitudeThreshold {
    /// Fixed floor in the signal's amplitude units.
    Absolute(f64),
    /// Fraction of the median window amplitude over the record's non-movement
    /// windows, computed in a first pass. Scale-free default.
    MedianFraction(f64),
}

impl Default for AmplitudeThreshold {
    fn default() -> Self {
        AmplitudeThreshold::MedianFraction(0.1)
    }
}

/// Peak-of-DFT fundamental frequency and amplitude estimate for one window.
///
/// The window mean is subtracted first, then the squared DFT magnitude is
/// maximized over the bins whose physical frequency `sample_rate * k / len`
/// falls inside `band`. Ties break to the lowest bin. The amplitude is
/// `2/len` times the magnitude at the winning bin. Windows are used raw
/// (rectangular): no taper and no zero padding.
pub fn estimate_fundamental(
    window: &[f64],
    sample_rate_hz: f64,
    band: (f64, f64),
) -> Result<(f64, f64), SignalError> {
    let len = window.len();
    if len < WindowConfig::MIN_WINDOW {
        return Err(SignalError::InvalidWindow(format!(
            "window of {len} samples is below the minimum of {}",
            WindowConfig::MIN_WINDOW
        )));
    }
    if !window.iter().all(|v| v.is_finite()) {
        return Err(SignalError::NonFinite { context: "window" });
    }
    if !sample_rate_hz.is_finite() || sample_rate_hz <= 0.0 {
        return Err(SignalError::InvalidSampleRate(sample_rate_hz));
    }
    let (lo, hi) = band;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || lo >= hi || hi > sample_rate_hz / 2.0 {
        return Err(SignalError::InvalidBand {
            lo,
            hi,
            len,
            sample_rate: sample_rate_hz,
        });
    }

    let mean = window.iter().sum::<f64>() / len as f64;
    let detrended: Vec<f64> = window.iter().map(|v| v - mean).collect();

    // Bin range covering [lo, hi]; the guard epsilon absorbs representation
    // error when a band edge lands exactly on a bin.
    let m = len as f64;
    let k_lo = ((lo * m / sample_rate_hz) - 1e-9).ceil().max(1.0) as usize;
    let k_hi = ((hi * m / sample_rate_hz) + 1e-9).floor() as usize;
    if k_lo > k_hi {
        return Err(SignalError::InvalidBand {
            lo,
            hi,
            len,
            sample_rate: sample_rate_hz,
        });
    }

    let mut best_bin = 0usize;
    let mut best_power = -1.0f64;
    for k in k_lo..=k_hi {
        let power = dft_bin_power(&detrended, k);
        if power > best_power {
            best_power = power;
            best_bin = k;
        }
    }

    let f0 = sample_rate_hz * best_bin as f64 / m;
    let amplitude = 2.0 / m * best_power.sqrt();
    Ok((f0, amplitude))
}

/// Squared magnitude of DFT bin `k`, via a complex rotation recurrence.
fn dft_bin_power(samples: &[f64], k: usize) -> f64 {
    let m = samples.len() as f64;
    let angle = -std::f64::consts::TAU * k as f64 / m;
    let (step_im, step_re) = angle.sin_cos();
    let (mut rot_re, mut rot_im) = (1.0f64, 0.0f64);
    let (mut acc_re, mut acc_im) = (0.0f64, 0.0f64);
    for &x in samples {
        acc_re += x * rot_re;
        acc_im += x * rot_im;
        let next_re = rot_re * step_re - rot_im * step_im;
        rot_im = rot_re * step_im + rot_im * step_re;
        rot_re = next_re;
    }
    acc_re * acc_re + acc_im * acc_im
}

/// Movement-artifact check: true when any sample magnitude exceeds the
/// threshold. The threshold must be positive.
pub fn detect_movement(window: &[f64], threshold_uv: f64) -> bool {
    debug_assert!(threshold_uv > 0.0);
    window.iter().any(|v| v.abs() > threshold_uv)
}

/// Window-by-window RR trajectory with movement and apnea gating.
///
/// Per window, in order: movement windows report the sentinel
/// `bounds.r_move_hz`; windows whose estimated rate falls under
/// `bounds.r_low_hz` or whose amplitude falls under the threshold report 0;
/// all others report the estimated fundamental.
pub fn estimate_rr_trajectory(
    record: &PneumogramRecord,
    cfg: &WindowConfig,
    movement_threshold_uv: f64,
    bounds: &RateBounds,
    amp_threshold: AmplitudeThreshold,
) -> Result<RrTrajectory, SignalError> {
    let needed = cfg.window_samples();
    if record.len() < needed {
        return Err(SignalError::InsufficientData {
            needed,
            available: record.len(),
        });
    }
    if movement_threshold_uv <= 0.0 || !movement_threshold_uv.is_finite() {
        return Err(SignalError::InvalidWindow(format!(
            "movement threshold {movement_threshold_uv} uV must be positive"
        )));
    }
    let fs = record.sample_rate_hz();
    let band = (bounds.r_low_hz, bounds.r_high_hz);

    // First pass: raw per-window estimates. None marks movement windows.
    let mut raw: Vec<Option<(f64, f64)>> = Vec::with_capacity(cfg.window_count(record.len()));
    for window in sliding_windows(record.samples(), cfg) {
        if detect_movement(window, movement_threshold_uv) {
            raw.push(None);
        } else {
            raw.push(Some(estimate_fundamental(window, fs, band)?));
        }
    }

    let floor = match amp_threshold {
        AmplitudeThreshold::Absolute(v) => v,
        AmplitudeThreshold::MedianFraction(fraction) => {
            let mut amps: Vec<f64> = raw.iter().flatten().map(|&(_, a)| a).collect();
            fraction * median(&mut amps)
        }
    };

    let values_hz = raw
        .into_iter()
        .map(|slot| match slot {
            None => bounds.r_move_hz,
            Some((f0, amp)) => {
                if f0 < bounds.r_low_hz || amp < floor {
                    0.0
                } else {
                    f0
                }
            }
        })
        .collect();

    Ok(RrTrajectory {
        values_hz,
        step_s: cfg.step_s(fs),
        origin_s: 0.0,
    })
}

/// Median of a scratch slice; 0 when empty (no gating possible).
fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
