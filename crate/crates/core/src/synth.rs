//! Synthetic breathing artifacts from sojourn schedules.
//!
//! Two synthesis paths:
//!
//! * [`synth_motion_signal`] renders a schedule as a phase-continuous
//!   sinusoid whose instantaneous frequency follows the simulated states
//!   (a desk-scale stand-in for a recorded breathing video);
//! * [`plan_warp`] + [`warp_frames`] rewrite a recorded frame sequence so the
//!   framed subject appears to breathe with the simulated pattern: per
//!   sojourn, a source block is stretched or contracted in time by per-pixel
//!   natural cubic spline resampling. Stretching low-passes the camera noise,
//!   so a high-pass-filtered compensation noise restores the original noise
//!   level.
//!
//! Rates are first normalized by the source subject's breathing rate
//! ([`normalize_rates`]); a schedule state then maps to the playback speed of
//! the source material.

use crate::ctmc::{GeneratorMatrix, SojournSchedule};
use crate::quantizer::StateSpace;
use crate::rng;
use crate::signal::{PneumogramRecord, SignalError};
use rand_chacha::rand_core::RngCore;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SynthError {
    #[error("state space still contains the movement state; strip it before synthesis")]
    MovementPresent,
    #[error("schedule state {state} is unsupported here ({reason})")]
    UnsupportedState { state: usize, reason: &'static str },
    #[error("empty schedule")]
    EmptySchedule,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("plan/source mismatch: {0}")]
    PlanMismatch(String),
    #[error("invalid frame data: {0}")]
    InvalidFrames(String),
    #[error("region {x},{y} {width}x{height} invalid for {frame_width}x{frame_height} frames")]
    InvalidRegion {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
        frame_width: usize,
        frame_height: usize,
    },
    #[error("cutoff {cutoff_hz} Hz outside (0, {nyquist_hz}) Hz")]
    InvalidCutoff { cutoff_hz: f64, nyquist_hz: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Raw luminance frame stack: `frames x height x width` values in [0, 1],
/// frame-major, row-major within a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frame_count: usize,
    height: usize,
    width: usize,
    frame_rate_hz: f64,
    data: Vec<f64>,
}

impl FrameSequence {
    pub fn new(
        frame_count: usize,
        height: usize,
        width: usize,
        frame_rate_hz: f64,
        data: Vec<f64>,
    ) -> Result<Self, SynthError> {
        if frame_count < 2 {
            return Err(SynthError::InvalidFrames(format!(
                "need at least 2 frames, got {frame_count}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(SynthError::InvalidFrames(format!(
                "degenerate frame size {width}x{height}"
            )));
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(SynthError::InvalidFrames(format!(
                "invalid frame rate {frame_rate_hz}"
            )));
        }
        if data.len() != frame_count * height * width {
            return Err(SynthError::InvalidFrames(format!(
                "{} values for {frame_count}x{height}x{width}",
                data.len()
            )));
        }
        if !data
            .iter()
            .all(|v| v.is_finite() && (0.0..=1.0).contains(v))
        {
            return Err(SynthError::InvalidFrames(
                "pixel values must be finite and within [0, 1]".into(),
            ));
        }
        Ok(Self {
            frame_count,
            height,
            width,
            frame_rate_hz,
            data,
        })
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, frame: usize, y: usize, x: usize) -> f64 {
        self.data[(frame * self.height + y) * self.width + x]
    }

    /// Time series of one pixel across all frames.
    pub fn pixel_series(&self, y: usize, x: usize) -> Vec<f64> {
        (0..self.frame_count).map(|f| self.pixel(f, y, x)).collect()
    }
}

/// Pixel-region selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// Noise-compensation switch for the stretch branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseOptions {
    pub enabled: bool,
    /// Variance of the source camera noise (see [`estimate_noise_variance`]).
    pub variance: f64,
}

impl NoiseOptions {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            variance: 0.0,
        }
    }

    pub fn with_variance(variance: f64) -> Self {
        Self {
            enabled: true,
            variance,
        }
    }
}

/// Normalize model rates by the source subject's breathing rate.
///
/// The apnea state cannot be played at ratio 0, so its ratio is substituted
/// with `apnea_rate_hz / source_rate_hz` where `0 < apnea_rate_hz < r_low`
/// (slow enough to be clinically an apnea). The movement state must have been
/// stripped beforehand.
pub fn normalize_rates(
    ss: &StateSpace,
    source_rate_hz: f64,
    apnea_rate_hz: f64,
) -> Result<Vec<f64>, SynthError> {
    if ss.has_movement() {
        return Err(SynthError::MovementPresent);
    }
    if !(source_rate_hz.is_finite() && source_rate_hz > 0.0) {
        return Err(SynthError::InvalidParameter(format!(
            "source rate {source_rate_hz} Hz must be positive"
        )));
    }
    if ss.has_apnea() && !(apnea_rate_hz > 0.0 && apnea_rate_hz < ss.bounds().r_low_hz) {
        return Err(SynthError::InvalidParameter(format!(
            "apnea playback rate {apnea_rate_hz} Hz must lie in (0, {})",
            ss.bounds().r_low_hz
        )));
    }
    Ok(ss
        .rates_hz()
        .iter()
        .enumerate()
        .map(|(n, &rate)| {
            if n == 0 && ss.has_apnea() {
                apnea_rate_hz / source_rate_hz
            } else {
                rate / source_rate_hz
            }
        })
        .collect())
}

/// Optional global scaling: multiply all ratios so the state with the
/// smallest exit rate (longest mean sojourn) plays at native speed.
pub fn scale_to_longest_sojourn(
    ratios: &[f64],
    generator: &GeneratorMatrix,
) -> Result<Vec<f64>, SynthError> {
    if ratios.len() != generator.dim() {
        return Err(SynthError::InvalidParameter(format!(
            "{} ratios for a {}-state generator",
            ratios.len(),
            generator.dim()
        )));
    }
    let slowest = (0..generator.dim())
        .min_by(|&a, &b| {
            generator
                .exit_rate(a)
                .partial_cmp(&generator.exit_rate(b))
                .unwrap()
        })
        .unwrap();
    let anchor = ratios[slowest];
    if !(anchor.is_finite() && anchor > 0.0) {
        return Err(SynthError::InvalidParameter(format!(
            "anchor ratio {anchor} must be positive"
        )));
    }
    Ok(ratios.iter().map(|r| r / anchor).collect())
}

/// One sojourn's rendering budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpBlock {
    /// Playback speed of the source material for this sojourn.
    pub rate_ratio: f64,
    /// Output frames to produce: round(sojourn * frame_rate), at least 1.
    pub output_frames: usize,
    /// Source frame the block starts at: round(start_time * frame_rate),
    /// wrapped into the source.
    pub source_start: usize,
    /// Source frames consumed: ceil(sojourn * ratio * frame_rate), at least
    /// one. Equal to `output_frames` for ratio 1 (copy-through), smaller for
    /// slow-down (stretch), larger for speed-up (contraction).
    pub source_frames: usize,
}

/// Frame budgets for every sojourn of a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpPlan {
    pub blocks: Vec<WarpBlock>,
    pub source_len: usize,
    pub frame_rate_hz: f64,
}

impl WarpPlan {
    /// Total output length: the sum of the per-block budgets.
    pub fn output_frames(&self) -> usize {
        self.blocks.iter().map(|b| b.output_frames).sum()
    }
}

/// Map a schedule onto source-video blocks.
///
/// The source is consumed in lockstep with the output timeline (block l
/// starts at the frame index of its jump time); blocks that would overrun the
/// source wrap around to frame 0.
pub fn plan_warp(
    schedule: &SojournSchedule,
    rate_ratios: &[f64],
    frame_rate_hz: f64,
    source_len: usize,
) -> Result<WarpPlan, SynthError> {
    if schedule.entries().is_empty() {
        return Err(SynthError::EmptySchedule);
    }
    if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
        return Err(SynthError::InvalidParameter(format!(
            "frame rate {frame_rate_hz} must be positive"
        )));
    }
    if source_len == 0 {
        return Err(SynthError::InvalidParameter("empty source".into()));
    }
    let mut blocks = Vec::with_capacity(schedule.entries().len());
    let mut start_time = 0.0f64;
    for entry in schedule.entries() {
        let ratio = *rate_ratios
            .get(entry.state)
            .ok_or(SynthError::UnsupportedState {
                state: entry.state,
                reason: "no rate ratio for this state",
            })?;
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(SynthError::InvalidParameter(format!(
                "rate ratio {ratio} for state {} must be positive",
                entry.state
            )));
        }
        let output_frames = ((entry.sojourn_s * frame_rate_hz).round() as usize).max(1);
        let source_frames = if ratio == 1.0 {
            output_frames
        } else {
            ((entry.sojourn_s * ratio * frame_rate_hz).ceil() as usize).max(1)
        };
        blocks.push(WarpBlock {
            rate_ratio: ratio,
            output_frames,
            source_start: ((start_time * frame_rate_hz).round() as usize) % source_len,
            source_frames,
        });
        start_time += entry.sojourn_s;
    }
    Ok(WarpPlan {
        blocks,
        source_len,
        frame_rate_hz,
    })
}

/// Execute a warp plan on a source sequence.
///
/// Per sojourn and per pixel, the source block's time series is resampled to
/// the output budget with a natural cubic spline. Copy-through blocks
/// (equal budgets) transfer frames bit-identically. Stretched blocks
/// (ratio < 1) are first band-limited to the rescaled Nyquist
/// `frame_rate / (2 * stretch)` (the interpolating filter: content above it
/// cannot survive the stretch); with noise compensation enabled they then
/// receive high-pass-filtered Gaussian noise above that same cutoff, so the
/// output keeps the source's noise level. Contraction needs neither because
/// decimation does not alter the noise statistics. Output pixels are clamped
/// to [0, 1]. Deterministic for a given seed: each pixel draws from its own
/// (seed, pixel-index) stream.
pub fn warp_frames(
    src: &FrameSequence,
    plan: &WarpPlan,
    noise: NoiseOptions,
    seed: u64,
) -> Result<FrameSequence, SynthError> {
    if plan.source_len != src.frame_count() {
        return Err(SynthError::PlanMismatch(format!(
            "plan was made for {} source frames, sequence has {}",
            plan.source_len,
            src.frame_count()
        )));
    }
    if (plan.frame_rate_hz - src.frame_rate_hz()).abs() > 1e-9 * src.frame_rate_hz() {
        return Err(SynthError::PlanMismatch(format!(
            "plan frame rate {} vs source {}",
            plan.frame_rate_hz,
            src.frame_rate_hz()
        )));
    }
    let out_frames = plan.output_frames();
    if out_frames < 2 {
        return Err(SynthError::InvalidParameter(
            "plan produces fewer than 2 output frames".into(),
        ));
    }

    let height = src.height();
    let width = src.width();
    let pixels = height * width;
    let mut out = vec![0.0f64; out_frames * pixels];

    let mut source_block = Vec::new();
    let mut offsets = Vec::with_capacity(plan.blocks.len());
    {
        let mut acc = 0usize;
        for b in &plan.blocks {
            offsets.push(acc);
            acc += b.output_frames;
        }
    }

    for y in 0..height {
        for x in 0..width {
            let pixel_index = (y * width + x) as u64;
            let mut pixel_rng = rng::stream_rng(seed, pixel_index);
            for (block, &offset) in plan.blocks.iter().zip(&offsets) {
                gather_block(src, block, y, x, &mut source_block);
                let stretching =
                    block.rate_ratio < 1.0 && block.output_frames > block.source_frames;
                let stretch = block.output_frames as f64 / block.source_frames as f64;
                let cutoff = plan.frame_rate_hz / (2.0 * stretch);
                let resampled = if block.output_frames == block.source_frames {
                    source_block.clone()
                } else if stretching {
                    // the interpolating filter: content above the rescaled
                    // Nyquist does not survive the stretch
                    let limited = band_limit_block(&source_block, cutoff, plan.frame_rate_hz);
                    resample_series(&limited, block.output_frames)
                } else {
                    resample_series(&source_block, block.output_frames)
                };
                let compensate = noise.enabled && noise.variance > 0.0 && stretching;
                let comp = if compensate {
                    compensation_noise_with_rng(
                        block.output_frames,
                        noise.variance,
                        cutoff,
                        plan.frame_rate_hz,
                        &mut pixel_rng,
                    )?
                } else {
                    Vec::new()
                };
                for (i, &value) in resampled.iter().enumerate() {
                    let v = if compensate { value + comp[i] } else { value };
                    out[(offset + i) * pixels + y * width + x] = v.clamp(0.0, 1.0);
                }
            }
        }
    }

    FrameSequence::new(out_frames, height, width, src.frame_rate_hz(), out)
}

/// Collect a block's time series for one pixel, wrapping past the source end.
fn gather_block(src: &FrameSequence, block: &WarpBlock, y: usize, x: usize, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(block.source_frames);
    let len = src.frame_count();
    for i in 0..block.source_frames {
        out.push(src.pixel((block.source_start + i) % len, y, x));
    }
}

/// Camera-noise variance estimate over a static region: the mean over region
/// pixels of the per-pixel unbiased sample variance across time.
pub fn estimate_noise_variance(src: &FrameSequence, region: Rect) -> Result<f64, SynthError> {
    let invalid = SynthError::InvalidRegion {
        x: region.x,
        y: region.y,
        width: region.width,
        height: region.height,
        frame_width: src.width(),
        frame_height: src.height(),
    };
    if region.width == 0
        || region.height == 0
        || region.x + region.width > src.width()
        || region.y + region.height > src.height()
    {
        return Err(invalid);
    }
    let frames = src.frame_count() as f64;
    let mut total = 0.0;
    for y in region.y..region.y + region.height {
        for x in region.x..region.x + region.width {
            let mut mean = 0.0;
            for f in 0..src.frame_count() {
                mean += src.pixel(f, y, x);
            }
            mean /= frames;
            let mut ss = 0.0;
            for f in 0..src.frame_count() {
                let d = src.pixel(f, y, x) - mean;
                ss += d * d;
            }
            total += ss / (frames - 1.0);
        }
    }
    Ok(total / (region.width * region.height) as f64)
}

/// Zero-mean Gaussian sequence with the given variance, high-pass filtered so
/// only content above the interpolation cutoff remains.
///
/// The filter is a second-order critically damped recursive high-pass with
/// its -3 dB point at `cutoff_hz`; state starts at zero for each call.
pub fn compensation_noise(
    length: usize,
    variance: f64,
    cutoff_hz: f64,
    frame_rate_hz: f64,
    stream_seed: u64,
) -> Result<Vec<f64>, SynthError> {
    let mut rng = rng::seeded_rng(stream_seed);
    compensation_noise_with_rng(length, variance, cutoff_hz, frame_rate_hz, &mut rng)
}

fn compensation_noise_with_rng<R: RngCore>(
    length: usize,
    variance: f64,
    cutoff_hz: f64,
    frame_rate_hz: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SynthError> {
    if !(cutoff_hz > 0.0 && cutoff_hz < frame_rate_hz / 2.0) {
        return Err(SynthError::InvalidCutoff {
            cutoff_hz,
            nyquist_hz: frame_rate_hz / 2.0,
        });
    }
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(SynthError::InvalidParameter(format!(
            "noise variance {variance} must be nonnegative"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![0.0; length]);
    }
    let sigma = variance.sqrt();
    let white: Vec<f64> = (0..length)
        .map(|_| sigma * rng::standard_normal(rng))
        .collect();
    let filter = Biquad::critically_damped_high_pass(cutoff_hz, frame_rate_hz);
    Ok(filter.apply_from(&white, 0.0))
}

/// One direct-form biquad section.
struct Biquad {
    b0: f64,
    b1: f64,
    b2: f64,
    a1: f64,
    a2: f64,
}

impl Biquad {
    /// Critically damped recursive high-pass: bilinear transform of
    /// H(s) = s^2 / (s + w0)^2 with the double pole at
    /// w0 = wc * sqrt(sqrt(2) - 1), which puts the -3 dB point exactly at the
    /// (prewarped) cutoff.
    fn critically_damped_high_pass(cutoff_hz: f64, sample_rate_hz: f64) -> Self {
        let k = 2.0 * sample_rate_hz;
        let wc = k * (std::f64::consts::PI * cutoff_hz / sample_rate_hz).tan();
        let w0 = wc * (std::f64::consts::SQRT_2 - 1.0).sqrt();
        let a0 = k * k + 2.0 * w0 * k + w0 * w0;
        Self {
            b0: k * k / a0,
            b1: -2.0 * k * k / a0,
            b2: k * k / a0,
            a1: (2.0 * w0 * w0 - 2.0 * k * k) / a0,
            a2: (k * k - 2.0 * w0 * k + w0 * w0) / a0,
        }
    }

    /// One low-pass section of a Butterworth cascade.
    fn butterworth_low_pass(cutoff_hz: f64, sample_rate_hz: f64, quality: f64) -> Self {
        let k = 2.0 * sample_rate_hz;
        let wc = k * (std::f64::consts::PI * cutoff_hz / sample_rate_hz).tan();
        let a0 = k * k + wc * k / quality + wc * wc;
        Self {
            b0: wc * wc / a0,
            b1: 2.0 * wc * wc / a0,
            b2: wc * wc / a0,
            a1: (2.0 * wc * wc - 2.0 * k * k) / a0,
            a2: (k * k - wc * k / quality + wc * wc) / a0,
        }
    }

    /// Run the section with step-matched initial state: history primed as if
    /// the input had been `initial` forever, so constant-valued signals pass
    /// without a startup transient.
    fn apply_from(&self, input: &[f64], initial: f64) -> Vec<f64> {
        let dc = (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2);
        let (mut x1, mut x2) = (initial, initial);
        let (mut y1, mut y2) = (initial * dc, initial * dc);
        let mut out = Vec::with_capacity(input.len());
        for &x in input {
            let y = self.b0 * x + self.b1 * x1 + self.b2 * x2 - self.a1 * y1 - self.a2 * y2;
            x2 = x1;
            x1 = x;
            y2 = y1;
            y1 = y;
            out.push(y);
        }
        out
    }
}

/// The interpolating filter of the stretch branch: a fourth-order Butterworth
/// low-pass (-3 dB at the cutoff) that band-limits a source block to its
/// rescaled Nyquist before interpolation. Without it a knot-exact spline
/// carries nearly all of the source noise variance into the stretched block
/// and the high-pass compensation would sit on top of it.
fn band_limit_block(block: &[f64], cutoff_hz: f64, sample_rate_hz: f64) -> Vec<f64> {
    let q1 = 1.0 / (2.0 * (std::f64::consts::PI / 8.0).cos());
    let q2 = 1.0 / (2.0 * (3.0 * std::f64::consts::PI / 8.0).cos());
    let first = Biquad::butterworth_low_pass(cutoff_hz, sample_rate_hz, q1);
    let second = Biquad::butterworth_low_pass(cutoff_hz, sample_rate_hz, q2);
    let stage = first.apply_from(block, block[0]);
    second.apply_from(&stage, stage[0])
}

/// Render a schedule as a pneumogram-like motion signal.
///
/// A sinusoid of constant amplitude whose phase advances by
/// `2*pi*rate/sample_rate` per sample while in a state. In the apnea state
/// the phase freezes, so the oscillation halts at its current position: no
/// sample-to-sample jump ever exceeds `amplitude * 2*pi*max_rate/sample_rate`
/// plus the noise, and windows inside an apnea carry no oscillation energy.
/// Seeded white Gaussian noise of the given standard deviation is added.
pub fn synth_motion_signal(
    schedule: &SojournSchedule,
    ss: &StateSpace,
    sample_rate_hz: f64,
    amplitude_uv: f64,
    noise_sigma_uv: f64,
    seed: u64,
) -> Result<PneumogramRecord, SynthError> {
    if let Some(movement) = ss.movement_index() {
        if schedule.entries().iter().any(|e| e.state == movement) {
            return Err(SynthError::UnsupportedState {
                state: movement,
                reason: "movement cannot be rendered as a motion signal",
            });
        }
    }
    let max_rate = schedule
        .entries()
        .iter()
        .map(|e| ss.rate(e.state))
        .fold(0.0f64, f64::max);
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 2.0 * max_rate) {
        return Err(SynthError::InvalidParameter(format!(
            "sample rate {sample_rate_hz} Hz must exceed twice the fastest scheduled rate \
             ({max_rate} Hz)"
        )));
    }
    if !(amplitude_uv.is_finite() && amplitude_uv >= 0.0)
        || !(noise_sigma_uv.is_finite() && noise_sigma_uv >= 0.0)
    {
        return Err(SynthError::InvalidParameter(
            "amplitude and noise sigma must be nonnegative".into(),
        ));
    }

    let total_samples = (schedule.total_duration_s() * sample_rate_hz).round() as usize;
    if total_samples == 0 {
        return Err(SynthError::InvalidParameter(
            "schedule too short for one sample".into(),
        ));
    }
    let mut rng = rng::seeded_rng(seed);
    let mut samples = Vec::with_capacity(total_samples);
    let mut phase = 0.0f64;
    let apnea = ss.apnea_index();
    let mut entry_idx = 0usize;
    let mut entry_end = schedule.entries()[0].sojourn_s;
    for i in 0..total_samples {
        let t = i as f64 / sample_rate_hz;
        while t >= entry_end && entry_idx + 1 < schedule.entries().len() {
            entry_idx += 1;
            entry_end += schedule.entries()[entry_idx].sojourn_s;
        }
        let state = schedule.entries()[entry_idx].state;
        let rate = if Some(state) == apnea {
            0.0
        } else {
            ss.rate(state)
        };
        phase += std::f64::consts::TAU * rate / sample_rate_hz;
        let noise = if noise_sigma_uv > 0.0 {
            noise_sigma_uv * rng::standard_normal(&mut rng)
        } else {
            0.0
        };
        samples.push(amplitude_uv * phase.sin() + noise);
    }
    Ok(PneumogramRecord::new(samples, sample_rate_hz)?)
}

/// Natural cubic spline resampling of a uniform series to `out_len` samples
/// spanning the same interval. Knot positions land exactly on the input
/// values; stretching (out_len > len) interpolates, contracting evaluates the
/// spline at super-unit spacing (decimation without prefilter).
pub fn resample_series(series: &[f64], out_len: usize) -> Vec<f64> {
    let n = series.len();
    if n == 0 || out_len == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![series[0]; out_len];
    }
    if out_len == 1 {
        return vec![series[0]];
    }
    let second = natural_spline_second_derivatives(series);
    let scale = (n - 1) as f64 / (out_len - 1) as f64;
    (0..out_len)
        .map(|j| spline_eval(series, &second, j as f64 * scale))
        .collect()
}

/// Second derivatives of the natural cubic spline through `y` at unit
/// spacing (zero curvature at both ends), via the Thomas algorithm.
fn natural_spline_second_derivatives(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut second = vec![0.0f64; n];
    if n < 3 {
        return second;
    }
    let unknowns = n - 2;
    let mut diag = vec![4.0f64; unknowns];
    let mut rhs: Vec<f64> = (1..n - 1)
        .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]))
        .collect();
    for i in 1..unknowns {
        let factor = 1.0 / diag[i - 1];
        diag[i] -= factor;
        rhs[i] -= factor * rhs[i - 1];
    }
    second[unknowns] = rhs[unknowns - 1] / diag[unknowns - 1];
    for i in (1..unknowns).rev() {
        second[i] = (rhs[i - 1] - second[i + 1]) / diag[i - 1];
    }
    second
}

/// Evaluate the spline at position `x` in knot units; clamped to the span.
fn spline_eval(y: &[f64], second: &[f64], x: f64) -> f64 {
    let n = y.len();
    let x = x.clamp(0.0, (n - 1) as f64);
    let i = (x.floor() as usize).min(n - 2);
    let u = x - i as f64;
    let v = 1.0 - u;
    // at u = 0 both cubic terms vanish and the value is exactly y[i]
    y[i] * v
        + y[i + 1] * u
        + (v * v * v - v) * second[i] / 6.0
        + (u * u * u - u) * second[i + 1] / 6.0
}
