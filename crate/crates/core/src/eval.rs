//! Validation and scoring: KL divergence, occupancy statistics, RR accuracy,
//! time-weighted confusion metrics, ROC/AUC analysis and a reference
//! amplitude-threshold apnea detector.
//!
//! Detector timelines are compared at per-window granularity: each step of a
//! [`LabeledTimeline`] stands for one observation window (apnea = positive,
//! breathing = negative) and contributes its step duration to the confusion
//! buckets.

use crate::ctmc::SojournSchedule;
use crate::quantizer::{QuantizedTrajectory, StateSpace};
use crate::signal::{
    estimate_fundamental, sliding_windows, PneumogramRecord, RrTrajectory, SignalError,
    WindowConfig,
};
use crate::RateBounds;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum EvalError {
    #[error("empty input")]
    Empty,
    #[error("support mismatch: {p} vs {q} entries")]
    SupportMismatch { p: usize, q: usize },
    #[error("{which} is not a PMF (sums to {sum})")]
    NotNormalized { which: &'static str, sum: f64 },
    #[error("infinite divergence: p[{index}] > 0 where q[{index}] = 0")]
    InfiniteDivergence { index: usize },
    #[error("negative or non-finite mass at index {index}")]
    InvalidMass { index: usize },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("ROC axes undefined: ground truth is all-{0}")]
    UndefinedAxis(&'static str),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Per-step binary labels on a uniform grid; true marks the positive class
/// (apnea).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTimeline {
    step_s: f64,
    labels: Vec<bool>,
}

impl LabeledTimeline {
    pub fn new(step_s: f64, labels: Vec<bool>) -> Result<Self, EvalError> {
        if labels.is_empty() {
            return Err(EvalError::InvalidTimeline("no steps".into()));
        }
        if !(step_s.is_finite() && step_s > 0.0) {
            return Err(EvalError::InvalidTimeline(format!(
                "step {step_s} s must be positive"
            )));
        }
        Ok(Self { step_s, labels })
    }

    pub fn step_s(&self) -> f64 {
        self.step_s
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Total seconds in each confusion bucket; the four buckets partition the
/// compared duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfusionTimes {
    pub true_positive_s: f64,
    pub true_negative_s: f64,
    pub false_positive_s: f64,
    pub false_negative_s: f64,
}

impl ConfusionTimes {
    pub fn total_s(&self) -> f64 {
        self.true_positive_s + self.true_negative_s + self.false_positive_s + self.false_negative_s
    }
}

/// Sensitivity, specificity and diagnostic odds ratio; a quantity whose
/// denominator vanishes is reported as None rather than fabricated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionMetrics {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub diagnostic_odds_ratio: Option<f64>,
}

/// Kullback-Leibler divergence D(p || q) in bits.
///
/// Both arguments must be PMFs over the same support; terms with p = 0
/// contribute nothing; p > 0 where q = 0 is reported as an error rather than
/// an infinity.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, EvalError> {
    if p.is_empty() {
        return Err(EvalError::Empty);
    }
    if p.len() != q.len() {
        return Err(EvalError::SupportMismatch {
            p: p.len(),
            q: q.len(),
        });
    }
    for pmf in [p, q] {
        for (i, &mass) in pmf.iter().enumerate() {
            if !mass.is_finite() || mass < 0.0 {
                return Err(EvalError::InvalidMass { index: i });
            }
        }
    }
    for (name, pmf) in [("p", p), ("q", q)] {
        let sum: f64 = pmf.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(EvalError::NotNormalized { which: name, sum });
        }
    }
    let mut bits = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(EvalError::InfiniteDivergence { index: i });
        }
        bits += pi * (pi / qi).log2();
    }
    Ok(bits)
}

/// Relative state frequencies of a quantized trajectory, over the model's own
/// N states. The trajectory must be non-empty.
pub fn occupancy_pmf(qt: &QuantizedTrajectory) -> Vec<f64> {
    assert!(!qt.is_empty(), "occupancy of an empty trajectory");
    let mut counts = vec![0usize; qt.state_space.len()];
    for &i in &qt.state_indices {
        counts[i] += 1;
    }
    let total = qt.state_indices.len() as f64;
    counts.iter().map(|&c| c as f64 / total).collect()
}

/// RR estimation accuracy against an aligned ground-truth trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrAccuracy {
    /// Fraction of truth>0 windows with relative error inside the tolerance;
    /// None when the truth has no nonzero windows.
    pub p_correct: Option<f64>,
    /// Root mean square error over all compared windows, Hz.
    pub rmse_hz: f64,
    /// RMSE divided by the mean true rate; None when that mean is zero.
    pub normalized_rmse: Option<f64>,
}

/// Compare an estimated trajectory to the true one: probability of correct
/// estimation within `tolerance_fraction` (clinical rule: ±15%), RMSE over
/// all compared windows, and RMSE normalized by the mean true rate.
pub fn rr_accuracy(
    estimated: &RrTrajectory,
    truth: &RrTrajectory,
    tolerance_fraction: f64,
) -> Result<RrAccuracy, EvalError> {
    if estimated.len() != truth.len() {
        return Err(EvalError::Alignment(format!(
            "trajectory lengths differ: {} vs {}",
            estimated.len(),
            truth.len()
        )));
    }
    if estimated.is_empty() {
        return Err(EvalError::Empty);
    }
    if (estimated.step_s - truth.step_s).abs() > 1e-9 * truth.step_s.max(1.0) {
        return Err(EvalError::Alignment(format!(
            "trajectory steps differ: {} s vs {} s",
            estimated.step_s, truth.step_s
        )));
    }

    let mut in_tolerance = 0usize;
    let mut nonzero = 0usize;
    let mut square_error = 0.0;
    let mut truth_sum = 0.0;
    for (&e, &t) in estimated.values_hz.iter().zip(&truth.values_hz) {
        square_error += (e - t) * (e - t);
        truth_sum += t;
        if t > 0.0 {
            nonzero += 1;
            if (e - t).abs() <= tolerance_fraction * t {
                in_tolerance += 1;
            }
        }
    }
    let n = truth.len() as f64;
    let rmse_hz = (square_error / n).sqrt();
    let truth_mean = truth_sum / n;
    Ok(RrAccuracy {
        p_correct: (nonzero > 0).then(|| in_tolerance as f64 / nonzero as f64),
        rmse_hz,
        normalized_rmse: (truth_mean > 0.0).then(|| rmse_hz / truth_mean),
    })
}

/// Accumulate step seconds into the four confusion buckets.
pub fn confusion_times(
    pred: &LabeledTimeline,
    truth: &LabeledTimeline,
) -> Result<ConfusionTimes, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::Alignment(format!(
            "timeline lengths differ: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if (pred.step_s - truth.step_s).abs() > 1e-9 * truth.step_s.max(1.0) {
        return Err(EvalError::Alignment(format!(
            "timeline steps differ: {} s vs {} s",
            pred.step_s, truth.step_s
        )));
    }
    let step = truth.step_s;
    let mut ct = ConfusionTimes {
        true_positive_s: 0.0,
        true_negative_s: 0.0,
        false_positive_s: 0.0,
        false_negative_s: 0.0,
    };
    for (&p, &t) in pred.labels.iter().zip(&truth.labels) {
        match (p, t) {
            (true, true) => ct.true_positive_s += step,
            (false, false) => ct.true_negative_s += step,
            (true, false) => ct.false_positive_s += step,
            (false, true) => ct.false_negative_s += step,
        }
    }
    Ok(ct)
}

/// Sensitivity = TP/(TP+FN), specificity = TN/(TN+FP), and the diagnostic
/// odds ratio (TP/FN)/(FP/TN); each undefined where its denominator is zero.
pub fn sens_spec_dor(ct: &ConfusionTimes) -> DetectionMetrics {
    let tp = ct.true_positive_s;
    let tn = ct.true_negative_s;
    let fp = ct.false_positive_s;
    let fn_ = ct.false_negative_s;
    DetectionMetrics {
        sensitivity: (tp + fn_ > 0.0).then(|| tp / (tp + fn_)),
        specificity: (tn + fp > 0.0).then(|| tn / (tn + fp)),
        diagnostic_odds_ratio: (fn_ > 0.0 && fp > 0.0).then(|| (tp * tn) / (fn_ * fp)),
    }
}

/// Diagnostic odds ratio from sensitivity and specificity, where defined.
pub fn dor_from_rates(sensitivity: f64, specificity: f64) -> Option<f64> {
    (sensitivity < 1.0 && specificity < 1.0)
        .then(|| sensitivity / (1.0 - sensitivity) * (specificity / (1.0 - specificity)))
}

/// One ROC operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
}

/// ROC curve with its AUC and the operating point nearest the ideal (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct RocAnalysis {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub optimal: RocPoint,
}

/// Sweep thresholds over per-step scores (positive where score >= threshold)
/// against a binary ground truth.
///
/// One point per threshold; the AUC integrates the curve augmented with
/// (0,0) and (1,1) by the trapezoidal rule; the optimal threshold minimizes
/// the Euclidean distance to (0,1), ties resolved toward the higher
/// threshold.
pub fn roc(
    scores: &[f64],
    truth: &LabeledTimeline,
    thresholds: &[f64],
) -> Result<RocAnalysis, EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::Alignment(format!(
            "{} scores vs {} truth steps",
            scores.len(),
            truth.len()
        )));
    }
    if thresholds.is_empty() {
        return Err(EvalError::InvalidThresholds("empty sweep".into()));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(EvalError::InvalidThresholds(
            "sweep must be sorted ascending".into(),
        ));
    }
    let positives = truth.labels.iter().filter(|&&l| l).count();
    let negatives = truth.len() - positives;
    if positives == 0 {
        return Err(EvalError::UndefinedAxis("negative"));
    }
    if negatives == 0 {
        return Err(EvalError::UndefinedAxis("positive"));
    }

    let mut points = Vec::with_capacity(thresholds.len());
    let mut optimal: Option<(f64, RocPoint)> = None;
    for &threshold in thresholds {
        let mut tp = 0usize;
        let mut fp = 0usize;
        for (&score, &label) in scores.iter().zip(&truth.labels) {
            if score >= threshold {
                if label {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        let point = RocPoint {
            threshold,
            false_positive_rate: fp as f64 / negatives as f64,
            true_positive_rate: tp as f64 / positives as f64,
        };
        let dist2 = point.false_positive_rate.powi(2) + (1.0 - point.true_positive_rate).powi(2);
        // <= keeps the later (higher) threshold on ties
        if optimal.as_ref().is_none_or(|(best, _)| dist2 <= *best) {
            optimal = Some((dist2, point));
        }
        points.push(point);
    }

    let mut curve: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.false_positive_rate, p.true_positive_rate))
        .collect();
    curve.push((0.0, 0.0));
    curve.push((1.0, 1.0));
    curve.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut auc = 0.0;
    for w in curve.windows(2) {
        auc += (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0;
    }

    Ok(RocAnalysis {
        points,
        auc,
        optimal: optimal.unwrap().1,
    })
}

/// Evenly spaced threshold sweep over the observed score range.
pub fn evenly_spaced_thresholds(scores: &[f64], count: usize) -> Vec<f64> {
    assert!(count >= 1);
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() || lo == hi || count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// A maximal run of positive steps; `end_index` is inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimelineEvent {
    pub start_index: usize,
    pub end_index: usize,
}

impl TimelineEvent {
    /// Event span in seconds: a run of windows starting in [a, b] covers
    /// [a, b + window].
    pub fn span_s(&self, step_s: f64, window_s: f64) -> (f64, f64) {
        (
            self.start_index as f64 * step_s,
            self.end_index as f64 * step_s + window_s,
        )
    }

    pub fn duration_s(&self, step_s: f64, window_s: f64) -> f64 {
        (self.end_index - self.start_index) as f64 * step_s + window_s
    }
}

/// Maximal positive runs of a timeline.
pub fn positive_events(timeline: &LabeledTimeline) -> Vec<TimelineEvent> {
    let mut events = Vec::new();
    let mut start = None;
    for (i, &label) in timeline.labels.iter().enumerate() {
        match (label, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                events.push(TimelineEvent {
                    start_index: s,
                    end_index: i - 1,
                });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        events.push(TimelineEvent {
            start_index: s,
            end_index: timeline.labels.len() - 1,
        });
    }
    events
}

/// Reference apnea detector configuration.
#[derive(Debug, Clone)]
pub struct ApneaDetectorConfig {
    pub window: WindowConfig,
    pub bounds: RateBounds,
    /// Positive events shorter than this are respiratory pauses, relabeled
    /// negative (clinical rule: apnea lasts at least 10 s).
    pub min_event_s: f64,
}

/// Detector output: raw per-window amplitude scores (low score means apnea)
/// and the post-processed binary timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct ApneaDetection {
    pub scores: Vec<f64>,
    pub labels: LabeledTimeline,
}

/// Amplitude-threshold apnea detector over sliding windows.
///
/// Stands in for external video-based detectors so the evaluation pipeline is
/// testable end to end. The per-window score is the estimated oscillation
/// amplitude; windows scoring at or below `apnea_threshold` are positive;
/// positive runs whose covered duration (run span plus one window length) is
/// shorter than `min_event_s` are relabeled negative.
pub fn reference_apnea_detector(
    record: &PneumogramRecord,
    cfg: &ApneaDetectorConfig,
    apnea_threshold: f64,
) -> Result<ApneaDetection, EvalError> {
    let fs = record.sample_rate_hz();
    let needed = cfg.window.window_samples();
    if record.len() < needed {
        return Err(SignalError::InsufficientData {
            needed,
            available: record.len(),
        }
        .into());
    }
    let band = (cfg.bounds.r_low_hz, cfg.bounds.r_high_hz);
    let mut scores = Vec::with_capacity(cfg.window.window_count(record.len()));
    for window in sliding_windows(record.samples(), &cfg.window) {
        let (_, amplitude) = estimate_fundamental(window, fs, band)?;
        scores.push(amplitude);
    }

    let step_s = cfg.window.step_s(fs);
    let window_s = cfg.window.window_s(fs);
    let mut labels: Vec<bool> = scores.iter().map(|&a| a <= apnea_threshold).collect();
    let timeline = LabeledTimeline::new(step_s, labels.clone())?;
    for event in positive_events(&timeline) {
        if event.duration_s(step_s, window_s) < cfg.min_event_s {
            for label in &mut labels[event.start_index..=event.end_index] {
                *label = false;
            }
        }
    }
    Ok(ApneaDetection {
        scores,
        labels: LabeledTimeline::new(step_s, labels)?,
    })
}

/// Window-level ground truth from a simulated schedule: window j is positive
/// when its whole span lies inside a sojourn of `positive_state`.
pub fn window_truth_from_schedule(
    schedule: &SojournSchedule,
    positive_state: usize,
    window_s: f64,
    step_s: f64,
    window_count: usize,
) -> Result<LabeledTimeline, EvalError> {
    let mut intervals = Vec::new();
    let mut t = 0.0;
    for e in schedule.entries() {
        if e.state == positive_state {
            intervals.push((t, t + e.sojourn_s));
        }
        t += e.sojourn_s;
    }
    let labels = (0..window_count)
        .map(|j| {
            let start = j as f64 * step_s;
            let end = start + window_s;
            intervals
                .iter()
                .any(|&(a, b)| start >= a - 1e-9 && end <= b + 1e-9)
        })
        .collect();
    LabeledTimeline::new(step_s, labels)
}

/// Window-level true RR trajectory from a schedule: the rate of the state
/// occupying each window's center.
pub fn truth_trajectory_from_schedule(
    schedule: &SojournSchedule,
    ss: &StateSpace,
    window_s: f64,
    step_s: f64,
    window_count: usize,
) -> RrTrajectory {
    let values_hz = (0..window_count)
        .map(|j| ss.rate(schedule.state_at(j as f64 * step_s + window_s / 2.0)))
        .collect();
    RrTrajectory {
        values_hz,
        step_s,
        origin_s: 0.0,
    }
}
