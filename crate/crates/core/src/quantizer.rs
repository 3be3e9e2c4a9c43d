//! State-space selection and scalar quantization of RR trajectories.
//!
//! Model rates are picked by a Lloyd-Max quantizer over the trajectory values
//! inside the admissible band; apnea (rate 0) and movement (sentinel rate)
//! occupy reserved states at the bottom and top of the ordering when enabled.

use crate::signal::RrTrajectory;
use crate::RateBounds;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum QuantizerError {
    #[error("no values to quantize")]
    EmptyInput,
    #[error("non-finite value in quantizer input")]
    NonFinite,
    #[error("degenerate input: {distinct} distinct value(s) cannot support {requested} level(s)")]
    DegenerateInput { distinct: usize, requested: usize },
    #[error("invalid configuration: {0}")]
    Configuration(String),
    #[error("invalid state space: {0}")]
    InvalidStateSpace(String),
}

/// Convergence threshold on the largest level shift per iteration.
pub const LLOYD_MAX_TOLERANCE_HZ: f64 = 1e-9;
/// Iteration cap.
pub const LLOYD_MAX_MAX_ITERATIONS: usize = 500;

/// Lloyd-Max scalar quantizer levels for `values`.
///
/// Deterministic: levels start at the sample quantiles of rank
/// `(2k+1)/(2K)` and alternate centroid/boundary updates until the largest
/// level shift drops under [`LLOYD_MAX_TOLERANCE_HZ`] or the iteration cap is
/// reached. Returns strictly increasing levels that locally minimize the mean
/// squared quantization error.
pub fn lloyd_max(values: &[f64], levels: usize) -> Result<Vec<f64>, QuantizerError> {
    Ok(lloyd_max_trace(values, levels)?.0)
}

/// [`lloyd_max`] plus the mean squared distortion after initialization and
/// after each iteration (a non-increasing sequence).
pub fn lloyd_max_trace(
    values: &[f64],
    levels: usize,
) -> Result<(Vec<f64>, Vec<f64>), QuantizerError> {
    if levels == 0 {
        return Err(QuantizerError::Configuration(
            "level count must be positive".into(),
        ));
    }
    if values.is_empty() {
        return Err(QuantizerError::EmptyInput);
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(QuantizerError::NonFinite);
    }

    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mut distinct = sorted.to_vec();
    distinct.dedup();
    if distinct.len() < levels {
        return Err(QuantizerError::DegenerateInput {
            distinct: distinct.len(),
            requested: levels,
        });
    }

    // Quantile seeding on the full multiset; heavy point masses can collapse
    // adjacent seeds, in which case the distinct values are used instead
    // (interpolation over a strictly increasing array cannot collide).
    let ranks: Vec<f64> = (0..levels)
        .map(|k| (2 * k + 1) as f64 / (2 * levels) as f64)
        .collect();
    let mut lv: Vec<f64> = ranks.iter().map(|&q| quantile(&sorted, q)).collect();
    if lv.windows(2).any(|w| w[1] <= w[0]) {
        lv = ranks.iter().map(|&q| quantile(&distinct, q)).collect();
    }

    let mut distortions = vec![distortion(&sorted, &lv)];
    for _ in 0..LLOYD_MAX_MAX_ITERATIONS {
        let mut next = lv.clone();
        let mut start = 0usize;
        for k in 0..levels {
            // cell k holds the sorted values in (b_{k-1}, b_k]
            let end = if k + 1 < levels {
                let boundary = 0.5 * (lv[k] + lv[k + 1]);
                partition_point(&sorted, start, boundary)
            } else {
                sorted.len()
            };
            if end > start {
                // constant cells keep their value exactly instead of picking
                // up summation noise (point masses are common in quantized
                // trajectories)
                next[k] = if sorted[start] == sorted[end - 1] {
                    sorted[start]
                } else {
                    sorted[start..end].iter().sum::<f64>() / (end - start) as f64
                };
            }
            start = end;
        }
        let shift = lv
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        lv = next;
        distortions.push(distortion(&sorted, &lv));
        if shift < LLOYD_MAX_TOLERANCE_HZ {
            break;
        }
    }

    if lv.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QuantizerError::DegenerateInput {
            distinct: distinct.len(),
            requested: levels,
        });
    }
    Ok((lv, distortions))
}

/// First index in `sorted[start..]` whose value exceeds `boundary`.
fn partition_point(sorted: &[f64], start: usize, boundary: f64) -> usize {
    start + sorted[start..].partition_point(|&v| v <= boundary)
}

/// Linear-interpolation sample quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Mean squared error of nearest-level quantization.
fn distortion(sorted: &[f64], levels: &[f64]) -> f64 {
    let mut total = 0.0;
    for &v in sorted {
        let err = levels
            .iter()
            .map(|&l| (v - l) * (v - l))
            .fold(f64::INFINITY, f64::min);
        total += err;
    }
    total / sorted.len() as f64
}

/// Ordered model rates with optional reserved apnea and movement states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    rates_hz: Vec<f64>,
    has_apnea: bool,
    has_movement: bool,
    bounds: RateBounds,
}

impl StateSpace {
    /// Validating constructor. Single-state spaces only arise from stripping
    /// the movement state off a two-state model; building a fresh model
    /// requires at least two states (see [`build_state_space`]).
    pub fn new(
        rates_hz: Vec<f64>,
        has_apnea: bool,
        has_movement: bool,
        bounds: RateBounds,
    ) -> Result<Self, QuantizerError> {
        if rates_hz.is_empty() {
            return Err(QuantizerError::InvalidStateSpace("no states".into()));
        }
        if !rates_hz.iter().all(|v| v.is_finite()) {
            return Err(QuantizerError::InvalidStateSpace("non-finite rate".into()));
        }
        if rates_hz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(QuantizerError::InvalidStateSpace(
                "rates must be strictly increasing".into(),
            ));
        }
        if has_apnea && rates_hz[0] != 0.0 {
            return Err(QuantizerError::InvalidStateSpace(
                "apnea state requires rate 0 at index 0".into(),
            ));
        }
        if has_movement && *rates_hz.last().unwrap() != bounds.r_move_hz {
            return Err(QuantizerError::InvalidStateSpace(format!(
                "movement state requires the last rate to equal the sentinel {} Hz",
                bounds.r_move_hz
            )));
        }
        let free_start = usize::from(has_apnea);
        let free_end = rates_hz.len() - usize::from(has_movement);
        for &r in &rates_hz[free_start..free_end] {
            if r < bounds.r_low_hz - 1e-9 || r > bounds.r_high_hz + 1e-9 {
                return Err(QuantizerError::InvalidStateSpace(format!(
                    "rate {r} Hz outside the admissible band [{}, {}]",
                    bounds.r_low_hz, bounds.r_high_hz
                )));
            }
        }
        Ok(Self {
            rates_hz,
            has_apnea,
            has_movement,
            bounds,
        })
    }

    pub fn len(&self) -> usize {
        self.rates_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates_hz.is_empty()
    }

    pub fn rates_hz(&self) -> &[f64] {
        &self.rates_hz
    }

    pub fn rate(&self, state: usize) -> f64 {
        self.rates_hz[state]
    }

    pub fn has_apnea(&self) -> bool {
        self.has_apnea
    }

    pub fn has_movement(&self) -> bool {
        self.has_movement
    }

    pub fn bounds(&self) -> &RateBounds {
        &self.bounds
    }

    pub fn apnea_index(&self) -> Option<usize> {
        self.has_apnea.then_some(0)
    }

    pub fn movement_index(&self) -> Option<usize> {
        self.has_movement.then(|| self.rates_hz.len() - 1)
    }

    /// Drop the movement state (used before simulation/synthesis).
    pub fn without_movement(&self) -> Result<StateSpace, QuantizerError> {
        if !self.has_movement {
            return Err(QuantizerError::InvalidStateSpace(
                "no movement state to strip".into(),
            ));
        }
        StateSpace::new(
            self.rates_hz[..self.rates_hz.len() - 1].to_vec(),
            self.has_apnea,
            false,
            self.bounds,
        )
    }

    /// Nearest model rate; ties break to the lower index. Exact sentinel
    /// values map straight to their reserved states.
    pub fn nearest_state(&self, value_hz: f64) -> usize {
        if value_hz == 0.0 && self.has_apnea {
            return 0;
        }
        if value_hz == self.bounds.r_move_hz && self.has_movement {
            return self.rates_hz.len() - 1;
        }
        let mut best = 0usize;
        let mut best_dist = f64::INFINITY;
        for (i, &r) in self.rates_hz.iter().enumerate() {
            let d = (value_hz - r).abs();
            if d < best_dist {
                best_dist = d;
                best = i;
            }
        }
        best
    }
}

/// Trajectory mapped onto state indices of a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTrajectory {
    pub state_indices: Vec<usize>,
    pub step_s: f64,
    pub state_space: StateSpace,
}

impl QuantizedTrajectory {
    pub fn len(&self) -> usize {
        self.state_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state_indices.is_empty()
    }

    /// Rate-valued view of the quantized trajectory.
    pub fn rates_hz(&self) -> Vec<f64> {
        self.state_indices
            .iter()
            .map(|&i| self.state_space.rate(i))
            .collect()
    }
}

/// Select the model state space from an estimated trajectory.
///
/// Reserved states are assigned per the flags; the remaining levels come from
/// [`lloyd_max`] over the trajectory values restricted to the admissible
/// band. Exact 0 and sentinel values are excluded from the fit (the reserved
/// states already represent them); stray values slightly outside the band are
/// clamped onto it.
pub fn build_state_space(
    traj: &RrTrajectory,
    states: usize,
    include_apnea: bool,
    include_movement: bool,
    bounds: &RateBounds,
) -> Result<StateSpace, QuantizerError> {
    if states < 2 {
        return Err(QuantizerError::Configuration(format!(
            "a model needs at least 2 states, got {states}"
        )));
    }
    let reserved = usize::from(include_apnea) + usize::from(include_movement);
    if states <= reserved {
        return Err(QuantizerError::Configuration(format!(
            "{states} states cannot host {reserved} reserved state(s) plus at least one free level"
        )));
    }
    let free = states - reserved;

    let fit: Vec<f64> = traj
        .values_hz
        .iter()
        .filter(|&&v| v != 0.0 && v != bounds.r_move_hz)
        .map(|&v| v.clamp(bounds.r_low_hz, bounds.r_high_hz))
        .collect();
    if fit.is_empty() {
        return Err(QuantizerError::DegenerateInput {
            distinct: 0,
            requested: free,
        });
    }
    let free_levels = lloyd_max(&fit, free)?;

    let mut rates = Vec::with_capacity(states);
    if include_apnea {
        rates.push(0.0);
    }
    rates.extend(free_levels);
    if include_movement {
        rates.push(bounds.r_move_hz);
    }
    StateSpace::new(rates, include_apnea, include_movement, *bounds)
}

/// Nearest-rate quantization of a trajectory onto a state space.
pub fn quantize(traj: &RrTrajectory, ss: &StateSpace) -> QuantizedTrajectory {
    QuantizedTrajectory {
        state_indices: traj
            .values_hz
            .iter()
            .map(|&v| ss.nearest_state(v))
            .collect(),
        step_s: traj.step_s,
        state_space: ss.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn traj(values: Vec<f64>) -> RrTrajectory {
        RrTrajectory {
            values_hz: values,
            step_s: 0.5,
            origin_s: 0.0,
        }
    }

    #[test]
    fn two_point_masses() {
        let mut values = vec![0.5; 100];
        values.extend(vec![1.0; 100]);
        let levels = lloyd_max(&values, 2).unwrap();
        assert!((levels[0] - 0.5).abs() < 1e-12);
        assert!((levels[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_density_optimum_two_levels() {
        let mut r = rng::seeded_rng(100);
        let values: Vec<f64> = (0..10_000).map(|_| rng::uniform_open01(&mut r)).collect();
        let levels = lloyd_max(&values, 2).unwrap();
        assert!((levels[0] - 0.25).abs() < 0.02, "{levels:?}");
        assert!((levels[1] - 0.75).abs() < 0.02, "{levels:?}");
    }

    #[test]
    fn uniform_density_optimum_four_levels() {
        let mut r = rng::seeded_rng(101);
        let values: Vec<f64> = (0..10_000).map(|_| rng::uniform_open01(&mut r)).collect();
        let levels = lloyd_max(&values, 4).unwrap();
        for (level, optimum) in levels.iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert!((level - optimum).abs() < 0.02, "{levels:?}");
        }
    }

    #[test]
    fn distortion_is_non_increasing() {
        let mut r = rng::seeded_rng(102);
        let values: Vec<f64> = (0..5000)
            .map(|_| 0.4 + 1.1 * rng::uniform_open01(&mut r))
            .collect();
        for k in 1..=6 {
            let (_, trace) = lloyd_max_trace(&values, k).unwrap();
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "distortion increased: {w:?}");
            }
        }
    }

    #[test]
    fn degenerate_input_names_the_deficit() {
        let values = vec![0.7; 50];
        match lloyd_max(&values, 2) {
            Err(QuantizerError::DegenerateInput {
                distinct,
                requested,
            }) => {
                assert_eq!(distinct, 1);
                assert_eq!(requested, 2);
            }
            other => panic!("expected degenerate-input error, got {other:?}"),
        }
    }

    #[test]
    fn heavy_mass_seeding_still_converges() {
        let mut values = vec![1.0; 100];
        values.push(2.0);
        values.push(3.0);
        let levels = lloyd_max(&values, 3).unwrap();
        assert!(levels.windows(2).all(|w| w[1] > w[0]));
        assert!((levels[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn state_space_from_degenerate_trajectory() {
        let t = traj(vec![0.9; 40]);
        let bounds = RateBounds::newborn();
        assert!(matches!(
            build_state_space(&t, 2, false, false, &bounds),
            Err(QuantizerError::DegenerateInput {
                distinct: 1,
                requested: 2
            })
        ));
        let ss = build_state_space(&t, 2, true, false, &bounds).unwrap();
        assert_eq!(ss.rates_hz(), &[0.0, 0.9]);
    }

    #[test]
    fn state_space_recovers_generative_levels() {
        let mut r = rng::seeded_rng(103);
        let centers = [0.4, 0.8, 1.2];
        let values: Vec<f64> = (0..6000)
            .map(|i| centers[i % 3] + 0.02 * rng::standard_normal(&mut r))
            .collect();
        let ss = build_state_space(&traj(values), 3, false, false, &RateBounds::newborn()).unwrap();
        for (rate, center) in ss.rates_hz().iter().zip(centers) {
            assert!((rate - center).abs() < 0.03, "{:?}", ss.rates_hz());
        }
    }

    #[test]
    fn reserved_states_and_band_filtering() {
        let bounds = RateBounds::newborn();
        let mut values = vec![0.0; 30]; // apnea samples stay out of the fit
        values.extend(vec![15.0; 10]); // movement samples too
        values.extend((0..200).map(|i| 0.5 + 0.001 * i as f64));
        values.extend((0..200).map(|i| 1.2 + 0.001 * i as f64));
        let ss = build_state_space(&traj(values), 4, true, true, &bounds).unwrap();
        assert_eq!(ss.len(), 4);
        assert_eq!(ss.rate(0), 0.0);
        assert_eq!(ss.rate(3), bounds.r_move_hz);
        assert!(ss.rate(1) > 0.4 && ss.rate(1) < 0.8);
        assert!(ss.rate(2) > 1.1 && ss.rate(2) < 1.5);
    }

    #[test]
    fn too_few_states_for_reserved_levels() {
        let t = traj(vec![0.5, 0.9, 1.2]);
        assert!(matches!(
            build_state_space(&t, 2, true, true, &RateBounds::newborn()),
            Err(QuantizerError::Configuration(_))
        ));
    }

    fn paper_shaped_space() -> StateSpace {
        StateSpace::new(
            vec![0.0, 0.5, 0.9, 1.32, 15.0],
            true,
            true,
            RateBounds::newborn(),
        )
        .unwrap()
    }

    #[test]
    fn nearest_state_examples() {
        let ss = paper_shaped_space();
        let t = traj(vec![0.93, 0.70, 0.0, 15.0]);
        let qt = quantize(&t, &ss);
        assert_eq!(qt.state_indices, vec![2, 1, 0, 4]);
        // 0.70 ties between 0.5 and 0.9 at distance 0.2 and breaks low
    }

    #[test]
    fn quantization_is_idempotent() {
        let ss = paper_shaped_space();
        let t = traj(vec![0.45, 0.93, 1.4, 0.0, 15.0, 0.7]);
        let qt = quantize(&t, &ss);
        let requantized = quantize(&traj(qt.rates_hz()), &ss);
        assert_eq!(qt.state_indices, requantized.state_indices);
    }

    #[test]
    fn stripping_movement_state() {
        let ss = paper_shaped_space();
        let stripped = ss.without_movement().unwrap();
        assert_eq!(stripped.rates_hz(), &[0.0, 0.5, 0.9, 1.32]);
        assert!(!stripped.has_movement());
        assert!(stripped.without_movement().is_err());
    }

    #[test]
    fn invalid_state_spaces_rejected() {
        let b = RateBounds::newborn();
        assert!(StateSpace::new(vec![], false, false, b).is_err());
        assert!(StateSpace::new(vec![0.9, 0.9], false, false, b).is_err());
        assert!(StateSpace::new(vec![0.5, 0.9], true, false, b).is_err()); // apnea needs 0
        assert!(StateSpace::new(vec![0.0, 0.9, 10.0], true, true, b).is_err()); // wrong sentinel
        assert!(StateSpace::new(vec![0.0, 2.2, 15.0], true, true, b).is_err()); // out of band
    }

    proptest! {
        #[test]
        fn quantize_matches_exhaustive_scan(
            values in proptest::collection::vec(0.0f64..2.0, 1..200)
        ) {
            let ss = paper_shaped_space();
            let qt = quantize(&traj(values.clone()), &ss);
            for (&v, &idx) in values.iter().zip(&qt.state_indices) {
                // brute-force nearest level with low-index tie break
                let mut best = 0;
                for (i, &r) in ss.rates_hz().iter().enumerate() {
                    if (v - r).abs() < (v - ss.rate(best)).abs() {
                        best = i;
                    }
                }
                prop_assert_eq!(idx, best);
            }
        }

        #[test]
        fn quantization_error_bounded_by_half_largest_gap(
            values in proptest::collection::vec(0.4f64..1.5, 1..100)
        ) {
            let ss = paper_shaped_space();
            let free = &ss.rates_hz()[1..4];
            let max_gap = free.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
            let qt = quantize(&traj(values.clone()), &ss);
            for (&v, &idx) in values.iter().zip(&qt.state_indices) {
                let err = (v - ss.rate(idx)).abs();
                // inside the band the nearest free level is at most half a gap away,
                // except under the lowest and above the highest free level
                let bound = (max_gap / 2.0)
                    .max(free[0] - 0.4)
                    .max(1.5 - free[free.len() - 1]);
                prop_assert!(err <= bound + 1e-12);
            }
        }
    }
}
