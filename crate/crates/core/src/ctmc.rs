//! Continuous-time Markov chain core.
//!
//! A chain over the RR state space is characterized by its transition-rate
//! matrix: off-diagonal entries are the rates of jumping between states, the
//! diagonal holds the negated exit rates, and every row sums to zero. From it
//! derive the embedded jump chain (where does the process go when it leaves a
//! state) and the stationary distribution (long-run occupancy). The matrix is
//! fitted from a sampled state sequence by maximum likelihood, and schedules
//! of exponentially distributed sojourns are simulated from it with a seeded
//! generator.

use crate::quantizer::{QuantizedTrajectory, StateSpace};
use crate::rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default tolerance on generator row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum CtmcError {
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("state {state} has zero exit rate")]
    SingularState { state: usize },
    #[error("chain is reducible; communicating classes: {classes:?}")]
    Reducible { classes: Vec<Vec<usize>> },
    #[error("trajectory contains no state transitions")]
    NoTransitions,
    #[error("trajectory too short: {0} sample(s), need at least 2")]
    InsufficientSamples(usize),
    #[error("state space has no movement state to strip")]
    NoMovementState,
    #[error("dimension mismatch: generator has {generator} states, state space has {state_space}")]
    DimensionMismatch {
        generator: usize,
        state_space: usize,
    },
    #[error("simulation duration must be positive, got {0}")]
    InvalidDuration(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// N x N transition-rate matrix.
///
/// Off-diagonal entries are nonnegative rates (1/s), diagonal entries are
/// non-positive, and each row sums to zero within tolerance, so the negated
/// diagonal equals the state's total exit rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    dim: usize,
    entries: Vec<f64>, // row-major
}

impl GeneratorMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, CtmcError> {
        Self::from_rows_with_tolerance(rows, ROW_SUM_TOLERANCE)
    }

    /// Validate with an explicit row-sum tolerance. Matrices transcribed from
    /// rounded decimal sources need a looser tolerance than freshly fitted
    /// ones.
    pub fn from_rows_with_tolerance(rows: &[Vec<f64>], tolerance: f64) -> Result<Self, CtmcError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(CtmcError::InvalidGenerator("empty matrix".into()));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (m, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(CtmcError::InvalidGenerator(format!(
                    "row {m} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for (n, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(CtmcError::InvalidGenerator(format!(
                        "non-finite entry at ({m}, {n})"
                    )));
                }
                if m == n && v > 0.0 {
                    return Err(CtmcError::InvalidGenerator(format!(
                        "positive diagonal entry {v} at state {m}"
                    )));
                }
                if m != n && v < 0.0 {
                    return Err(CtmcError::InvalidGenerator(format!(
                        "negative rate {v} at ({m}, {n})"
                    )));
                }
                sum += v;
            }
            if sum.abs() > tolerance {
                return Err(CtmcError::InvalidGenerator(format!(
                    "row {m} sums to {sum:e}, tolerance {tolerance:e}"
                )));
            }
            entries.extend_from_slice(row);
        }
        Ok(Self { dim, entries })
    }

    /// Build from off-diagonal rates only; the diagonal is recomputed as the
    /// negated row sum, so rows sum to zero by construction.
    pub fn from_off_diagonal(rows: &[Vec<f64>]) -> Result<Self, CtmcError> {
        let dim = rows.len();
        if dim == 0 {
            return Err(CtmcError::InvalidGenerator("empty matrix".into()));
        }
        let mut fixed = Vec::with_capacity(dim);
        let mut scale = 1.0f64;
        for (m, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(CtmcError::InvalidGenerator(format!(
                    "row {m} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            let mut new_row = row.clone();
            let exit: f64 = row
                .iter()
                .enumerate()
                .filter(|&(n, _)| n != m)
                .map(|(_, &v)| v)
                .sum();
            new_row[m] = -exit;
            scale = scale.max(exit.abs());
            fixed.push(new_row);
        }
        // the recomputed diagonal cancels the row only up to summation-order
        // rounding, which grows with the rate magnitudes
        Self::from_rows_with_tolerance(&fixed, (1e-12 + 1e-14 * dim as f64) * scale.max(1.0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.dim + to]
    }

    /// Total rate of leaving `state` (the negated diagonal entry).
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.rate(state, state)
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.entries[state * self.dim..(state + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|m| self.row(m).to_vec()).collect()
    }
}

/// Jump-destination probabilities of the embedded Markov chain: zero
/// diagonal, rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedChain {
    dim: usize,
    probs: Vec<f64>, // row-major
}

impl EmbeddedChain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.dim + to]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.probs[state * self.dim..(state + 1) * self.dim]
    }
}

/// Embedded jump chain of a generator: off-diagonal rates divided by the
/// source state's exit rate. Every state must have a strictly positive exit
/// rate.
pub fn embedded_chain(generator: &GeneratorMatrix) -> Result<EmbeddedChain, CtmcError> {
    let dim = generator.dim();
    let mut probs = vec![0.0; dim * dim];
    for m in 0..dim {
        let exit = generator.exit_rate(m);
        if exit <= 0.0 {
            return Err(CtmcError::SingularState { state: m });
        }
        for n in 0..dim {
            if n != m {
                probs[m * dim + n] = generator.rate(m, n) / exit;
            }
        }
    }
    Ok(EmbeddedChain { dim, probs })
}

/// Long-run state occupancy probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Infinity norm of the balance residual against a generator.
    pub fn residual_inf(&self, generator: &GeneratorMatrix) -> f64 {
        let dim = generator.dim();
        (0..dim)
            .map(|n| {
                (0..dim)
                    .map(|m| self.probs[m] * generator.rate(m, n))
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Communicating classes of the off-diagonal support graph, each sorted,
/// ordered by smallest member.
pub fn communicating_classes(generator: &GeneratorMatrix) -> Vec<Vec<usize>> {
    let dim = generator.dim();
    let reach = |start: usize| -> Vec<bool> {
        let mut seen = vec![false; dim];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(m) = stack.pop() {
            for (n, seen_n) in seen.iter_mut().enumerate() {
                if n != m && !*seen_n && generator.rate(m, n) > 0.0 {
                    *seen_n = true;
                    stack.push(n);
                }
            }
        }
        seen
    };
    let reachable: Vec<Vec<bool>> = (0..dim).map(reach).collect();
    let mut assigned = vec![false; dim];
    let mut classes = Vec::new();
    for i in 0..dim {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..dim)
            .filter(|&j| reachable[i][j] && reachable[j][i])
            .collect();
        for &j in &class {
            assigned[j] = true;
        }
        classes.push(class);
    }
    classes
}

fn check_irreducible(generator: &GeneratorMatrix) -> Result<(), CtmcError> {
    let classes = communicating_classes(generator);
    if classes.len() > 1 {
        return Err(CtmcError::Reducible { classes });
    }
    Ok(())
}

/// Stationary distribution of an irreducible generator, solved by replacing
/// one balance equation with the normalization row.
pub fn stationary(generator: &GeneratorMatrix) -> Result<StationaryDistribution, CtmcError> {
    check_irreducible(generator)?;
    let dim = generator.dim();
    // transpose system: columns of the generator become equations in pi
    let mut a = vec![0.0f64; dim * dim];
    for m in 0..dim {
        for n in 0..dim {
            a[n * dim + m] = generator.rate(m, n);
        }
    }
    for m in 0..dim {
        a[(dim - 1) * dim + m] = 1.0;
    }
    let mut b = vec![0.0f64; dim];
    b[dim - 1] = 1.0;
    let probs = solve_linear(&mut a, &mut b, dim)?;
    if probs.iter().any(|p| !p.is_finite() || *p < -1e-9) {
        return Err(CtmcError::InvalidGenerator(
            "stationary solve produced negative or non-finite mass".into(),
        ));
    }
    Ok(StationaryDistribution {
        probs: probs.iter().map(|p| p.max(0.0)).collect(),
    })
}

/// Stationary distribution restricted to the `keep` states (e.g. the states
/// actually visited by a fit); excluded states receive probability zero. The
/// kept submatrix must itself be irreducible.
pub fn stationary_partial(
    generator: &GeneratorMatrix,
    keep: &[bool],
) -> Result<StationaryDistribution, CtmcError> {
    let dim = generator.dim();
    if keep.len() != dim {
        return Err(CtmcError::DimensionMismatch {
            generator: dim,
            state_space: keep.len(),
        });
    }
    let kept: Vec<usize> = (0..dim).filter(|&i| keep[i]).collect();
    if kept.is_empty() {
        return Err(CtmcError::InvalidGenerator("no states kept".into()));
    }
    let sub_rows: Vec<Vec<f64>> = kept
        .iter()
        .map(|&m| kept.iter().map(|&n| generator.rate(m, n)).collect())
        .collect();
    let sub = GeneratorMatrix::from_off_diagonal(&sub_rows)?;
    let sub_pi = stationary(&sub)?;
    let mut probs = vec![0.0; dim];
    for (slot, &state) in kept.iter().enumerate() {
        probs[state] = sub_pi.probs()[slot];
    }
    Ok(StationaryDistribution { probs })
}

/// Gaussian elimination with partial pivoting; `a` is row-major `n x n`.
fn solve_linear(a: &mut [f64], b: &mut [f64], n: usize) -> Result<Vec<f64>, CtmcError> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .abs()
                    .partial_cmp(&a[s * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot * n + col].abs() < 1e-300 {
            return Err(CtmcError::InvalidGenerator("singular linear system".into()));
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col] / a[col * n + col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    Ok((0..n).map(|i| b[i] / a[i * n + i]).collect())
}

/// Fit result: the ML generator plus the sufficient statistics behind it.
#[derive(Debug, Clone)]
pub struct GeneratorFit {
    pub generator: GeneratorMatrix,
    /// Seconds attributed to each state, including the final censored sojourn.
    pub holding_s: Vec<f64>,
    /// Observed jump counts, row-major with zero diagonal.
    pub transition_counts: Vec<u64>,
    /// States that appear in the trajectory. Unvisited states keep an
    /// all-zero generator row.
    pub visited: Vec<bool>,
}

impl GeneratorFit {
    pub fn transitions(&self, from: usize, to: usize) -> u64 {
        self.transition_counts[from * self.generator.dim() + to]
    }
}

/// Maximum-likelihood generator estimate from a sampled state sequence.
///
/// The sampled sequence is treated as a continuous-time path: each sample
/// contributes one step of holding time to its state, adjacent samples in
/// different states count as one observed jump, and each off-diagonal rate is
/// the jump count divided by the time spent in the source state. The final
/// sojourn is censored: it adds holding time but no jump. Valid when the
/// sampling step is small against the sojourn times (a step of at most one
/// second at breathing-rate scales).
pub fn fit_generator(traj: &QuantizedTrajectory) -> Result<GeneratorFit, CtmcError> {
    let samples = &traj.state_indices;
    if samples.len() < 2 {
        return Err(CtmcError::InsufficientSamples(samples.len()));
    }
    let dim = traj.state_space.len();
    let step = traj.step_s;
    if !(step.is_finite() && step > 0.0) {
        return Err(CtmcError::InvalidGenerator(format!(
            "invalid trajectory step {step} s"
        )));
    }

    let mut holding_s = vec![0.0f64; dim];
    let mut counts = vec![0u64; dim * dim];
    holding_s[samples[0]] += step;
    for pair in samples.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        holding_s[cur] += step;
        if cur != prev {
            counts[prev * dim + cur] += 1;
        }
    }
    if counts.iter().all(|&c| c == 0) {
        return Err(CtmcError::NoTransitions);
    }

    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|m| {
            (0..dim)
                .map(|n| {
                    if m == n || holding_s[m] == 0.0 {
                        0.0
                    } else {
                        counts[m * dim + n] as f64 / holding_s[m]
                    }
                })
                .collect()
        })
        .collect();

    Ok(GeneratorFit {
        generator: GeneratorMatrix::from_off_diagonal(&rows)?,
        visited: holding_s.iter().map(|&h| h > 0.0).collect(),
        holding_s,
        transition_counts: counts,
    })
}

/// Drop the movement state before simulation: remove the last row and column
/// and recompute the diagonal from the remaining off-diagonal rates.
pub fn strip_movement_state(
    generator: &GeneratorMatrix,
    ss: &StateSpace,
) -> Result<(GeneratorMatrix, StateSpace), CtmcError> {
    if !ss.has_movement() {
        return Err(CtmcError::NoMovementState);
    }
    if generator.dim() != ss.len() {
        return Err(CtmcError::DimensionMismatch {
            generator: generator.dim(),
            state_space: ss.len(),
        });
    }
    let dim = generator.dim() - 1;
    let rows: Vec<Vec<f64>> = (0..dim)
        .map(|m| (0..dim).map(|n| generator.rate(m, n)).collect())
        .collect();
    let stripped = GeneratorMatrix::from_off_diagonal(&rows)?;
    let stripped_ss = ss
        .without_movement()
        .map_err(|e| CtmcError::InvalidGenerator(e.to_string()))?;
    Ok((stripped, stripped_ss))
}

/// One simulated sojourn: the state and the time spent in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournEntry {
    pub state: usize,
    pub sojourn_s: f64,
}

/// Simulated sequence of sojourns; jump times are the running sums.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournSchedule {
    entries: Vec<SojournEntry>,
    seed: Option<u64>,
}

impl SojournSchedule {
    pub fn from_entries(entries: Vec<SojournEntry>, seed: Option<u64>) -> Result<Self, CtmcError> {
        if entries.is_empty() {
            return Err(CtmcError::InvalidSchedule("no entries".into()));
        }
        for e in &entries {
            if !(e.sojourn_s.is_finite() && e.sojourn_s > 0.0) {
                return Err(CtmcError::InvalidSchedule(format!(
                    "non-positive sojourn {} s in state {}",
                    e.sojourn_s, e.state
                )));
            }
        }
        if entries.windows(2).any(|w| w[0].state == w[1].state) {
            return Err(CtmcError::InvalidSchedule(
                "consecutive entries share a state".into(),
            ));
        }
        Ok(Self { entries, seed })
    }

    pub fn entries(&self) -> &[SojournEntry] {
        &self.entries
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn total_duration_s(&self) -> f64 {
        self.entries.iter().map(|e| e.sojourn_s).sum()
    }

    /// Jump times: cumulative sums of the sojourns.
    pub fn jump_times_s(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.entries
            .iter()
            .map(|e| {
                t += e.sojourn_s;
                t
            })
            .collect()
    }

    /// State occupying time `t`; times at or past the end map to the last
    /// entry.
    pub fn state_at(&self, t: f64) -> usize {
        let mut elapsed = 0.0;
        for e in &self.entries {
            elapsed += e.sojourn_s;
            if t < elapsed {
                return e.state;
            }
        }
        self.entries.last().unwrap().state
    }

    /// States sampled every `step_s`, starting at 0, while inside the
    /// schedule.
    pub fn sample_states(&self, step_s: f64) -> Vec<usize> {
        assert!(step_s > 0.0);
        let total = self.total_duration_s();
        let count = (total / step_s).ceil() as usize;
        let mut out = Vec::with_capacity(count);
        let mut entry_idx = 0;
        let mut entry_end = self.entries[0].sojourn_s;
        for k in 0..count {
            let t = k as f64 * step_s;
            while t >= entry_end && entry_idx + 1 < self.entries.len() {
                entry_idx += 1;
                entry_end += self.entries[entry_idx].sojourn_s;
            }
            out.push(self.entries[entry_idx].state);
        }
        out
    }

    /// Fraction of total time spent in each of `n_states` states.
    pub fn occupancy(&self, n_states: usize) -> Vec<f64> {
        let mut time = vec![0.0f64; n_states];
        for e in &self.entries {
            time[e.state] += e.sojourn_s;
        }
        let total = self.total_duration_s();
        time.iter_mut().for_each(|t| *t /= total);
        time
    }

    /// Sampled view of the schedule as a quantized trajectory.
    pub fn to_quantized(&self, ss: &StateSpace, step_s: f64) -> QuantizedTrajectory {
        QuantizedTrajectory {
            state_indices: self.sample_states(step_s),
            step_s,
            state_space: ss.clone(),
        }
    }
}

/// Simulate a sojourn schedule of exactly `duration_s` seconds.
///
/// The initial state is drawn from the stationary distribution; each sojourn
/// is exponential with the state's exit rate (inverse-CDF sampling); each jump
/// destination is drawn from the embedded-chain row. Generation stops at the
/// first jump time at or past the duration and the final sojourn is truncated
/// to fit exactly. Identical seeds give identical schedules.
pub fn simulate(
    generator: &GeneratorMatrix,
    duration_s: f64,
    seed: u64,
) -> Result<SojournSchedule, CtmcError> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(CtmcError::InvalidDuration(duration_s));
    }
    let pi = stationary(generator)?; // also enforces irreducibility
    let mut rng = rng::seeded_rng(seed);
    let mut state = sample_categorical(&mut rng, pi.probs());
    let mut entries = Vec::new();
    let mut elapsed = 0.0f64;
    loop {
        let tau = rng::exponential(&mut rng, generator.exit_rate(state));
        if !tau.is_finite() || elapsed + tau >= duration_s {
            entries.push(SojournEntry {
                state,
                sojourn_s: duration_s - elapsed,
            });
            break;
        }
        entries.push(SojournEntry {
            state,
            sojourn_s: tau,
        });
        elapsed += tau;
        state = sample_jump(&mut rng, generator, state);
    }
    SojournSchedule::from_entries(entries, Some(seed))
}

/// Inverse-CDF draw from a probability vector.
fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u = rng::uniform_open01(rng);
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            cum += p;
            if u < cum {
                return i;
            }
        }
    }
    last_positive
}

/// Draw the jump destination from the embedded-chain row of `state`.
fn sample_jump(rng: &mut ChaCha8Rng, generator: &GeneratorMatrix, state: usize) -> usize {
    let exit = generator.exit_rate(state);
    let u = rng::uniform_open01(rng) * exit;
    let mut cum = 0.0;
    let mut last_positive = state;
    for n in 0..generator.dim() {
        if n == state {
            continue;
        }
        let rate = generator.rate(state, n);
        if rate > 0.0 {
            last_positive = n;
            cum += rate;
            if u < cum {
                return n;
            }
        }
    }
    last_positive
}
