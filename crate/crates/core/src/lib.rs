//! CTMC-based modeling and simulation of breathing patterns.
//!
//! The pipeline runs in five stages, one module each:
//!
//! 1. [`signal`] — estimate a respiratory-rate (RR) trajectory from a
//!    pneumogram-like chest-movement signal, with movement and apnea gating;
//! 2. [`quantizer`] — select model rates with a Lloyd-Max quantizer and map
//!    the trajectory onto a finite state space;
//! 3. [`ctmc`] — fit the transition-rate matrix by maximum likelihood,
//!    analyze it (embedded chain, stationary distribution) and simulate
//!    sojourn schedules from it;
//! 4. [`synth`] — turn a schedule into synthetic artifacts: a phase-continuous
//!    motion signal or a temporally warped frame sequence with noise
//!    compensation;
//! 5. [`eval`] — score RR estimators and apnea detectors (KL divergence,
//!    RR accuracy, time-weighted confusion metrics, ROC/AUC).
//!
//! File formats (pneumogram/trajectory/schedule CSV, model JSON, raw frame
//! tensors, reports) live in [`io`]. All stochastic code is seeded and
//! deterministic; see [`rng`].

pub mod ctmc;
pub mod eval;
pub mod io;
pub mod quantizer;
pub mod rng;
pub mod signal;
pub mod synth;

mod bounds;

pub use bounds::{InvalidBounds, RateBounds};
