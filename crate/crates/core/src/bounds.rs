use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Invalid rate-bound combination.
#[derive(Debug, Clone, Error)]
#[error("invalid rate bounds: {reason} (low={low} Hz, high={high} Hz, movement={movement} Hz)")]
pub struct InvalidBounds {
    pub reason: String,
    pub low: f64,
    pub high: f64,
    pub movement: f64,
}

/// Physiological rate range shared by estimation and quantization.
///
/// `r_low_hz..=r_high_hz` is the admissible breathing band; `r_move_hz` is the
/// sentinel rate assigned to windows dominated by body-movement artifacts. The
/// sentinel must sit far above the band (at least ten times `r_high_hz`) so it
/// can never be confused with a real rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBounds {
    pub r_low_hz: f64,
    pub r_high_hz: f64,
    pub r_move_hz: f64,
}

impl RateBounds {
    pub fn new(r_low_hz: f64, r_high_hz: f64, r_move_hz: f64) -> Result<Self, InvalidBounds> {
        let fail = |reason: &str| InvalidBounds {
            reason: reason.to_string(),
            low: r_low_hz,
            high: r_high_hz,
            movement: r_move_hz,
        };
        if !(r_low_hz.is_finite() && r_high_hz.is_finite() && r_move_hz.is_finite()) {
            return Err(fail("bounds must be finite"));
        }
        if !(0.0 < r_low_hz && r_low_hz < r_high_hz && r_high_hz < r_move_hz) {
            return Err(fail("bounds must satisfy 0 < low < high < movement"));
        }
        if r_move_hz < 10.0 * r_high_hz {
            return Err(fail(
                "movement sentinel must be at least 10x the high bound",
            ));
        }
        Ok(Self {
            r_low_hz,
            r_high_hz,
            r_move_hz,
        })
    }

    /// Newborn resting range, 24-90 breaths/min.
    pub fn newborn() -> Self {
        Self {
            r_low_hz: 0.4,
            r_high_hz: 1.5,
            r_move_hz: 15.0,
        }
    }

    /// Adult resting range, 12-20 breaths/min.
    pub fn adult() -> Self {
        Self {
            r_low_hz: 0.2,
            r_high_hz: 1.0 / 3.0,
            r_move_hz: 10.0,
        }
    }
}

impl Default for RateBounds {
    fn default() -> Self {
        Self::newborn()
    }
}
