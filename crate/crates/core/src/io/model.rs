//! Model JSON: rates, flags, the fitted generator, its stationary
//! distribution and fit metadata. Floats serialize with shortest round-trip
//! precision, so write-then-read is lossless.

use super::{read_to_string, IoError};
use crate::ctmc::{GeneratorMatrix, StationaryDistribution};
use crate::quantizer::StateSpace;
use crate::RateBounds;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelMeta {
    pub source: Option<String>,
    pub fit_step_s: Option<f64>,
    pub seed: Option<u64>,
    pub r_low_hz: Option<f64>,
    pub r_high_hz: Option<f64>,
    pub r_move_hz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub rates_hz: Vec<f64>,
    pub has_apnea: bool,
    pub has_movement: bool,
    pub lambda_per_s: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub meta: ModelMeta,
}

impl ModelFile {
    pub fn from_parts(
        generator: &GeneratorMatrix,
        ss: &StateSpace,
        pi: &StationaryDistribution,
        meta: ModelMeta,
    ) -> Self {
        let bounds = ss.bounds();
        Self {
            rates_hz: ss.rates_hz().to_vec(),
            has_apnea: ss.has_apnea(),
            has_movement: ss.has_movement(),
            lambda_per_s: generator.rows(),
            pi: pi.probs().to_vec(),
            meta: ModelMeta {
                r_low_hz: Some(bounds.r_low_hz),
                r_high_hz: Some(bounds.r_high_hz),
                r_move_hz: Some(bounds.r_move_hz),
                ..meta
            },
        }
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        serde_json::from_str(&read_to_string(path)?)
            .map_err(|e| IoError::format(path, format!("bad model JSON: {e}")))
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let json = serde_json::to_string_pretty(self).expect("model serialization cannot fail");
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    /// Rate bounds from the metadata, falling back to inference from the
    /// rates themselves.
    pub fn bounds(&self) -> Result<RateBounds, IoError> {
        if let (Some(low), Some(high), Some(movement)) =
            (self.meta.r_low_hz, self.meta.r_high_hz, self.meta.r_move_hz)
        {
            return RateBounds::new(low, high, movement)
                .map_err(|e| self.format_err(format!("bad bounds in meta: {e}")));
        }
        let free_start = usize::from(self.has_apnea);
        let free_end = self.rates_hz.len() - usize::from(self.has_movement);
        let free = &self.rates_hz[free_start..free_end];
        let (low, high) = match free {
            [] => (0.1, 1.0),
            [only] => (only / 2.0, only * 2.0),
            _ => (free[0], free[free.len() - 1]),
        };
        let movement = if self.has_movement {
            *self.rates_hz.last().unwrap()
        } else {
            10.0 * high
        };
        RateBounds::new(low, high, movement)
            .map_err(|e| self.format_err(format!("cannot infer bounds: {e}")))
    }

    pub fn state_space(&self) -> Result<StateSpace, IoError> {
        StateSpace::new(
            self.rates_hz.clone(),
            self.has_apnea,
            self.has_movement,
            self.bounds()?,
        )
        .map_err(|e| self.format_err(format!("bad state space: {e}")))
    }

    /// The generator, validated at transcription tolerance (model files may
    /// carry rounded decimal entries).
    pub fn generator(&self) -> Result<GeneratorMatrix, IoError> {
        GeneratorMatrix::from_rows_with_tolerance(&self.lambda_per_s, 1e-6)
            .map_err(|e| self.format_err(format!("bad generator: {e}")))
    }

    fn format_err(&self, message: String) -> IoError {
        IoError::Format {
            path: "<model>".into(),
            message,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctmc::stationary;

    #[test]
    fn json_round_trip_is_lossless() {
        let gen = GeneratorMatrix::from_rows(&[
            vec![-0.1234567890123456, 0.1234567890123456],
            vec![1.0 / 3.0, -1.0 / 3.0],
        ])
        .unwrap();
        let ss = StateSpace::new(
            vec![0.5, 0.9000000000000001],
            false,
            false,
            RateBounds::newborn(),
        )
        .unwrap();
        let pi = stationary(&gen).unwrap();
        let model = ModelFile::from_parts(
            &gen,
            &ss,
            &pi,
            ModelMeta {
                source: Some("unit".into()),
                fit_step_s: Some(0.5),
                seed: Some(7),
                ..Default::default()
            },
        );
        let dir = std::env::temp_dir().join("respiro-io-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model_roundtrip.json");
        model.write(&path).unwrap();
        let back = ModelFile::read(&path).unwrap();
        assert_eq!(back.lambda_per_s, model.lambda_per_s);
        assert_eq!(back.rates_hz, model.rates_hz);
        assert_eq!(back.pi, model.pi);
        assert_eq!(back.meta.seed, Some(7));
        let ss_back = back.state_space().unwrap();
        assert_eq!(ss_back.rates_hz(), ss.rates_hz());
        let gen_back = back.generator().unwrap();
        assert_eq!(gen_back.rows(), gen.rows());
    }
}
