//! Logarithmic duration codec: real-valued durations in seconds map onto 512
//! discrete bins over [-0.3, 6.0] through `f(x) = ln(x + 1)`, so short
//! durations get finer bins than long ones.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vocab::DURATION_BINS;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("duration {0} is not a finite number")]
    InvalidDuration(f64),
    #[error("bin {bin} out of range (codec has {bins} bins)")]
    InvalidBin { bin: u16, bins: u16 },
    #[error("invalid codec config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub bins: u16,
    pub epsilon: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self { x_min: -0.3, x_max: 6.0, bins: DURATION_BINS, epsilon: 1.0 }
    }
}

impl CodecConfig {
    pub fn new(x_min: f64, x_max: f64, bins: u16, epsilon: f64) -> Result<Self, CodecError> {
        if !x_min.is_finite() || !x_max.is_finite() || !epsilon.is_finite() {
            return Err(CodecError::InvalidConfig("bounds must be finite".to_string()));
        }
        if x_min + epsilon <= 0.0 {
            return Err(CodecError::InvalidConfig(format!(
                "x_min + epsilon must be positive, got {}",
                x_min + epsilon
            )));
        }
        if x_max <= x_min {
            return Err(CodecError::InvalidConfig(format!(
                "x_max ({x_max}) must exceed x_min ({x_min})"
            )));
        }
        if bins < 2 {
            return Err(CodecError::InvalidConfig(format!("need at least 2 bins, got {bins}")));
        }
        Ok(Self { x_min, x_max, bins, epsilon })
    }

    fn warp(&self, x: f64) -> f64 {
        (x + self.epsilon).ln()
    }

    fn span(&self) -> f64 {
        self.warp(self.x_max) - self.warp(self.x_min)
    }

    /// Encodes a duration in seconds to its bin index. Out-of-range values
    /// are silently clipped to [x_min, x_max] first; the bin is the nearest
    /// one in log space, rounding halves up.
    pub fn encode(&self, x: f64) -> Result<u16, CodecError> {
        if !x.is_finite() {
            return Err(CodecError::InvalidDuration(x));
        }
        let x = x.clamp(self.x_min, self.x_max);
        let t = (self.warp(x) - self.warp(self.x_min)) / self.span() * f64::from(self.bins - 1);
        let bin = (t + 0.5).floor() as u16;
        Ok(bin.min(self.bins - 1))
    }

    /// Decodes a bin index back to seconds (the bin's representative value).
    pub fn decode(&self, bin: u16) -> Result<f64, CodecError> {
        if bin >= self.bins {
            return Err(CodecError::InvalidBin { bin, bins: self.bins });
        }
        let t = self.span() / f64::from(self.bins - 1) * f64::from(bin) + self.warp(self.x_min);
        Ok(t.exp() - self.epsilon)
    }

    /// Width in seconds of the interval between bin and bin+1. Widths grow
    /// with the bin index, which is the whole point of the log spacing.
    pub fn bin_width_at(&self, bin: u16) -> Result<f64, CodecError> {
        if bin > self.bins - 2 {
            return Err(CodecError::InvalidBin { bin, bins: self.bins });
        }
        Ok(self.decode(bin + 1)? - self.decode(bin)?)
    }
}
