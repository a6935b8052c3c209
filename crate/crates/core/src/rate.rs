//! Rate units and small numeric helpers shared across the crate.
//!
//! Every rate inside the library is a value in nats; `RateBase` converts at
//! the presentation boundary only. Keeping the internal unit fixed makes the
//! identity between the trade-off curves and the region bounds exact
//! regardless of the display base.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Display base for rates. Internals always compute in nats.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateBase {
    /// log base 2; the built-in tables print in this base.
    #[default]
    Bits,
    /// natural log, the internal unit.
    Nats,
}

impl RateBase {
    /// Converts a value in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            RateBase::Bits => nats / std::f64::consts::LN_2,
            RateBase::Nats => nats,
        }
    }

    /// Converts a value in this base to nats.
    pub fn to_nats(self, value: f64) -> f64 {
        match self {
            RateBase::Bits => value * std::f64::consts::LN_2,
            RateBase::Nats => value,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RateBase::Bits => "bits",
            RateBase::Nats => "nats",
        }
    }
}

impl fmt::Display for RateBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Nats to bits, the common presentation conversion.
pub fn bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Rounds half away from zero to two decimals, the rule used by the built-in
/// tables (0.8684.. -> 0.87, -0.005 -> -0.01).
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRatioError {
    #[error("empty value")]
    Empty,
    #[error("invalid number {0:?}")]
    BadNumber(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Parses "3/4" or "0.75" into an f64. Integer fractions are converted with a
/// single division so exactly representable ratios (1/2, 3/4, 15/16) stay
/// exact and the rest get the nearest double.
pub fn parse_ratio(s: &str) -> Result<f64, ParseRatioError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRatioError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: i64 = num
            .trim()
            .parse()
            .map_err(|_| ParseRatioError::BadNumber(s.to_owned()))?;
        let d: i64 = den
            .trim()
            .parse()
            .map_err(|_| ParseRatioError::BadNumber(s.to_owned()))?;
        if d == 0 {
            return Err(ParseRatioError::ZeroDenominator(s.to_owned()));
        }
        Ok(n as f64 / d as f64)
    } else {
        s.parse()
            .map_err(|_| ParseRatioError::BadNumber(s.to_owned()))
    }
}
