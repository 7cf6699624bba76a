//! Scalar primitives of the Gaussian single-user channel.
//!
//! Everything else in the crate is built from two functions:
//!
//! * [`capacity`]: the rate `½·log₂(1 + P/Δ)` a user with power `P` achieves
//!   when the noise plus interference it sees sums to `Δ`;
//! * [`nis_for_rate`]: the inverse in `Δ`, i.e. the largest noise and
//!   interference sum ("NIS") that still lets power `P` carry rate `R`.
//!
//! Rates are in bits per channel use (base-2 logarithms).

use std::f64::consts::LN_2;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative tolerance for every equality comparison.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

macro_rules! scalar {
    ($(#[$meta:meta])* $name:ident, $quantity:literal, $ok:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(try_from = "f64", into = "f64")]
        pub struct $name(f64);

        impl $name {
            pub fn new(value: f64) -> Result<Self> {
                let ok: fn(f64) -> bool = $ok;
                if value.is_finite() && ok(value) {
                    Ok(Self(value))
                } else {
                    Err(Error::Domain { quantity: $quantity, value })
                }
            }

            #[inline]
            pub const fn get(self) -> f64 {
                self.0
            }
        }

        impl TryFrom<f64> for $name {
            type Error = Error;
            fn try_from(value: f64) -> Result<Self> {
                Self::new(value)
            }
        }

        impl From<$name> for f64 {
            fn from(v: $name) -> f64 {
                v.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(&self.0, f)
            }
        }
    };
}

scalar!(
    /// Transmit power in linear units, `≥ 0`.
    Power,
    "power",
    |v| v >= 0.0
);
scalar!(
    /// Rate in bits per channel use, `≥ 0`.
    Rate,
    "rate",
    |v| v >= 0.0
);
scalar!(
    /// Noise and interference power sum seen by a stream, `> 0`.
    Nis,
    "nis",
    |v| v > 0.0
);

impl Power {
    pub const ZERO: Power = Power(0.0);
}

impl Rate {
    pub const ZERO: Rate = Rate(0.0);
}

impl Add for Power {
    type Output = Power;
    fn add(self, rhs: Power) -> Power {
        Power(self.0 + rhs.0)
    }
}

impl Add for Rate {
    type Output = Rate;
    fn add(self, rhs: Rate) -> Rate {
        Rate(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Power {
    fn sum<I: Iterator<Item = Power>>(iter: I) -> Power {
        Power(iter.map(|p| p.0).sum())
    }
}

impl std::iter::Sum for Rate {
    fn sum<I: Iterator<Item = Rate>>(iter: I) -> Rate {
        Rate(iter.map(|r| r.0).sum())
    }
}

/// Relative tolerance used for all approximate comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Tolerance(f64);

impl Tolerance {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value > 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::Domain { quantity: "tolerance", value })
        }
    }

    #[inline]
    pub const fn get(self) -> f64 {
        self.0
    }

    /// `|a − b| ≤ τ·scale`.
    #[inline]
    pub fn eq(self, a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= self.0 * scale
    }

    /// The absolute band `τ·scale`.
    #[inline]
    pub fn band(self, scale: f64) -> f64 {
        self.0 * scale
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self(DEFAULT_TOLERANCE)
    }
}

impl TryFrom<f64> for Tolerance {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Tolerance> for f64 {
    fn from(t: Tolerance) -> f64 {
        t.0
    }
}

/// `½·log₂(1 + power/nis)`.
pub fn capacity(power: Power, nis: Nis) -> Rate {
    Rate(capacity_raw(power.0, nis.0))
}

/// `power / (2^{2·rate} − 1)`.
///
/// Zero rate or zero power have no finite NIS and are rejected.
pub fn nis_for_rate(rate: Rate, power: Power) -> Result<Nis> {
    if rate.0 <= 0.0 {
        return Err(Error::Domain { quantity: "rate (nis undefined)", value: rate.0 });
    }
    if power.0 <= 0.0 {
        return Err(Error::Domain { quantity: "power (nis undefined)", value: power.0 });
    }
    Nis::new(nis_for_rate_raw(rate.0, power.0))
}

#[inline]
pub(crate) fn capacity_raw(power: f64, nis: f64) -> f64 {
    0.5 * (power / nis).ln_1p() / LN_2
}

#[inline]
pub(crate) fn nis_for_rate_raw(rate: f64, power: f64) -> f64 {
    power / (2.0 * rate * LN_2).exp_m1()
}

/// `2^{2·rate}`.
#[inline]
pub(crate) fn snr_factor(rate: f64) -> f64 {
    (2.0 * rate * LN_2).exp()
}
