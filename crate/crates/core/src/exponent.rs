//! Exact arithmetic for powers of ε.
//!
//! Every transition probability of the learner is a sum of terms
//! `K · ε^e · Π (1 − ε^f)` where the exponents are non-negative combinations
//! of the experimentation constant `c`, the broadcast exponent `β` and
//! `1 − u` for utilities `u`. Resistances and stochastic potentials are sums
//! of such exponents, and the stable set is decided by comparing them, so
//! they are kept as fixed-point integers at a resolution of 2⁻⁹⁶. Doubles of
//! magnitude at least 2⁻⁴⁴ convert without loss, and sums never round.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize, Serializer};

const FRACTION_BITS: i32 = 96;

/// A non-negative exponent of ε in exact fixed-point form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exponent(i128);

impl Exponent {
    pub const ZERO: Exponent = Exponent(0);
    pub const ONE: Exponent = Exponent(1 << FRACTION_BITS);

    /// Converts a double, rounding toward zero below the 2⁻⁹⁶ resolution.
    pub fn from_f64(value: f64) -> Self {
        assert!(
            value.is_finite() && value.abs() < 2f64.powi(30),
            "exponent {value} out of range"
        );
        Exponent((value * 2f64.powi(FRACTION_BITS)) as i128)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2f64.powi(FRACTION_BITS)
    }

    /// `1 − u` for a utility `u`.
    pub fn complement_of(utility: f64) -> Self {
        Self::ONE - Self::from_f64(utility)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn raw(self) -> i128 {
        self.0
    }
}

impl Add for Exponent {
    type Output = Exponent;
    fn add(self, rhs: Exponent) -> Exponent {
        Exponent(self.0 + rhs.0)
    }
}

impl AddAssign for Exponent {
    fn add_assign(&mut self, rhs: Exponent) {
        self.0 += rhs.0;
    }
}

impl Sub for Exponent {
    type Output = Exponent;
    fn sub(self, rhs: Exponent) -> Exponent {
        Exponent(self.0 - rhs.0)
    }
}

impl Mul<u32> for Exponent {
    type Output = Exponent;
    fn mul(self, rhs: u32) -> Exponent {
        Exponent(self.0 * rhs as i128)
    }
}

impl Sum for Exponent {
    fn sum<I: Iterator<Item = Exponent>>(iter: I) -> Exponent {
        iter.fold(Exponent::ZERO, Add::add)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Exact sums of decimal inputs land within 1e-15 of the decimal value.
        let text = format!("{:.12}", self.to_f64());
        let text = text.trim_end_matches('0').trim_end_matches('.');
        f.write_str(if text == "-0" { "0" } else { text })
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        f64::deserialize(deserializer).map(Exponent::from_f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_utilities_sum_without_rounding() {
        let a = Exponent::complement_of(0.9) + Exponent::complement_of(0.8);
        let b = Exponent::complement_of(0.8) + Exponent::complement_of(0.9);
        assert_eq!(a, b);
        assert!((a.to_f64() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn integer_multiples_are_exact() {
        let c = Exponent::from_f64(2.0);
        assert_eq!(c * 3, Exponent::from_f64(6.0));
        assert_eq!((c * 3 - c).to_f64(), 4.0);
    }

    #[test]
    fn small_values_survive_conversion() {
        let beta = Exponent::from_f64(0.00005);
        assert_eq!(beta.to_f64(), 0.00005);
        let tiny = Exponent::from_f64(2f64.powi(-44));
        assert_eq!(tiny.to_f64(), 2f64.powi(-44));
    }
}
