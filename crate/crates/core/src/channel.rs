//! The two-user binary adder channel with erasures.
//!
//! Inputs X1, X2 are binary; the receiver sees X1 + X2 in {0, 1, 2} with
//! probability 1 - eps and an erasure otherwise. A sum of 1 reveals the XOR
//! but not the individual bits, which is what couples the two users' decoders.

use core::fmt;

/// Errors from the validated channel/rate constructors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelError {
    RateOutOfRange(f64),
    ErasureOutOfRange(f64),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ChannelError::RateOutOfRange(r) => write!(f, "rate {r} outside [0, 1]"),
            ChannelError::ErasureOutOfRange(e) => write!(f, "erasure rate {e} outside [0, 1]"),
        }
    }
}

impl core::error::Error for ChannelError {}

/// A pair of user rates, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    r1: f64,
    r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self, ChannelError> {
        for r in [r1, r2] {
            if !(0.0..=1.0).contains(&r) {
                return Err(ChannelError::RateOutOfRange(r));
            }
        }
        Ok(RatePair { r1, r2 })
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }
}

/// A validated channel erasure probability in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelErasure(f64);

impl ChannelErasure {
    pub fn new(eps: f64) -> Result<Self, ChannelError> {
        if (0.0..=1.0).contains(&eps) {
            Ok(ChannelErasure(eps))
        } else {
            Err(ChannelError::ErasureOutOfRange(eps))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// The three mutual informations that bound reliable rate pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInformation {
    /// I(X1; Y | X2) = I(X2; Y | X1) = 1 - eps.
    pub conditional: f64,
    /// I(X1, X2; Y) = 3(1 - eps)/2.
    pub joint: f64,
    /// I(X1; Y) = I(X2; Y) = (1 - eps)/2.
    pub single: f64,
}

/// Mutual informations of the adder erasure channel at erasure rate eps.
pub fn mutual_informations(eps: f64) -> MutualInformation {
    MutualInformation {
        conditional: 1.0 - eps,
        joint: 1.5 * (1.0 - eps),
        single: 0.5 * (1.0 - eps),
    }
}

/// Largest erasure rate at which a rate pair sits inside the capacity region:
/// min(1 - R1, 1 - R2, 1 - (2/3)(R1 + R2)), clamped to [0, 1].
pub fn shannon_threshold(rates: &RatePair) -> f64 {
    let per_user_1 = 1.0 - rates.r1;
    let per_user_2 = 1.0 - rates.r2;
    let sum_rate = 1.0 - (2.0 / 3.0) * (rates.r1 + rates.r2);
    per_user_1.min(per_user_2).min(sum_rate).clamp(0.0, 1.0)
}

/// Erasure rate seen by one user's single-user BEC decoder when the other
/// user's message into the adder node is erased with probability mu:
/// eps + (1 - eps) * mu / 2.
///
/// With probability 1 - eps the sum is seen; it pins the user's bit unless it
/// equals 1 and the partner bit is unknown, which happens with probability
/// mu / 2.
pub fn effective_erasure(eps: f64, mu: f64) -> f64 {
    eps + (1.0 - eps) * mu * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn symmetric_half_rate_threshold_is_one_third() {
        let rates = RatePair::new(0.5, 0.5).unwrap();
        let t = shannon_threshold(&rates);
        assert!((t - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unequal_rate_thresholds() {
        // (1/2, 7/13): the sum-rate constraint binds at 4/13.
        let rates = RatePair::new(0.5, 7.0 / 13.0).unwrap();
        let t = shannon_threshold(&rates);
        assert!((t - 4.0 / 13.0).abs() < 1e-15);
        assert!((t - 0.307692).abs() < 1e-6);

        // (1/10, 2/5): the per-user constraint binds at 3/5.
        let rates = RatePair::new(0.1, 0.4).unwrap();
        assert_eq!(shannon_threshold(&rates), 0.6);
    }

    #[test]
    fn mutual_informations_at_eps_zero_and_one() {
        let mi = mutual_informations(0.0);
        assert_eq!((mi.conditional, mi.joint, mi.single), (1.0, 1.5, 0.5));
        let mi = mutual_informations(1.0);
        assert_eq!((mi.conditional, mi.joint, mi.single), (0.0, 0.0, 0.0));
        let mi = mutual_informations(0.5);
        assert!((mi.joint - 0.75).abs() < 1e-15);
    }

    #[test]
    fn effective_erasure_reference_points() {
        assert_eq!(effective_erasure(0.2, 1.0), 0.2 + 0.8 * 0.5);
        assert_eq!(effective_erasure(0.2, 0.0), 0.2);
        assert_eq!(effective_erasure(1.0, 0.7), 1.0);
        assert_eq!(effective_erasure(0.0, 0.6), 0.3);
    }

    #[test]
    fn constructors_validate() {
        assert!(RatePair::new(0.5, 1.2).is_err());
        assert!(RatePair::new(-0.1, 0.2).is_err());
        assert!(ChannelErasure::new(1.0001).is_err());
        assert_eq!(ChannelErasure::new(0.25).unwrap().value(), 0.25);
    }

    proptest! {
        #[test]
        fn effective_erasure_stays_in_unit_interval(eps in 0.0f64..=1.0, mu in 0.0f64..=1.0) {
            let e = effective_erasure(eps, mu);
            prop_assert!(e >= eps - 1e-15);
            prop_assert!(e <= 1.0 + 1e-15);
        }

        #[test]
        fn effective_erasure_monotone(
            eps in 0.0f64..=1.0,
            mu_lo in 0.0f64..=1.0,
            mu_hi in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if mu_lo <= mu_hi { (mu_lo, mu_hi) } else { (mu_hi, mu_lo) };
            prop_assert!(effective_erasure(eps, lo) <= effective_erasure(eps, hi) + 1e-15);
        }

        #[test]
        fn shannon_threshold_within_unit_interval(r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0) {
            let t = shannon_threshold(&RatePair::new(r1, r2).unwrap());
            prop_assert!((0.0..=1.0).contains(&t));
        }
    }
}
