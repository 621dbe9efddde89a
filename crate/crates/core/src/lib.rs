//! Density evolution and finite-length tools for spatially coupled regular
//! LDPC ensembles used by two users over the binary adder channel with
//! erasures.
//!
//! The crate is organised bottom-up:
//!
//! * [`ensemble`]: degree profiles, chain parameters, design rate.
//! * [`channel`]: adder-channel mutual informations, Shannon threshold, and
//!   the erasure-channel reduction used by density evolution.
//! * [`uncoupled`]: scalar joint density evolution for the uncoupled system,
//!   BP thresholds, and the EBP EXIT parametrisation.
//! * [`coupled`]: density evolution on the coupled chain (constellations,
//!   schedules, forward DE, BP thresholds).
//! * [`exit_chart`]: reverse DE at fixed entropy, coupled EBP curves, and
//!   constellation shape analysis.
//! * [`sim`]: finite-length graph sampling and peeling decoding on the
//!   channel-state abstraction.
//!
//! Everything is deterministic: all randomised operations take explicit
//! seeds, and the floating-point paths avoid platform-dependent intrinsics.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod channel;
pub mod coupled;
pub mod ensemble;
pub mod exit_chart;
pub mod sim;
pub mod uncoupled;

mod error;
mod math;

pub use error::DeError;

/// Default tolerances and budgets shared by the numeric modules.
pub mod defaults {
    /// Sup-norm convergence tolerance for uncoupled forward DE.
    pub const UNCOUPLED_TOL: f64 = 1e-12;
    /// Sup-norm convergence tolerance for coupled forward DE.
    pub const COUPLED_TOL: f64 = 1e-11;
    /// A constellation (or scalar state) counts as decoded when every entry
    /// is below this.
    pub const DECODE_THRESHOLD: f64 = 1e-8;
    /// Bisection width tolerance for BP-threshold searches on eps in [0, 1].
    pub const EPS_TOL: f64 = 1e-6;
    /// Iteration budget for uncoupled forward DE.
    pub const UNCOUPLED_MAX_ITERS: u64 = 2_000_000;
    /// Fixed-point tolerance for reverse DE and EBP curve points.
    pub const REVERSE_TOL: f64 = 1e-9;

    /// Sweep budget for coupled DE: max(2 * 10^5, 200 * (2L + 1)).
    pub fn coupled_sweep_budget(half_len: u32) -> u64 {
        let sections = 2 * half_len as u64 + 1;
        (200 * sections).max(200_000)
    }
}
