//! Density evolution for the uncoupled two-user system.
//!
//! Tracks one erasure probability per message direction per user. The
//! variable-side update sees the other user through the adder channel: a
//! position whose channel output is the ambiguous middle symbol stays
//! unresolved exactly when the other user's bit is still unknown, which
//! multiplies the channel erasure rate into `effective_erasure`.

use alloc::vec::Vec;

use crate::channel::effective_erasure;
use crate::ensemble::DegreeProfile;
use crate::error::DeError;
use crate::math::powi;

/// Erasure probabilities of the four message ensembles.
///
/// `x` entries are variable-to-check messages, `y` entries check-to-variable.
/// All fields stay in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeState {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl DeState {
    pub const ALL_ONES: DeState = DeState { x1: 1.0, y1: 1.0, x2: 1.0, y2: 1.0 };
    pub const ALL_ZEROS: DeState = DeState { x1: 0.0, y1: 0.0, x2: 0.0, y2: 0.0 };

    /// Largest of the four message erasure rates.
    pub fn max_component(&self) -> f64 {
        self.x1.max(self.y1).max(self.x2).max(self.y2)
    }
}

/// Check-to-variable update: y = 1 - (1 - x)^(r-1).
pub(crate) fn check_update(x: f64, r: u32) -> f64 {
    1.0 - powi(1.0 - x, r - 1)
}

/// Variable-to-check update for one user.
///
/// The other user's bit is unknown with probability other_y^other_l, so the
/// channel contributes effective_erasure(eps, other_y^other_l); the remaining
/// own_l - 1 check messages must all be erased as well.
///
/// Arguments are ordered own-then-other so that a symmetric caller performs
/// bit-identical arithmetic for both users.
pub(crate) fn variable_update(eps: f64, own_y: f64, other_y: f64, own_l: u32, other_l: u32) -> f64 {
    effective_erasure(eps, powi(other_y, other_l)) * powi(own_y, own_l - 1)
}

/// One parallel DE update: fresh y from the incoming x, then fresh x from
/// those y.
pub fn de_step(state: DeState, eps: f64, deg: DegreeProfile) -> DeState {
    let y1 = check_update(state.x1, deg.r1);
    let y2 = check_update(state.x2, deg.r2);
    let x1 = variable_update(eps, y1, y2, deg.l1, deg.l2);
    let x2 = variable_update(eps, y2, y1, deg.l2, deg.l1);
    DeState { x1, y1, x2, y2 }
}

/// Iterates `de_step` from the all-ones state until the largest componentwise
/// change over one step drops below `tol`.
///
/// The iteration is componentwise nonincreasing from all-ones, so the limit
/// exists; `max_iters` only guards against budgets too small for the target
/// tolerance.
pub fn forward_fixed_point(
    eps: f64,
    deg: DegreeProfile,
    tol: f64,
    max_iters: u64,
) -> Result<DeState, DeError> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(DeError::Domain("tolerance must be positive"));
    }
    let mut state = DeState::ALL_ONES;
    for _ in 0..max_iters {
        let next = de_step(state, eps, deg);
        let change = (next.x1 - state.x1)
            .abs()
            .max((next.x2 - state.x2).abs())
            .max((next.y1 - state.y1).abs())
            .max((next.y2 - state.y2).abs());
        state = next;
        if change < tol {
            return Ok(state);
        }
    }
    Err(DeError::NonConvergence { iterations: max_iters })
}

/// True when forward DE at `eps` reaches the all-zero state.
fn decodes(eps: f64, deg: DegreeProfile) -> bool {
    use crate::defaults::{DECODE_THRESHOLD, UNCOUPLED_MAX_ITERS, UNCOUPLED_TOL};
    match forward_fixed_point(eps, deg, UNCOUPLED_TOL, UNCOUPLED_MAX_ITERS) {
        Ok(state) => state.max_component() < DECODE_THRESHOLD,
        // Budget exhaustion counts as a failed decode; the bisection keeps
        // the last eps that provably decoded.
        Err(_) => false,
    }
}

/// Largest erasure rate the joint iterative decoder survives, located by
/// bisection to within `tol_eps`.
///
/// Returns 0 when even a noiseless channel fails to decode; some degree
/// profiles stall on the ambiguity of the adder channel alone.
pub fn bp_threshold(deg: DegreeProfile, tol_eps: f64) -> f64 {
    assert!(tol_eps > 0.0, "tol_eps must be positive");
    if !decodes(0.0, deg) {
        return 0.0;
    }
    // eps = 1 keeps the all-ones state fixed, so the upper bracket never
    // decodes and [lo, hi] always brackets the threshold.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while hi - lo > tol_eps {
        let mid = 0.5 * (lo + hi);
        if decodes(mid, deg) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Residual channel-output entropy given the check-to-variable erasure rates
/// of both users.
///
/// A position is fully ambiguous (entropy 3/2) when both users' codes leave
/// it unresolved, and costs one bit when exactly one side is unresolved.
pub fn bp_exit(y1: f64, y2: f64, deg: DegreeProfile) -> f64 {
    let e1 = powi(y1, deg.l1);
    let e2 = powi(y2, deg.l2);
    1.5 * e1 * e2 + e1 * (1.0 - e2) + (1.0 - e1) * e2
}

/// One point of the parametric fixed-point curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbpPoint {
    /// Variable-to-check erasure rate parametrizing the fixed point.
    pub x: f64,
    /// Erasure rate at which x is a DE fixed point.
    pub eps: f64,
    /// Residual entropy of the fixed point.
    pub h_bp: f64,
    /// False when the fixed point would need eps outside [0, 1].
    pub physical: bool,
}

/// Solves the fixed-point equation for the erasure rate that holds `x` in
/// place. Only defined for equal degree pairs, where both users share the
/// same x.
pub fn ebp_point(x: f64, deg: DegreeProfile) -> Result<EbpPoint, DeError> {
    if !deg.equal_degrees() {
        return Err(DeError::UnequalDegrees);
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(DeError::Domain("curve parameter x must lie in (0, 1]"));
    }
    let (l, r) = (deg.l1, deg.r1);
    let y = check_update(x, r);
    // x = (eps + (1 - eps)/2 y^l) y^(l-1), solved for eps.
    let half_yl = 0.5 * powi(y, l);
    let eps = (x / powi(y, l - 1) - half_yl) / (1.0 - half_yl);
    let h_bp = bp_exit(y, y, deg);
    let physical = (0.0..=1.0).contains(&eps);
    Ok(EbpPoint { x, eps, h_bp, physical })
}

/// Fixed-point curve sampled over `x_grid`. Points needing eps outside
/// [0, 1] are kept but flagged non-physical so the curve stays connected.
pub fn ebp_curve(deg: DegreeProfile, x_grid: &[f64]) -> Result<Vec<EbpPoint>, DeError> {
    x_grid.iter().map(|&x| ebp_point(x, deg)).collect()
}
