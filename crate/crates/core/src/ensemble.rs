//! Degree profiles, chain parameters, and the design rate of the coupled
//! ensemble.
//!
//! Variable nodes live at sections -L..=L. Each variable edge lands in the w
//! sections [i, i+w-1]; each check draws from [i-w+1, i]. Both users share L
//! and w but may use different regular degree pairs.

use alloc::vec::Vec;
use core::fmt;

use crate::math::powi;

/// Degrees above this are rejected at validation time.
pub const MAX_DEGREE: u32 = 64;
/// Chain half-lengths above this are rejected at validation time.
pub const MAX_HALF_LEN: u32 = 1_000_000;

/// Regular degree pairs (l, r) for the two users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeProfile {
    pub l1: u32,
    pub r1: u32,
    pub l2: u32,
    pub r2: u32,
}

impl DegreeProfile {
    pub const fn new(l1: u32, r1: u32, l2: u32, r2: u32) -> Self {
        DegreeProfile { l1, r1, l2, r2 }
    }

    /// Both users with the same (l, r).
    pub const fn symmetric(l: u32, r: u32) -> Self {
        DegreeProfile::new(l, r, l, r)
    }

    /// True when l1 = l2 and r1 = r2.
    pub fn equal_degrees(&self) -> bool {
        self.l1 == self.l2 && self.r1 == self.r2
    }
}

/// Degree profile plus chain half-length L and coupling window w.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledParams {
    pub degrees: DegreeProfile,
    /// L: sections run over -L..=L.
    pub half_len: u32,
    /// w: each edge is smoothed over w consecutive sections.
    pub window: u32,
}

impl CoupledParams {
    pub const fn new(degrees: DegreeProfile, half_len: u32, window: u32) -> Self {
        CoupledParams { degrees, half_len, window }
    }

    /// Number of variable sections, 2L + 1.
    pub fn num_sections(&self) -> usize {
        2 * self.half_len as usize + 1
    }

    /// Section indices -L..=L.
    pub fn sections(&self) -> impl Iterator<Item = i64> {
        let l = self.half_len as i64;
        -l..=l
    }
}

/// One violated parameter constraint. `validate` reports all of them at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamViolation {
    VariableDegreeTooSmall { user: u8, l: u32 },
    CheckDegreeNotLarger { user: u8, l: u32, r: u32 },
    VariableDegreeTooLarge { user: u8, l: u32 },
    CheckDegreeTooLarge { user: u8, r: u32 },
    HalfLenZero,
    HalfLenTooLarge { half_len: u32 },
    WindowZero,
    WindowExceedsChain { window: u32, half_len: u32 },
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParamViolation::*;
        match *self {
            VariableDegreeTooSmall { user, l } => {
                write!(f, "user {user}: variable degree l = {l} must be at least 2")
            }
            CheckDegreeNotLarger { user, l, r } => {
                write!(f, "user {user}: check degree r = {r} must exceed l = {l}")
            }
            VariableDegreeTooLarge { user, l } => {
                write!(f, "user {user}: variable degree l = {l} exceeds cap {MAX_DEGREE}")
            }
            CheckDegreeTooLarge { user, r } => {
                write!(f, "user {user}: check degree r = {r} exceeds cap {MAX_DEGREE}")
            }
            HalfLenZero => write!(f, "chain half-length L must be at least 1"),
            HalfLenTooLarge { half_len } => {
                write!(f, "chain half-length L = {half_len} exceeds cap {MAX_HALF_LEN}")
            }
            WindowZero => write!(f, "coupling window w must be at least 1"),
            WindowExceedsChain { window, half_len } => {
                write!(f, "coupling window w = {window} exceeds 2L = {}", 2 * half_len)
            }
        }
    }
}

/// All violations of a parameter set, for one-shot reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violations(pub Vec<ParamViolation>);

impl fmt::Display for Violations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl core::error::Error for Violations {}

/// Collect every violated constraint (empty means valid).
pub fn violations(p: &CoupledParams) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    let d = &p.degrees;
    for (user, l, r) in [(1u8, d.l1, d.r1), (2u8, d.l2, d.r2)] {
        if l < 2 {
            out.push(ParamViolation::VariableDegreeTooSmall { user, l });
        }
        if r <= l {
            out.push(ParamViolation::CheckDegreeNotLarger { user, l, r });
        }
        if l > MAX_DEGREE {
            out.push(ParamViolation::VariableDegreeTooLarge { user, l });
        }
        if r > MAX_DEGREE {
            out.push(ParamViolation::CheckDegreeTooLarge { user, r });
        }
    }
    if p.half_len < 1 {
        out.push(ParamViolation::HalfLenZero);
    }
    if p.half_len > MAX_HALF_LEN {
        out.push(ParamViolation::HalfLenTooLarge { half_len: p.half_len });
    }
    if p.window < 1 {
        out.push(ParamViolation::WindowZero);
    }
    if p.window > 2 * p.half_len {
        out.push(ParamViolation::WindowExceedsChain {
            window: p.window,
            half_len: p.half_len,
        });
    }
    out
}

/// Validate a parameter set, reporting the full violation list on failure.
pub fn validate(p: &CoupledParams) -> Result<(), Violations> {
    let v = violations(p);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Violations(v))
    }
}

/// Domain errors of [`design_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateError {
    WindowExceedsChain { window: u32, half_len: u32 },
    DegreesOutOfOrder { l: u32, r: u32 },
}

impl fmt::Display for RateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RateError::WindowExceedsChain { window, half_len } => {
                write!(f, "coupling window w = {window} exceeds 2L = {}", 2 * half_len)
            }
            RateError::DegreesOutOfOrder { l, r } => {
                write!(f, "check degree r = {r} must exceed variable degree l = {l}")
            }
        }
    }
}

impl core::error::Error for RateError {}

/// Design rate of one user's coupled (l, r, L, w) component:
///
/// R = (1 - l/r) - (l/r) * (w + 1 - 2 * sum_{i=0}^{w} (i/w)^r) / (2L + 1).
///
/// The boundary term vanishes for w = 1 and decays like 1/L, so R increases
/// to 1 - l/r as the chain grows.
pub fn design_rate(l: u32, r: u32, half_len: u32, window: u32) -> Result<f64, RateError> {
    if l >= r {
        return Err(RateError::DegreesOutOfOrder { l, r });
    }
    if window > 2 * half_len {
        return Err(RateError::WindowExceedsChain { window, half_len });
    }
    let ratio = l as f64 / r as f64;
    // i = 0 contributes zero for every r >= 1.
    let mut sum = 0.0;
    for i in 0..=window {
        sum += powi(i as f64 / window as f64, r);
    }
    let sections = 2.0 * half_len as f64 + 1.0;
    let correction = ratio * (window as f64 + 1.0 - 2.0 * sum) / sections;
    Ok((1.0 - ratio) - correction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_one_rate_is_exact() {
        // For w = 1 the sum telescopes to 1 and the correction is exactly 0.
        assert_eq!(design_rate(3, 6, 1, 1).unwrap(), 0.5);
        assert_eq!(design_rate(3, 6, 1_000_000, 1).unwrap(), 0.5);
        assert_eq!(design_rate(4, 8, 17, 1).unwrap(), 0.5);
    }

    #[test]
    fn quoted_rates() {
        assert!((design_rate(3, 6, 100, 3).unwrap() - 0.495468).abs() < 1e-6);
        assert!((design_rate(3, 6, 2, 3).unwrap() - 0.317833).abs() < 1e-6);
    }

    #[test]
    fn validate_reports_every_violation() {
        let good = CoupledParams::new(DegreeProfile::new(3, 6, 3, 6), 200, 3);
        assert!(validate(&good).is_ok());

        // w = 3 > 2L = 2.
        let narrow = CoupledParams::new(DegreeProfile::new(3, 6, 3, 6), 1, 3);
        let errs = violations(&narrow);
        assert_eq!(
            errs,
            [ParamViolation::WindowExceedsChain { window: 3, half_len: 1 }]
        );

        // r must strictly exceed l.
        let flat = CoupledParams::new(DegreeProfile::new(6, 6, 3, 6), 10, 2);
        assert_eq!(
            violations(&flat),
            [ParamViolation::CheckDegreeNotLarger { user: 1, l: 6, r: 6 }]
        );

        // Several violations at once, all reported.
        let bad = CoupledParams::new(DegreeProfile::new(1, 70, 3, 6), 0, 0);
        let errs = violations(&bad);
        assert!(errs.contains(&ParamViolation::VariableDegreeTooSmall { user: 1, l: 1 }));
        assert!(errs.contains(&ParamViolation::CheckDegreeTooLarge { user: 1, r: 70 }));
        assert!(errs.contains(&ParamViolation::HalfLenZero));
        assert!(errs.contains(&ParamViolation::WindowZero));
        let msg = alloc::format!("{}", Violations(errs));
        assert!(msg.contains("; "), "all violations listed in one message: {msg}");
    }

    #[test]
    fn caps_enforced() {
        let p = CoupledParams::new(DegreeProfile::new(3, 65, 3, 6), 1_000_001, 2);
        let errs = violations(&p);
        assert!(errs.contains(&ParamViolation::CheckDegreeTooLarge { user: 1, r: 65 }));
        assert!(errs.contains(&ParamViolation::HalfLenTooLarge { half_len: 1_000_001 }));
    }

    #[test]
    fn sections_iterate_symmetrically() {
        let p = CoupledParams::new(DegreeProfile::symmetric(3, 6), 2, 2);
        let secs: alloc::vec::Vec<i64> = p.sections().collect();
        assert_eq!(secs, [-2, -1, 0, 1, 2]);
        assert_eq!(p.num_sections(), 5);
    }
}
