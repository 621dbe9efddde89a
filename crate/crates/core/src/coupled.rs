//! Density evolution over a coupled chain of 2L+1 sections.
//!
//! Per section and user the state is one erasure probability. A check at
//! position j sees the trailing window of variable sections [j-w+1, j]; a
//! variable at section i sees the leading window of check positions
//! [i, i+w-1]. Sections outside [-L, L] are pinned to zero, which is what
//! lets a decoding wave start at the chain ends.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::defaults::{COUPLED_TOL, DECODE_THRESHOLD};
use crate::ensemble::{validate, CoupledParams, DegreeProfile};
use crate::error::DeError;
use crate::uncoupled::{check_update, variable_update};

/// Per-section variable-to-check erasure probabilities for both users.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    half_len: u32,
    pub(crate) x1: Vec<f64>,
    pub(crate) x2: Vec<f64>,
}

impl Constellation {
    pub fn all_ones(half_len: u32) -> Self {
        Constellation::uniform(half_len, 1.0)
    }

    pub fn all_zeros(half_len: u32) -> Self {
        Constellation::uniform(half_len, 0.0)
    }

    /// Both users at `value` in every section.
    pub fn uniform(half_len: u32, value: f64) -> Self {
        assert!((0.0..=1.0).contains(&value), "entries must lie in [0, 1]");
        let n = 2 * half_len as usize + 1;
        Constellation { half_len, x1: vec![value; n], x2: vec![value; n] }
    }

    /// Builds a constellation from explicit rows, one entry per section in
    /// order -L..=L.
    pub fn from_rows(half_len: u32, x1: Vec<f64>, x2: Vec<f64>) -> Result<Self, DeError> {
        let n = 2 * half_len as usize + 1;
        if x1.len() != n || x2.len() != n {
            return Err(DeError::Domain("rows must hold exactly 2L+1 sections"));
        }
        let ok = |row: &[f64]| row.iter().all(|v| (0.0..=1.0).contains(v));
        if !ok(&x1) || !ok(&x2) {
            return Err(DeError::Domain("entries must lie in [0, 1]"));
        }
        Ok(Constellation { half_len, x1, x2 })
    }

    pub fn half_len(&self) -> u32 {
        self.half_len
    }

    pub fn num_sections(&self) -> usize {
        self.x1.len()
    }

    /// User-1 entry at section i; zero outside [-L, L].
    pub fn x1_at(&self, i: i64) -> f64 {
        row_at(&self.x1, self.half_len, i)
    }

    /// User-2 entry at section i; zero outside [-L, L].
    pub fn x2_at(&self, i: i64) -> f64 {
        row_at(&self.x2, self.half_len, i)
    }

    /// Both rows in section order -L..=L.
    pub fn rows(&self) -> (&[f64], &[f64]) {
        (&self.x1, &self.x2)
    }

    /// Section-averaged user-1 erasure rate.
    pub fn entropy(&self) -> f64 {
        self.x1.iter().sum::<f64>() / self.x1.len() as f64
    }

    /// Largest entry over both users.
    pub fn max_entry(&self) -> f64 {
        let m1 = self.x1.iter().fold(0.0f64, |a, &v| a.max(v));
        self.x2.iter().fold(m1, |a, &v| a.max(v))
    }

    /// Sup-norm distance to a constellation of the same length.
    pub fn sup_distance(&self, other: &Constellation) -> f64 {
        assert_eq!(self.half_len, other.half_len, "mismatched chain lengths");
        let mut d = 0.0f64;
        for (a, b) in self.x1.iter().zip(&other.x1) {
            d = d.max((a - b).abs());
        }
        for (a, b) in self.x2.iter().zip(&other.x2) {
            d = d.max((a - b).abs());
        }
        d
    }
}

fn row_at(row: &[f64], half_len: u32, i: i64) -> f64 {
    let l = half_len as i64;
    if i < -l || i > l {
        0.0
    } else {
        row[(i + l) as usize]
    }
}

/// Average of the w variable sections [j-w+1, j] feeding the check at
/// position j. Out-of-range sections read as zero.
pub fn check_window_average(row: &[f64], half_len: u32, j: i64, window: u32) -> f64 {
    let mut sum = 0.0;
    for k in 0..window as i64 {
        sum += row_at(row, half_len, j - k);
    }
    sum / window as f64
}

/// Average of the w check-to-variable erasure rates seen by section i.
///
/// Check positions beyond L are evaluated on their (partially zero) windows,
/// never clamped.
pub fn variable_window_average(row: &[f64], half_len: u32, r: u32, i: i64, window: u32) -> f64 {
    let mut sum = 0.0;
    for j in 0..window as i64 {
        sum += check_update(check_window_average(row, half_len, i + j, window), r);
    }
    sum / window as f64
}

/// New (x1, x2) for section i computed from the current rows.
fn section_update(
    x1: &[f64],
    x2: &[f64],
    half_len: u32,
    deg: DegreeProfile,
    window: u32,
    eps: f64,
    i: i64,
) -> (f64, f64) {
    let ybar1 = variable_window_average(x1, half_len, deg.r1, i, window);
    let ybar2 = variable_window_average(x2, half_len, deg.r2, i, window);
    (
        variable_update(eps, ybar1, ybar2, deg.l1, deg.l2),
        variable_update(eps, ybar2, ybar1, deg.l2, deg.l1),
    )
}

/// Which sections a step touches.
#[derive(Debug, Clone, Copy)]
pub enum Sections<'a> {
    All,
    Only(&'a [i64]),
}

/// One synchronous update of the chosen sections; y-windows are computed
/// from the pre-update constellation, untouched sections keep their values.
pub fn coupled_step(
    c: &Constellation,
    eps: f64,
    p: &CoupledParams,
    sections: Sections<'_>,
) -> Constellation {
    debug_assert_eq!(c.half_len, p.half_len);
    match sections {
        Sections::All => {
            let mut sweeper = Sweeper::new(p);
            let mut next = c.clone();
            sweeper.parallel_sweep(&mut next, eps);
            next
        }
        Sections::Only(list) => {
            let mut next = c.clone();
            let updates: Vec<(i64, (f64, f64))> = list
                .iter()
                .map(|&i| (i, section_update(&c.x1, &c.x2, c.half_len, p.degrees, p.window, eps, i)))
                .collect();
            let l = c.half_len as i64;
            for (i, (nx1, nx2)) in updates {
                assert!((-l..=l).contains(&i), "section index out of range");
                next.x1[(i + l) as usize] = nx1;
                next.x2[(i + l) as usize] = nx2;
            }
            next
        }
    }
}

/// Full-sweep engine. Check messages are shared between the two window
/// passes of one sweep, which keeps a parallel sweep at O(sections * w)
/// instead of O(sections * w^2); the arithmetic per entry is identical to
/// `variable_window_average`.
struct Sweeper {
    half_len: u32,
    window: u32,
    deg: DegreeProfile,
    // check-to-variable erasure rates at positions -L ..= L+w-1
    y1: Vec<f64>,
    y2: Vec<f64>,
    next1: Vec<f64>,
    next2: Vec<f64>,
}

impl Sweeper {
    fn new(p: &CoupledParams) -> Self {
        let n = 2 * p.half_len as usize + 1;
        Sweeper {
            half_len: p.half_len,
            window: p.window,
            deg: p.degrees,
            y1: vec![0.0; n + p.window as usize - 1],
            y2: vec![0.0; n + p.window as usize - 1],
            next1: vec![0.0; n],
            next2: vec![0.0; n],
        }
    }

    fn refresh_check_messages(&mut self, c: &Constellation) {
        let l = self.half_len as i64;
        for (k, j) in (-l..=l + self.window as i64 - 1).enumerate() {
            self.y1[k] =
                check_update(check_window_average(&c.x1, self.half_len, j, self.window), self.deg.r1);
            self.y2[k] =
                check_update(check_window_average(&c.x2, self.half_len, j, self.window), self.deg.r2);
        }
    }

    /// Updates every section in place; returns the sup-norm change.
    fn parallel_sweep(&mut self, c: &mut Constellation, eps: f64) -> f64 {
        self.refresh_check_messages(c);
        let w = self.window as usize;
        let mut change = 0.0f64;
        for k in 0..c.x1.len() {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for j in 0..w {
                s1 += self.y1[k + j];
                s2 += self.y2[k + j];
            }
            let ybar1 = s1 / w as f64;
            let ybar2 = s2 / w as f64;
            self.next1[k] = variable_update(eps, ybar1, ybar2, self.deg.l1, self.deg.l2);
            self.next2[k] = variable_update(eps, ybar2, ybar1, self.deg.l2, self.deg.l1);
            change = change
                .max((self.next1[k] - c.x1[k]).abs())
                .max((self.next2[k] - c.x2[k]).abs());
        }
        core::mem::swap(&mut c.x1, &mut self.next1);
        core::mem::swap(&mut c.x2, &mut self.next2);
        change
    }
}

/// Update order over one pass of the chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// All sections synchronously.
    Parallel,
    /// Fresh uniformly random section permutation each sweep, applied one
    /// section at a time against the most recent values.
    RandomAdmissible { seed: u64 },
    /// Fixed subsets applied in order, each subset synchronously.
    RoundRobinSubsets(Vec<Vec<i64>>),
}

fn validate_schedule(schedule: &Schedule, p: &CoupledParams) -> Result<(), DeError> {
    if let Schedule::RoundRobinSubsets(subsets) = schedule {
        let l = p.half_len as i64;
        let mut seen = vec![false; p.num_sections()];
        for subset in subsets {
            for &i in subset {
                if !(-l..=l).contains(&i) {
                    return Err(DeError::InvalidSchedule("subset entry outside [-L, L]"));
                }
                seen[(i + l) as usize] = true;
            }
        }
        if seen.iter().any(|v| !v) {
            return Err(DeError::InvalidSchedule("every section must appear in some subset"));
        }
    }
    Ok(())
}

/// Sequential single-section updates in the given order, each against the
/// most recent values. Returns the sup-norm change.
fn sequential_pass(c: &mut Constellation, eps: f64, p: &CoupledParams, order: &[i64]) -> f64 {
    let l = c.half_len as i64;
    let mut change = 0.0f64;
    for &i in order {
        let (nx1, nx2) = section_update(&c.x1, &c.x2, c.half_len, p.degrees, p.window, eps, i);
        let k = (i + l) as usize;
        change = change.max((nx1 - c.x1[k]).abs()).max((nx2 - c.x2[k]).abs());
        c.x1[k] = nx1;
        c.x2[k] = nx2;
    }
    change
}

/// Synchronous update of one subset; values outside the subset are frozen
/// for the duration. Returns the sup-norm change.
fn subset_pass(c: &mut Constellation, eps: f64, p: &CoupledParams, subset: &[i64]) -> f64 {
    let l = c.half_len as i64;
    let updates: Vec<(usize, f64, f64)> = subset
        .iter()
        .map(|&i| {
            let (nx1, nx2) = section_update(&c.x1, &c.x2, c.half_len, p.degrees, p.window, eps, i);
            ((i + l) as usize, nx1, nx2)
        })
        .collect();
    let mut change = 0.0f64;
    for (k, nx1, nx2) in updates {
        change = change.max((nx1 - c.x1[k]).abs()).max((nx2 - c.x2[k]).abs());
        c.x1[k] = nx1;
        c.x2[k] = nx2;
    }
    change
}

/// A converged constellation with the erasure rate it belongs to and the
/// sup-norm violation of the fixed-point equations.
#[derive(Debug, Clone, PartialEq)]
pub struct DeFixedPoint {
    pub eps: f64,
    pub constellation: Constellation,
    pub residual: f64,
}

/// Sup-norm violation of the per-section fixed-point equations.
pub fn fixed_point_residual(c: &Constellation, eps: f64, p: &CoupledParams) -> f64 {
    let mut res = 0.0f64;
    for i in p.sections() {
        let (nx1, nx2) = section_update(&c.x1, &c.x2, c.half_len, p.degrees, p.window, eps, i);
        res = res.max((nx1 - c.x1_at(i)).abs()).max((nx2 - c.x2_at(i)).abs());
    }
    res
}

/// Runs the schedule from the all-ones constellation until the sup-norm
/// change over one full sweep drops below `tol`.
pub fn forward_de(
    eps: f64,
    p: &CoupledParams,
    schedule: &Schedule,
    tol: f64,
    max_sweeps: u64,
) -> Result<DeFixedPoint, DeError> {
    if validate(p).is_err() {
        return Err(DeError::Domain("invalid chain parameters"));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(DeError::Domain("tolerance must be positive"));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(DeError::Domain("erasure rate must lie in [0, 1]"));
    }
    validate_schedule(schedule, p)?;

    let mut c = Constellation::all_ones(p.half_len);
    let mut sweeper = Sweeper::new(p);
    let mut rng = match schedule {
        Schedule::RandomAdmissible { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let mut order: Vec<i64> = p.sections().collect();

    for _ in 0..max_sweeps {
        let change = match schedule {
            Schedule::Parallel => sweeper.parallel_sweep(&mut c, eps),
            Schedule::RandomAdmissible { .. } => {
                order.shuffle(rng.as_mut().expect("rng present for random schedule"));
                sequential_pass(&mut c, eps, p, &order)
            }
            Schedule::RoundRobinSubsets(subsets) => {
                let mut m = 0.0f64;
                for subset in subsets {
                    m = m.max(subset_pass(&mut c, eps, p, subset));
                }
                m
            }
        };
        if change < tol {
            let residual = fixed_point_residual(&c, eps, p);
            return Ok(DeFixedPoint { eps, constellation: c, residual });
        }
    }
    Err(DeError::NonConvergence { iterations: max_sweeps })
}

/// Drain signal for the decodability probe: section average over BOTH
/// users. With unequal degrees the stronger user's row collapses long
/// before the weaker one finishes, so a single-user average goes flat while
/// the chain is still draining.
fn both_user_mean(c: &Constellation) -> f64 {
    let (x1, x2) = c.rows();
    let sum: f64 = x1.iter().sum::<f64>() + x2.iter().sum::<f64>();
    sum / (x1.len() + x2.len()) as f64
}

/// Decodability probe at one erasure rate, parallel schedule.
///
/// Within the sweep budget three outcomes are possible: the constellation
/// drains below the decoding threshold, the iteration settles on a nonzero
/// fixed point, or the budget runs out mid-flight. Near the threshold the
/// decoding wave crawls (its speed vanishes linearly in the distance to the
/// threshold), so budget exhaustion alone must not count as failure: a
/// draining chain loses entropy at a steady rate while relaxation toward a
/// nonzero fixed point slows down geometrically. Comparing the last two
/// quarter-budget drops of the both-user average separates the two.
fn probe_decodes(eps: f64, p: &CoupledParams, budget: u64) -> bool {
    let mut c = Constellation::all_ones(p.half_len);
    let mut sweeper = Sweeper::new(p);
    let t_mid = budget / 2;
    let t_late = budget / 4 * 3;
    let mut chi_mid = 0.0;
    let mut chi_late = 0.0;
    for t in 1..=budget {
        let change = sweeper.parallel_sweep(&mut c, eps);
        if c.max_entry() < DECODE_THRESHOLD {
            return true;
        }
        if change < COUPLED_TOL {
            return false;
        }
        if t == t_mid {
            chi_mid = both_user_mean(&c);
        } else if t == t_late {
            chi_late = both_user_mean(&c);
        }
    }
    let drop_mid = chi_mid - chi_late;
    let drop_late = chi_late - both_user_mean(&c);
    drop_late > 0.0 && (drop_mid <= 0.0 || drop_late >= 0.5 * drop_mid)
}

/// Largest erasure rate the coupled chain decodes, located by bisection to
/// within `tol_eps`. Returns 0 when even a noiseless channel fails.
pub fn bp_threshold(p: &CoupledParams, tol_eps: f64) -> f64 {
    assert!(validate(p).is_ok(), "invalid chain parameters");
    assert!(tol_eps > 0.0, "tol_eps must be positive");
    let budget = crate::defaults::coupled_sweep_budget(p.half_len);
    if !probe_decodes(0.0, p, budget) {
        return 0.0;
    }
    // eps = 1 keeps the all-ones constellation fixed, so the upper bracket
    // never decodes.
    let mut lo = 0.0;
    let mut hi = 1.0;
    while hi - lo > tol_eps {
        let mid = 0.5 * (lo + hi);
        if probe_decodes(mid, p, budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
