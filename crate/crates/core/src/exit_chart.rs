//! Reverse density evolution and EXIT-style curve tracing for the coupled
//! chain.
//!
//! Forward DE only ever finds stable fixed points. Reverse DE fixes the
//! section-averaged erasure rate (the entropy) instead of the channel and
//! solves for the channel rate that holds it, which also reaches the
//! unstable branch. Sweeping the target entropy traces the full curve of
//! fixed points.

use alloc::vec;
use alloc::vec::Vec;

use crate::coupled::{
    fixed_point_residual, variable_window_average, Constellation, DeFixedPoint,
};
use crate::defaults::coupled_sweep_budget;
use crate::ensemble::{validate, CoupledParams};
use crate::error::DeError;
use crate::math::powi;
use crate::uncoupled::{bp_exit, variable_update};

/// Largest entropy step the curve tracer takes between successive solves.
/// Smaller steps keep a warm-started solve on its branch near the fold.
const CONTINUATION_STEP: f64 = 0.01;

/// One fixed point of the curve: target entropy, erasure rate, exit value.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub chi: f64,
    pub h_bp: f64,
    pub fixed_point: DeFixedPoint,
}

/// Curve sample at one grid entropy. Failed solves stay in the output as
/// flagged gaps so partial curves keep their grid alignment.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub chi: f64,
    pub point: Result<CurvePoint, DeError>,
}

/// Section shape summary of a constellation (user-1 row).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport {
    /// Mirror symmetry around section 0 within the tolerance.
    pub symmetric: bool,
    /// Nondecreasing up to the argmax, nonincreasing after, within the
    /// tolerance.
    pub unimodal: bool,
    /// Value at section 0.
    pub flat_value: f64,
    /// Sections within the tolerance of `flat_value`.
    pub flat_width: usize,
    /// Sections between the first crossings of 10% and 90% of `flat_value`,
    /// scanning inward from the left end.
    pub transition_width: usize,
}

/// One reverse sweep: refresh the check-side view of `row`, bisect the
/// erasure rate that restores the target entropy, rewrite the row at that
/// rate. Returns the rate and the sup-norm row change.
fn reverse_sweep(
    row: &mut Vec<f64>,
    scratch: &mut Vec<f64>,
    vavg: &mut [f64],
    p: &CoupledParams,
    chi: f64,
) -> Result<(f64, f64), DeError> {
    let (l, r) = (p.degrees.l1, p.degrees.r1);
    let half_len = p.half_len;
    let n = row.len() as f64;

    for (k, i) in p.sections().enumerate() {
        vavg[k] = variable_window_average(row, half_len, r, i, p.window);
    }

    // Each section is affine and increasing in the erasure rate e:
    // x_i(e) = a_i + e (t_i - a_i) with t_i = vavg^(l-1), a_i = t_i vavg^l / 2,
    // so the mean is f(e) = fa + e * fb and the bracket check is exact.
    let mut fa = 0.0;
    let mut ft = 0.0;
    for &v in vavg.iter() {
        let t = powi(v, l - 1);
        fa += 0.5 * t * powi(v, l);
        ft += t;
    }
    fa /= n;
    let fb = ft / n - fa;
    if fa > chi || fa + fb < chi {
        return Err(DeError::NoSolution { chi });
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if fa + mid * fb < chi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eps = 0.5 * (lo + hi);

    let mut change = 0.0f64;
    for (k, &v) in vavg.iter().enumerate() {
        scratch[k] = variable_update(eps, v, v, l, l);
        change = change.max((scratch[k] - row[k]).abs());
    }
    core::mem::swap(row, scratch);
    Ok((eps, change))
}

fn solve_reverse(
    chi: f64,
    p: &CoupledParams,
    tol: f64,
    mut row: Vec<f64>,
) -> Result<(DeFixedPoint, Vec<f64>), DeError> {
    let n = p.num_sections();
    let mut scratch = vec![0.0; n];
    let mut vavg = vec![0.0; n];
    let budget = coupled_sweep_budget(p.half_len);
    // stop well inside tol so the fixed-point residual lands under it too
    let inner_tol = tol * 0.05;
    for _ in 0..budget {
        let (eps, change) = reverse_sweep(&mut row, &mut scratch, &mut vavg, p, chi)?;
        if change < inner_tol {
            let c = Constellation::from_rows(p.half_len, row.clone(), row.clone())
                .expect("update keeps entries in [0, 1]");
            let residual = fixed_point_residual(&c, eps, p);
            return Ok((DeFixedPoint { eps, constellation: c, residual }, row));
        }
    }
    Err(DeError::NonConvergence { iterations: budget })
}

fn check_reverse_inputs(chi: f64, p: &CoupledParams, tol: f64) -> Result<(), DeError> {
    if validate(p).is_err() {
        return Err(DeError::Domain("invalid chain parameters"));
    }
    if !p.degrees.equal_degrees() {
        return Err(DeError::UnequalDegrees);
    }
    if !(chi > 0.0 && chi < 1.0) {
        return Err(DeError::Domain("target entropy must lie in (0, 1)"));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(DeError::Domain("tolerance must be positive"));
    }
    Ok(())
}

/// Finds the fixed point with section-averaged erasure rate `chi_target`,
/// together with the channel rate that sustains it.
///
/// Starts from the uniform constellation at that entropy; each sweep
/// re-solves the channel rate by bisection so the entropy is pinned while
/// the shape relaxes. The result can be an unstable fixed point, which is
/// the point of running DE in reverse.
pub fn reverse_fixed_point(
    chi_target: f64,
    p: &CoupledParams,
    tol: f64,
) -> Result<DeFixedPoint, DeError> {
    check_reverse_inputs(chi_target, p, tol)?;
    let row = vec![chi_target; p.num_sections()];
    solve_reverse(chi_target, p, tol, row).map(|(fp, _)| fp)
}

/// Section-averaged residual entropy of the channel outputs under the
/// check-to-variable rates the constellation induces.
pub fn exit_value(c: &Constellation, p: &CoupledParams) -> f64 {
    let deg = p.degrees;
    let (x1, x2) = c.rows();
    let mut sum = 0.0;
    for i in p.sections() {
        let ybar1 = variable_window_average(x1, c.half_len(), deg.r1, i, p.window);
        let ybar2 = variable_window_average(x2, c.half_len(), deg.r2, i, p.window);
        sum += bp_exit(ybar1, ybar2, deg);
    }
    sum / p.num_sections() as f64
}

/// Traces the fixed-point curve over `chi_grid` (sorted, inside (0, 1)).
///
/// Consecutive points are warm-started from each other through continuation
/// steps of at most `CONTINUATION_STEP`; after a failed point the tracer
/// reseeds from the uniform constellation. Failures are returned in place as
/// gaps rather than aborting the curve.
pub fn ebp_curve(
    p: &CoupledParams,
    chi_grid: &[f64],
    tol: f64,
) -> Result<Vec<CurveSample>, DeError> {
    if validate(p).is_err() {
        return Err(DeError::Domain("invalid chain parameters"));
    }
    if !p.degrees.equal_degrees() {
        return Err(DeError::UnequalDegrees);
    }
    if chi_grid.windows(2).any(|w| w[0] > w[1]) || chi_grid.iter().any(|&x| !(x > 0.0 && x < 1.0))
    {
        return Err(DeError::Domain("entropy grid must be sorted inside (0, 1)"));
    }

    let mut samples = Vec::with_capacity(chi_grid.len());
    let mut warm: Option<(f64, Vec<f64>)> = None;
    for &chi in chi_grid {
        let solved = match warm.take() {
            Some((prev_chi, prev_row)) => continue_to(chi, prev_chi, prev_row, p, tol),
            None => solve_reverse(chi, p, tol, vec![chi; p.num_sections()]),
        };
        match solved {
            Ok((fp, row)) => {
                let h_bp = exit_value(&fp.constellation, p);
                samples.push(CurveSample {
                    chi,
                    point: Ok(CurvePoint { chi, h_bp, fixed_point: fp }),
                });
                warm = Some((chi, row));
            }
            Err(e) => {
                samples.push(CurveSample { chi, point: Err(e) });
                warm = None;
            }
        }
    }
    Ok(samples)
}

/// Walks the target entropy from `prev_chi` to `chi` in steps small enough
/// to stay on the warm branch.
fn continue_to(
    chi: f64,
    prev_chi: f64,
    mut row: Vec<f64>,
    p: &CoupledParams,
    tol: f64,
) -> Result<(DeFixedPoint, Vec<f64>), DeError> {
    let gap = chi - prev_chi;
    // ceil by hand, f64::ceil is std-only; the gap is at most 1 so the
    // ratio fits u32 exactly
    let ratio = gap.abs() / CONTINUATION_STEP;
    let mut steps = ratio as u32;
    if (steps as f64) < ratio {
        steps += 1;
    }
    let steps = steps.max(1);
    let mut result = None;
    for s in 1..=steps {
        let target = prev_chi + gap * s as f64 / steps as f64;
        let (fp, next_row) = solve_reverse(target, p, tol, row)?;
        row = next_row;
        result = Some(fp);
    }
    Ok((result.expect("at least one continuation step"), row))
}

/// Shape summary of the user-1 row: symmetry, unimodality, the plateau and
/// how fast the boundary climbs to it.
pub fn analyze_constellation(c: &Constellation, tol: f64) -> ShapeReport {
    let (row, _) = c.rows();
    let n = row.len();
    let center = n / 2;

    let mut symmetric = true;
    for k in 0..n {
        if (row[k] - row[n - 1 - k]).abs() >= tol {
            symmetric = false;
            break;
        }
    }

    let argmax = row
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("entries are finite"))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let rising_ok = (0..argmax).all(|k| row[k + 1] >= row[k] - tol);
    let falling_ok = (argmax..n - 1).all(|k| row[k + 1] <= row[k] + tol);
    let unimodal = rising_ok && falling_ok;

    let flat_value = row[center];
    let flat_width = row.iter().filter(|v| (**v - flat_value).abs() < tol).count();

    let transition_width = if flat_value > 0.0 {
        let first_at = |level: f64| {
            row.iter()
                .position(|&v| v >= level)
                .expect("the center section reaches every fraction of its own value")
        };
        first_at(0.9 * flat_value) - first_at(0.1 * flat_value)
    } else {
        0
    };

    ShapeReport { symmetric, unimodal, flat_value, flat_width, transition_width }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::{coupled_step, forward_de, Schedule, Sections};
    use crate::defaults::{COUPLED_TOL, REVERSE_TOL, UNCOUPLED_MAX_ITERS, UNCOUPLED_TOL};
    use crate::ensemble::DegreeProfile;
    use crate::uncoupled;

    fn params(half_len: u32, window: u32) -> CoupledParams {
        CoupledParams::new(DegreeProfile::symmetric(3, 6), half_len, window)
    }

    #[test]
    fn known_unstable_fixed_point_at_entropy_028() {
        let p = params(16, 3);
        let fp = reverse_fixed_point(0.28, &p, REVERSE_TOL).unwrap();
        assert!((fp.eps - 0.3323).abs() < 1e-3, "eps = {}", fp.eps);
        assert!(fp.residual < REVERSE_TOL, "residual = {}", fp.residual);
        assert!((fp.constellation.entropy() - 0.28).abs() < REVERSE_TOL);

        let shape = analyze_constellation(&fp.constellation, 1e-6);
        assert!(shape.symmetric);
        assert!(shape.unimodal);
        assert!((shape.flat_value - 0.6548).abs() < 1e-3, "flat = {}", shape.flat_value);

        // the plateau sits on the stable uncoupled fixed point at that rate
        let u = uncoupled::forward_fixed_point(fp.eps, p.degrees, UNCOUPLED_TOL, UNCOUPLED_MAX_ITERS)
            .unwrap();
        assert!((shape.flat_value - u.x1).abs() < 1e-3);
    }

    #[test]
    fn exit_value_regression_at_entropy_028() {
        // frozen from the first converged run; the exit value sits slightly
        // below the plateau because boundary sections pull the average down
        let p = params(16, 3);
        let fp = reverse_fixed_point(0.28, &p, REVERSE_TOL).unwrap();
        let h = exit_value(&fp.constellation, &p);
        assert!((fp.eps - 0.332303742035174).abs() < 1e-9, "eps = {}", fp.eps);
        assert!((h - 0.654294976774584).abs() < 1e-9, "h = {h}");
    }

    #[test]
    fn reverse_solve_round_trips_a_stable_fixed_point() {
        let p = params(16, 3);
        let budget = coupled_sweep_budget(16);
        let fwd = forward_de(0.40, &p, &Schedule::Parallel, COUPLED_TOL, budget).unwrap();
        let chi = fwd.constellation.entropy();
        assert!(chi > 0.0, "0.40 must sit above the chain threshold for this test");
        let rev = reverse_fixed_point(chi, &p, REVERSE_TOL).unwrap();
        assert!((rev.eps - 0.40).abs() < 1e-6, "eps = {}", rev.eps);
    }

    #[test]
    fn entropy_near_one_needs_a_channel_near_full_erasure() {
        let p = params(64, 3);
        let fp = reverse_fixed_point(0.98, &p, REVERSE_TOL).unwrap();
        assert!(fp.eps > 0.9 && fp.eps <= 1.0, "eps = {}", fp.eps);
        assert!(fp.constellation.x1_at(0) > 0.95);
    }

    #[test]
    fn unreachable_entropies_report_no_solution() {
        // a 5-section chain loses too much at the boundary to hold 0.999
        let p = params(2, 3);
        assert!(matches!(
            reverse_fixed_point(0.999, &p, REVERSE_TOL),
            Err(DeError::NoSolution { .. })
        ));
        // and no fixed point family reaches arbitrarily small entropy
        let p = params(8, 3);
        assert!(matches!(
            reverse_fixed_point(0.001, &p, REVERSE_TOL),
            Err(DeError::NoSolution { .. })
        ));
    }

    #[test]
    fn reverse_inputs_are_validated() {
        let p = params(8, 3);
        assert!(matches!(reverse_fixed_point(0.0, &p, 1e-9), Err(DeError::Domain(_))));
        assert!(matches!(reverse_fixed_point(1.0, &p, 1e-9), Err(DeError::Domain(_))));
        assert!(matches!(reverse_fixed_point(0.5, &p, 0.0), Err(DeError::Domain(_))));
        let unequal = CoupledParams::new(DegreeProfile::new(5, 10, 6, 13), 8, 3);
        assert!(matches!(
            reverse_fixed_point(0.5, &unequal, 1e-9),
            Err(DeError::UnequalDegrees)
        ));
    }

    #[test]
    fn entropy_after_one_update_increases_with_the_erasure_rate() {
        // bisection premise: with the shape frozen, the channel rate moves
        // the post-update entropy strictly upward
        let p = params(8, 3);
        let shapes = [
            Constellation::uniform(8, 0.3),
            reverse_fixed_point(0.28, &params(8, 3), REVERSE_TOL)
                .map(|fp| fp.constellation)
                .unwrap_or_else(|_| Constellation::uniform(8, 0.5)),
        ];
        for c in &shapes {
            let mut last = -1.0;
            for k in 0..=10 {
                let eps = k as f64 / 10.0;
                let chi = coupled_step(c, eps, &p, Sections::All).entropy();
                assert!(chi > last, "eps = {eps}");
                last = chi;
            }
        }
    }

    #[test]
    fn curve_points_are_fixed_points_with_pinned_entropy() {
        let p = params(8, 3);
        let grid: Vec<f64> = (5..=90).step_by(5).map(|k| k as f64 / 100.0).collect();
        let samples = ebp_curve(&p, &grid, REVERSE_TOL).unwrap();
        assert_eq!(samples.len(), grid.len());
        let mut solved = 0;
        for s in &samples {
            if let Ok(pt) = &s.point {
                solved += 1;
                assert!(pt.fixed_point.residual < 1e-9, "chi {}", s.chi);
                assert!((pt.fixed_point.constellation.entropy() - s.chi).abs() < 1e-9);
                assert!(pt.h_bp >= 0.0 && pt.h_bp <= 1.5);
            }
        }
        // the mid-entropy stretch of the curve must be solvable
        assert!(solved >= 10, "solved {solved} of {}", grid.len());
    }

    #[test]
    fn shorter_chains_need_more_channel_at_the_same_entropy() {
        let mut last = f64::INFINITY;
        for half_len in [2u32, 4, 8] {
            let fp = reverse_fixed_point(0.5, &params(half_len, 3), REVERSE_TOL).unwrap();
            assert!(fp.eps <= last + 1e-6, "L = {half_len}");
            last = fp.eps;
        }
    }

    #[test]
    fn exit_value_at_flat_constellations() {
        let p = params(64, 3);
        let h = exit_value(&Constellation::all_ones(64), &p);
        assert!(h > 1.45 && h <= 1.5, "h = {h}");
        assert_eq!(exit_value(&Constellation::all_zeros(64), &p), 0.0);
    }

    #[test]
    fn shape_report_on_simple_rows() {
        let zeros = Constellation::all_zeros(8);
        let shape = analyze_constellation(&zeros, 1e-9);
        assert!(shape.symmetric && shape.unimodal);
        assert_eq!(shape.flat_value, 0.0);
        assert_eq!(shape.flat_width, 17);
        assert_eq!(shape.transition_width, 0);

        let n = 17;
        let ramp: Vec<f64> = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
        let c = Constellation::from_rows(8, ramp.clone(), ramp).unwrap();
        let shape = analyze_constellation(&c, 1e-9);
        assert!(!shape.symmetric);
        assert!(shape.unimodal);

        let mut zigzag = vec![0.0; 5];
        zigzag[1] = 1.0;
        zigzag[3] = 0.8;
        let c = Constellation::from_rows(2, zigzag.clone(), zigzag).unwrap();
        assert!(!analyze_constellation(&c, 1e-9).unimodal);
    }

    #[test]
    fn curve_rejects_bad_grids() {
        let p = params(4, 3);
        assert!(matches!(
            ebp_curve(&p, &[0.5, 0.4], REVERSE_TOL),
            Err(DeError::Domain(_))
        ));
        assert!(matches!(
            ebp_curve(&p, &[0.0, 0.5], REVERSE_TOL),
            Err(DeError::Domain(_))
        ));
    }
}
