//! Small float helpers usable without std.

/// x^n by binary exponentiation.
///
/// All DE exponents are small integers, so this replaces `f64::powi` (which
/// lives in std, not core) and is bit-for-bit reproducible across platforms.
#[inline]
pub(crate) fn powi(x: f64, n: u32) -> f64 {
    let mut base = x;
    let mut exp = n;
    let mut acc = 1.0;
    while exp > 1 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    if exp == 1 {
        acc * base
    } else {
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::powi;

    #[test]
    fn matches_std_powi() {
        for n in 0..66u32 {
            for &x in &[0.0, 1e-9, 0.3, 0.5, 0.99, 1.0, 1.5] {
                let got = powi(x, n);
                let want = x.powi(n as i32);
                let tol = 1e-15 * want.abs().max(1e-300);
                assert!(
                    (got - want).abs() <= tol.max(f64::EPSILON * want.abs() * 64.0),
                    "x={x} n={n}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn zero_and_one_exponents() {
        assert_eq!(powi(0.7, 0), 1.0);
        assert_eq!(powi(0.7, 1), 0.7);
        assert_eq!(powi(0.0, 5), 0.0);
        assert_eq!(powi(1.0, 64), 1.0);
    }
}
