//! Scalar root bracketing shared by the synthesis routines.

/// Bisection on `f` over `[lo, hi]`. Returns `None` when the endpoints do not
/// bracket a sign change. Iterates until the bracket is narrower than
/// `rel_tol` relative to its midpoint.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, rel_tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo * f_hi > 0.0 {
        return None;
    }
    if f_lo == 0.0 {
        return Some(lo);
    }
    if f_hi == 0.0 {
        return Some(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= rel_tol * mid.abs() {
            return Some(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Some(mid);
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Some(0.5 * (lo + hi))
}
