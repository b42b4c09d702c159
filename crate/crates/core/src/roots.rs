use crate::error::{Error, Result};

/// Bisection root of `f` on `[lo, hi]`, stopping when the bracket is narrower
/// than `tol`. The endpoints must bracket a sign change.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::domain(format!(
            "bad bracket [{lo}, {hi}] or tolerance {tol}"
        )));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::domain(format!(
            "no sign change on [{lo}, {hi}]: f = {f_lo:e} .. {f_hi:e}"
        )));
    }
    // 200 halvings exhaust any f64 bracket
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Checks that `f` is non-increasing on a uniform grid of `points` samples.
pub fn is_non_increasing<F>(f: F, lo: f64, hi: f64, points: usize) -> bool
where
    F: Fn(f64) -> f64,
{
    let step = (hi - lo) / (points.max(2) - 1) as f64;
    let mut prev = f(lo);
    for k in 1..points.max(2) {
        let v = f(lo + step * k as f64);
        if v > prev + 1e-12 {
            return false;
        }
        prev = v;
    }
    true
}
