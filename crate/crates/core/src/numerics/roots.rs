//! Bracketing root finder and golden-section minimizer.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection for a sign change of `f` on `[lo, hi]`. Stops when the bracket
/// is narrower than `x_tol` or `|f| <= f_tol`.
pub fn bisect<T: Real>(mut f: impl FnMut(T) -> T, mut lo: T, mut hi: T, x_tol: T, f_tol: T) -> Result<T> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == T::zero() {
        return Ok(lo);
    }
    if f_hi == T::zero() {
        return Ok(hi);
    }
    if (f_lo > T::zero()) == (f_hi > T::zero()) {
        return Err(Error::param("bracket", format!("no sign change on [{}, {}]", lo.as_f64(), hi.as_f64())));
    }
    for _ in 0..400 {
        let mid = (lo + hi) * T::lit(0.5);
        let f_mid = f(mid);
        if f_mid.abs() <= f_tol || (hi - lo).abs() <= x_tol || mid == lo || mid == hi {
            return Ok(mid);
        }
        if (f_mid > T::zero()) == (f_lo > T::zero()) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Golden-section search for a minimum of a unimodal `f` on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_min<T: Real>(mut f: impl FnMut(T) -> T, mut a: T, mut b: T, x_tol: T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
