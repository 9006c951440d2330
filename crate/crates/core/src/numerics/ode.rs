//! Dormand-Prince 5(4) integrator with adaptive step control.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-11, atol: 1e-13, h_init: 1e-4, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// Whether integration should proceed past an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Accepted steps of an integration, including the initial point.
#[derive(Debug, Clone)]
pub struct Trajectory<T, const D: usize> {
    pub xs: Vec<T>,
    pub ys: Vec<[T; D]>,
    /// True when the observer stopped integration before `x_end`.
    pub stopped: bool,
}

impl<T: Copy, const D: usize> Trajectory<T, D> {
    pub fn last(&self) -> (T, [T; D]) {
        (*self.xs.last().expect("trajectory has initial point"), *self.ys.last().expect("non-empty"))
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real, const D: usize>(y: &[T; D], h: T, terms: &[(f64, &[T; D])]) -> [T; D] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + T::lit(*c) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (`x_end > x0`).
///
/// `observe` sees every accepted point and may stop the integration early.
pub fn dopri5<T, const D: usize>(
    mut f: impl FnMut(T, &[T; D]) -> [T; D],
    x0: T,
    y0: [T; D],
    x_end: T,
    opts: OdeOptions,
    mut observe: impl FnMut(T, &[T; D], &[T; D]) -> Control,
) -> Result<Trajectory<T, D>>
where
    T: Real,
{
    if !(x_end > x0) {
        return Err(Error::OdeFailed(format!("empty interval [{}, {}]", x0.as_f64(), x_end.as_f64())));
    }
    let rtol = T::lit(opts.rtol);
    let atol = T::lit(opts.atol);
    let h_max = T::lit(opts.h_max).min(x_end - x0);
    let mut h = T::lit(opts.h_init).min(h_max);
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut traj = Trajectory { xs: vec![x], ys: vec![y], stopped: false };
    if observe(x, &y, &k1) == Control::Stop {
        traj.stopped = true;
        return Ok(traj);
    }
    let min_h = (x_end - x0) * T::epsilon() * T::lit(16.0);
    let mut steps = 0usize;
    while x < x_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::OdeFailed(format!("step budget {} exhausted at x = {}", opts.max_steps, x.as_f64())));
        }
        let last = x + h >= x_end;
        if last {
            h = x_end - x;
        }
        let k2 = f(x + T::lit(C2) * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + T::lit(C3) * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + T::lit(C4) * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + T::lit(C5) * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let x_new = if last { x_end } else { x + h };
        let k7 = f(x_new, &y_new);

        let mut err_sq = T::zero();
        let mut finite = true;
        for i in 0..D {
            let e = h
                * (T::lit(E1) * k1[i]
                    + T::lit(E3) * k3[i]
                    + T::lit(E4) * k4[i]
                    + T::lit(E5) * k5[i]
                    + T::lit(E6) * k6[i]
                    + T::lit(E7) * k7[i]);
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            let r = e / sc;
            finite &= r.is_finite() && y_new[i].is_finite();
            err_sq = err_sq + r * r;
        }
        let err = if finite { (err_sq / T::count(D)).sqrt() } else { T::infinity() };

        if err <= T::one() {
            x = x_new;
            y = y_new;
            k1 = k7;
            traj.xs.push(x);
            traj.ys.push(y);
            if observe(x, &y, &k1) == Control::Stop {
                traj.stopped = true;
                return Ok(traj);
            }
            let fac = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            h = (h * fac).min(h_max);
        } else {
            let fac =
                if err.is_finite() { (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.1)) } else { T::lit(0.1) };
            h = h * fac;
            if h < min_h {
                return Err(Error::OdeFailed(format!("step size underflow at x = {}", x.as_f64())));
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let tr = dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, OdeOptions::default(), |_, _, _| Control::Continue)
            .unwrap();
        let (x, y) = tr.last();
        assert_eq!(x, 5.0);
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_preserves_linear_invariant() {
        // y0' = y1, y1' = -y0, y2' = -y1: y0 + y2 is conserved exactly by RK.
        let tr = dopri5(
            |_, y: &[f64; 3]| [y[1], -y[0], -y[1]],
            0.0,
            [1.0, 0.0, 0.0],
            10.0,
            OdeOptions::default(),
            |_, _, _| Control::Continue,
        )
        .unwrap();
        for y in &tr.ys {
            assert!((y[0] + y[2] - 1.0).abs() < 1e-13);
        }
        assert!((tr.last().1[0] - 10f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn observer_stops() {
        let tr = dopri5(
            |_, _y: &[f64; 1]| [1.0],
            0.0,
            [0.0],
            10.0,
            OdeOptions::default(),
            |_, y, _| {
                if y[0] > 2.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert!(tr.stopped);
        assert!(tr.last().1[0] > 2.0 && tr.last().0 < 10.0);
    }
}
