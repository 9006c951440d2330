//! Critical constants, the barrier trade-off function, the corridor
//! functions and the blow-down ODE for the survival-decay constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect, dopri5, golden_min, integrate, Control, OdeOptions, QuadOptions};
use crate::scalar::Real;
use crate::spine_law::StabilityIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalParams<T> {
    pub alpha: StabilityIndex<T>,
    pub cstar: T,
    pub a: T,
}

impl<T: Real> CriticalParams<T> {
    pub fn new(alpha: StabilityIndex<T>, cstar: T, a: T) -> Result<Self> {
        check_cstar(cstar)?;
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::param("a", "must be positive"));
        }
        Ok(Self { alpha, cstar, a })
    }

    pub fn a_alpha(&self) -> T {
        a_alpha(self.alpha, self.cstar)
    }
}

fn check_cstar<T: Real>(cstar: T) -> Result<()> {
    if cstar > T::zero() && cstar.is_finite() {
        Ok(())
    } else {
        Err(Error::param("cstar", "must be positive and finite"))
    }
}

/// `(1 + 1/alpha) (alpha (1 + alpha) C_*)^{1/(1+alpha)}`.
pub fn a_alpha<T: Real>(alpha: StabilityIndex<T>, cstar: T) -> T {
    let a = alpha.get();
    (T::one() + a.recip()) * (a * (T::one() + a) * cstar).powf(alpha.barrier_exponent())
}

/// `f(x) = x + (1 + alpha) C_* / x^alpha`.
pub fn barrier_tradeoff_f<T: Real>(x: T, alpha: StabilityIndex<T>, cstar: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(Error::param("x", "must be positive"));
    }
    Ok(tradeoff(x, alpha.get(), cstar))
}

#[inline]
fn tradeoff<T: Real>(x: T, a: T, cstar: T) -> T {
    x + (T::one() + a) * cstar / x.powf(a)
}

/// Minimizer `alpha a_alpha / (1 + alpha)` of `f`.
pub fn argmin_f<T: Real>(alpha: StabilityIndex<T>, cstar: T) -> T {
    let a = alpha.get();
    a * a_alpha(alpha, cstar) / (T::one() + a)
}

/// Larger root of `f(x) = a`, for `a > a_alpha`.
pub fn r_a<T: Real>(a: T, alpha: StabilityIndex<T>, cstar: T) -> Result<T> {
    check_cstar(cstar)?;
    let crit = a_alpha(alpha, cstar);
    if !(a > crit) {
        return Err(Error::BelowCritical { a: a.as_f64(), a_alpha: crit.as_f64() });
    }
    let lo = argmin_f(alpha, cstar);
    let al = alpha.get();
    let f_tol = T::lit(1e-12).max(T::epsilon() * a * T::lit(8.0));
    bisect(|x| tradeoff(x, al, cstar) - a, lo, a, T::zero(), f_tol)
}

/// Solution of the blow-down problem
/// `h'(t) = a/(1+alpha) t^{-alpha/(1+alpha)} - C_*/h(t)^alpha`, `h(0) = h0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeSolveResult<T> {
    pub a: T,
    pub alpha: StabilityIndex<T>,
    pub cstar: T,
    pub h0: T,
    pub t_grid: Vec<T>,
    pub h_values: Vec<T>,
    /// `int_0^t h^{-alpha}` on the grid.
    pub q_values: Vec<T>,
    pub t_max: T,
    /// `h_eps(0)` for the rescaled solution `h_eps(t) = eps^{-1/(1+alpha)} h(eps t)`
    /// with `eps = t_max`, so that `h_eps` vanishes at `t = 1`.
    pub k: T,
    /// `max |-a t^{1/(1+alpha)} + h(t) + C_* int_0^t h^{-alpha} - h0|` over the grid.
    pub conserved_residual: T,
    switch_s: T,
    s_nodes: Vec<T>,
    u_nodes: Vec<T>,
}

/// Solver settings for [`solve_h`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Integration gives up past `t_budget_scale / ((1 + alpha) C_*)`.
    pub t_budget_scale: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, t_budget_scale: 1e12 }
    }
}

fn ode_opts<T: Real>(o: &SolveOptions) -> OdeOptions {
    let eps = T::epsilon().as_f64();
    OdeOptions {
        rtol: o.rtol.max(eps * 64.0),
        atol: o.atol.max(eps * 16.0),
        h_init: 1e-6,
        h_max: f64::INFINITY,
        max_steps: 2_000_000,
    }
}

/// Right-hand side in `s = t^{1/(1+alpha)}`: state `(h, q)`.
fn rhs_s<T: Real>(a: T, al: T, kappa: T, s: T, y: &[T; 2]) -> [T; 2] {
    let h = y[0].max(T::min_positive_value());
    let r = (s / h).powf(al);
    [a - kappa * r, (T::one() + al) * r]
}

/// Right-hand side in `u = h_sw - h`: state `(s, q)`.
fn rhs_u<T: Real>(a: T, al: T, kappa: T, h_sw: T, u: T, y: &[T; 2]) -> [T; 2] {
    let h = (h_sw - u).max(T::zero());
    let ha = h.powf(al);
    let sa = y[0].powf(al);
    let den = kappa * sa - a * ha;
    [ha / den, (T::one() + al) * sa / den]
}

/// Integrates the blow-down problem to the time `t_max` where `h` hits 0.
///
/// With `s = t^{1/(1+alpha)}` the system reads `dh/ds = a - (1+alpha) C_* s^alpha / h^alpha`,
/// `dq/ds = (1+alpha) s^alpha / h^alpha`, which is regular at `s = 0`. Once
/// `h` is falling steeply the roles flip and `s`, `q` are integrated against
/// `h` down to exactly 0. The conserved quantity `-a s + h + C_* q` is linear
/// in the state, so the Runge-Kutta steps preserve it to rounding.
pub fn solve_h<T: Real>(
    a: T,
    alpha: StabilityIndex<T>,
    cstar: T,
    h0: T,
    opts: SolveOptions,
) -> Result<OdeSolveResult<T>> {
    check_cstar(cstar)?;
    if !(h0 > T::zero()) || !h0.is_finite() {
        return Err(Error::param("h0", "must be positive"));
    }
    if !(a >= T::zero()) || !a.is_finite() {
        return Err(Error::param("a", "must be non-negative"));
    }
    let al = alpha.get();
    let kappa = (T::one() + al) * cstar;
    let t_budget = T::lit(opts.t_budget_scale) / kappa;
    let s_budget = t_budget.powf(alpha.barrier_exponent());
    let steep = -(T::one() + a);
    let ode = ode_opts::<T>(&opts);

    let phase1 = dopri5(
        |s, y: &[T; 2]| rhs_s(a, al, kappa, s, y),
        T::zero(),
        [h0, T::zero()],
        s_budget,
        ode,
        |_, _, dy| if dy[0] < steep { Control::Stop } else { Control::Continue },
    )?;
    if !phase1.stopped {
        return Err(Error::NoBlowDown { t_budget: t_budget.as_f64() });
    }
    let (s_sw, [h_sw, q_sw]) = phase1.last();
    let phase2 = dopri5(
        |u, y: &[T; 2]| rhs_u(a, al, kappa, h_sw, u, y),
        T::zero(),
        [s_sw, q_sw],
        h_sw,
        ode,
        |_, _, _| Control::Continue,
    )?;
    let exponent = T::one() + al;
    let mut t_grid = Vec::with_capacity(phase1.xs.len() + phase2.xs.len());
    let mut h_values = Vec::with_capacity(t_grid.capacity());
    let mut q_values = Vec::with_capacity(t_grid.capacity());
    let mut residual = T::zero();
    let mut push = |s: T, h: T, q: T| {
        residual = residual.max((-a * s + h + cstar * q - h0).abs());
        t_grid.push(s.powf(exponent));
        h_values.push(h);
        q_values.push(q);
    };
    for (s, y) in phase1.xs.iter().zip(&phase1.ys) {
        push(*s, y[0], y[1]);
    }
    for (u, y) in phase2.xs.iter().zip(&phase2.ys).skip(1) {
        push(y[0], (h_sw - *u).max(T::zero()), y[1]);
    }
    let (_, [s_max, _]) = phase2.last();
    let t_max = s_max.powf(exponent);
    Ok(OdeSolveResult {
        a,
        alpha,
        cstar,
        h0,
        t_grid,
        h_values,
        q_values,
        t_max,
        k: h0 / s_max,
        conserved_residual: residual,
        switch_s: s_sw,
        s_nodes: phase1.xs,
        u_nodes: phase2.xs,
    })
}

impl<T: Real> OdeSolveResult<T> {
    /// `(h(t), int_0^t h^{-alpha})` at any `t` in `[0, t_max]`, by integrating
    /// from the nearest stored node.
    pub fn eval(&self, t: T) -> Result<(T, T)> {
        if !(t >= T::zero() && t <= self.t_max) {
            return Err(Error::param("t", "outside [0, t_max]"));
        }
        let al = self.alpha.get();
        let kappa = (T::one() + al) * self.cstar;
        let s = t.powf(self.alpha.barrier_exponent());
        let n1 = self.s_nodes.len();
        let opts = ode_opts::<T>(&SolveOptions::default());
        if s <= self.switch_s {
            let k = self.s_nodes.partition_point(|x| *x <= s).max(1) - 1;
            let (s0, h, q) = (self.s_nodes[k], self.h_values[k], self.q_values[k]);
            if s == s0 {
                return Ok((h, q));
            }
            let tr = dopri5(
                |x, y: &[T; 2]| rhs_s(self.a, al, kappa, x, y),
                s0,
                [h, q],
                s,
                opts,
                |_, _, _| Control::Continue,
            )?;
            let (_, y) = tr.last();
            return Ok((y[0], y[1]));
        }
        // Phase two is parameterized by u = h_sw - h; find u with s(u) = s.
        let h_sw = self.h_values[n1 - 1];
        let s_of = |k: usize| self.t_grid[n1 - 1 + k].powf(self.alpha.barrier_exponent());
        let m = self.u_nodes.len();
        let mut k = 0;
        while k + 1 < m && s_of(k + 1) <= s {
            k += 1;
        }
        let (u0, y0) = (self.u_nodes[k], [s_of(k), self.q_values[n1 - 1 + k]]);
        if k + 1 == m || y0[0] == s {
            return Ok((h_sw - u0, y0[1]));
        }
        let state_at = |u: T| -> Result<[T; 2]> {
            if u <= u0 {
                return Ok(y0);
            }
            let tr = dopri5(
                |x, y: &[T; 2]| rhs_u(self.a, al, kappa, h_sw, x, y),
                u0,
                y0,
                u,
                opts,
                |_, _, _| Control::Continue,
            )?;
            Ok(tr.last().1)
        };
        let (mut lo, mut hi) = (u0, self.u_nodes[k + 1]);
        for _ in 0..200 {
            let mid = (lo + hi) * T::lit(0.5);
            if mid <= lo || mid >= hi {
                break;
            }
            if state_at(mid)?[0] < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let y = state_at(lo)?;
        Ok(((h_sw - lo).max(T::zero()), y[1]))
    }

    /// The rescaled profile on `[0, 1]` that vanishes at 1.
    pub fn rescaled(&self) -> RescaledSolution<'_, T> {
        RescaledSolution { sol: self }
    }
}

/// `K = t_max^{-1/(1+alpha)}` for `h(0) = 1`; requires `0 <= a < a_alpha`.
pub fn decay_k<T: Real>(a: T, alpha: StabilityIndex<T>, cstar: T) -> Result<T> {
    check_cstar(cstar)?;
    let crit = a_alpha(alpha, cstar);
    if !(a < crit) {
        return Err(Error::AboveCritical { a: a.as_f64(), a_alpha: crit.as_f64() });
    }
    Ok(solve_h(a, alpha, cstar, T::one(), SolveOptions::default())?.k)
}

/// A positive profile `h` on `[0, 1]` with its running integral of `h^{-alpha}`.
pub trait Profile<T: Real> {
    /// `(h(rho), int_0^rho h^{-alpha})`.
    fn eval(&self, rho: T) -> Result<(T, T)>;
}

/// `h` constant on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantProfile<T> {
    pub h: T,
    pub alpha: T,
}

impl<T: Real> Profile<T> for ConstantProfile<T> {
    fn eval(&self, rho: T) -> Result<(T, T)> {
        Ok((self.h, rho / self.h.powf(self.alpha)))
    }
}

/// Any positive function, with the integral done by quadrature.
pub struct FnProfile<T, F> {
    pub h: F,
    pub alpha: T,
}

impl<T: Real, F: Fn(T) -> T> Profile<T> for FnProfile<T, F> {
    fn eval(&self, rho: T) -> Result<(T, T)> {
        let q = if rho > T::zero() {
            integrate(|t| (self.h)(t).powf(-self.alpha), T::zero(), rho, QuadOptions::tol(1e-13, 1e-12))?.value
        } else {
            T::zero()
        };
        Ok(((self.h)(rho), q))
    }
}

/// `h_eps(rho) = t_max^{-1/(1+alpha)} h(t_max rho)`.
pub struct RescaledSolution<'a, T> {
    sol: &'a OdeSolveResult<T>,
}

impl<T: Real> Profile<T> for RescaledSolution<'_, T> {
    fn eval(&self, rho: T) -> Result<(T, T)> {
        let scale = self.sol.t_max.powf(-self.sol.alpha.barrier_exponent());
        let (h, q) = self.sol.eval((rho * self.sol.t_max).min(self.sol.t_max))?;
        Ok((scale * h, scale * q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KPair<T> {
    /// `-a + C_* int_0^1 h^{-alpha}`.
    pub k1: T,
    /// `min_rho {-a rho^{1/(1+alpha)} + h(rho) + C_* int_0^rho h^{-alpha}}`.
    pub k2: T,
    pub rho_min: T,
}

impl<T: Real> KPair<T> {
    pub fn k(&self) -> T {
        self.k1.min(self.k2)
    }
}

/// `K_1` and `K_2` of a profile. `K_2` is minimized over a 1001-point grid and
/// refined by golden section around the best grid point; ties go to the
/// smaller `rho`.
pub fn k1_k2<T: Real, P: Profile<T>>(profile: &P, a: T, alpha: StabilityIndex<T>, cstar: T) -> Result<KPair<T>> {
    let be = alpha.barrier_exponent();
    let objective = |rho: T| -> Result<T> {
        let (h, q) = profile.eval(rho)?;
        if rho < T::one() && !(h > T::zero()) {
            return Err(Error::ProfileVanishes(rho.as_f64()));
        }
        Ok(-a * rho.powf(be) + h + cstar * q)
    };
    let (_, q1) = profile.eval(T::one())?;
    let k1 = -a + cstar * q1;
    let n = 1000usize;
    let mut best = (T::zero(), objective(T::zero())?);
    let mut vals = Vec::with_capacity(n + 1);
    vals.push(best.1);
    for i in 1..=n {
        let rho = T::count(i) / T::count(n);
        let v = objective(rho)?;
        vals.push(v);
        if v < best.1 {
            best = (rho, v);
        }
    }
    let i = (best.0 * T::count(n)).round().as_f64() as usize;
    let lo = T::count(i.saturating_sub(1)) / T::count(n);
    let hi = T::count((i + 1).min(n)) / T::count(n);
    let (rho_g, v_g) = golden_min(|r| objective(r).unwrap_or(T::infinity()), lo, hi, T::lit(1e-10).max(T::epsilon()));
    if v_g < best.1 {
        best = (rho_g, v_g);
    }
    Ok(KPair { k1, k2: best.1, rho_min: best.0 })
}

/// The corridor functions of the lower-bound construction:
/// `f(t) = (t + 1/(e^lambda - 1))^{1/(1+alpha)}`, `g2 = a (f - f(0))`,
/// `g = b f`, `g1 = g2 - g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorridorFunctions<T> {
    pub alpha: StabilityIndex<T>,
    pub cstar: T,
    pub a: T,
    pub b: T,
    pub lambda: T,
    theta: T,
}

impl<T: Real> CorridorFunctions<T> {
    /// `e^lambda` must be an integer (within rounding).
    pub fn new(alpha: StabilityIndex<T>, cstar: T, a: T, b: T, lambda: T) -> Result<Self> {
        check_cstar(cstar)?;
        if !(b > T::zero() && b < a) {
            return Err(Error::param("b", "must lie in (0, a)"));
        }
        let base = lambda.exp();
        if !(lambda > T::zero()) || (base - base.round()).abs() > T::lit(1e-6) * base.max(T::one()) {
            return Err(Error::param("lambda", "e^lambda must be an integer >= 2"));
        }
        Ok(Self { alpha, cstar, a, b, lambda, theta: (base - T::one()).recip() })
    }

    /// `lambda = ln(base)`.
    pub fn with_base(alpha: StabilityIndex<T>, cstar: T, a: T, b: T, base: u64) -> Result<Self> {
        if base < 2 {
            return Err(Error::param("base", "must be at least 2"));
        }
        let mut c = Self::new(alpha, cstar, a, b, T::count(base as usize).ln())?;
        c.theta = T::count(base as usize - 1).recip();
        Ok(c)
    }

    pub fn f(&self, t: T) -> T {
        (t + self.theta).powf(self.alpha.barrier_exponent())
    }
    pub fn g2(&self, t: T) -> T {
        self.a * (self.f(t) - self.f(T::zero()))
    }
    pub fn g(&self, t: T) -> T {
        self.b * self.f(t)
    }
    pub fn g1(&self, t: T) -> T {
        self.g2(t) - self.g(t)
    }

    fn kappa_b(&self) -> T {
        (T::one() + self.alpha.get()) * self.cstar / self.b.powf(self.alpha.get())
    }

    /// `G_lambda(rho)` in the reduced form
    /// `(b + kb - a) f(rho) + e^{-lambda/(1+alpha)} (a - kb) f(0)`, `kb = (1+alpha) C_* / b^alpha`.
    pub fn g_lambda(&self, rho: T) -> T {
        let kb = self.kappa_b();
        let damp = (-self.lambda * self.alpha.barrier_exponent()).exp();
        (self.b + kb - self.a) * self.f(rho) + damp * (self.a - kb) * self.f(T::zero())
    }

    /// `G_lambda(rho)` from its defining expression with the integrals of
    /// `g^{-alpha}` done by quadrature.
    pub fn g_lambda_quadrature(&self, rho: T) -> Result<T> {
        let damp = (-self.lambda * self.alpha.barrier_exponent()).exp();
        let i_rho = self.int_g(rho)?;
        let i_one = self.int_g(T::one())?;
        Ok(-self.g2(rho) + self.g(rho) + self.cstar * i_rho + damp * (-self.g2(T::one()) + self.cstar * i_one))
    }

    /// `g2(1) - C_* int_0^1 g^{-alpha}` by quadrature.
    pub fn endpoint_margin(&self) -> Result<T> {
        Ok(self.g2(T::one()) - self.cstar * self.int_g(T::one())?)
    }

    /// Closed form `(f(1) - f(0)) (a - (1+alpha) C_* / b^alpha)` of the margin.
    pub fn endpoint_margin_closed(&self) -> T {
        (self.f(T::one()) - self.f(T::zero())) * (self.a - self.kappa_b())
    }

    fn int_g(&self, rho: T) -> Result<T> {
        if rho <= T::zero() {
            return Ok(T::zero());
        }
        let al = self.alpha.get();
        let opts = QuadOptions::tol(1e-15, 1e-13);
        // The integrand varies on the scale theta near 0.
        let mut pieces = Vec::new();
        let mut lo = T::zero();
        let mut hi = self.theta.min(rho);
        loop {
            pieces.push(integrate(|t| self.g(t).powf(-al), lo, hi, opts)?.value.as_f64());
            if hi >= rho {
                break;
            }
            lo = hi;
            hi = (hi * T::lit(4.0)).min(rho);
        }
        Ok(T::lit(crate::stats::neumaier_sum(pieces)))
    }

    /// Maximum of `G_lambda` over an `n`-point grid, with its location.
    pub fn max_on_grid(&self, n: usize) -> (T, T) {
        (0..=n)
            .map(|i| T::count(i) / T::count(n))
            .map(|r| (r, self.g_lambda(r)))
            .fold((T::zero(), T::neg_infinity()), |best, cur| if cur.1 > best.1 { cur } else { best })
    }
}
