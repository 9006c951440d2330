//! One-dimensional spine step laws.
//!
//! [`SpineLaw`] is the heavy-tailed, mean-zero law of a single spine step:
//! an exact Pareto right tail `P(X > y) = c y^{-alpha}` for `y >= y0`, glued
//! to an exponential left part on `(-inf, y0)`. Both the total mass and the
//! mean solve in closed form, so the law is calibrated exactly.
//!
//! [`StepLaw`] abstracts over step distributions so the walk and tube
//! machinery also runs on Gaussian and lattice test laws.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KvBlock;
use crate::numerics::{integrate, integrate_from_neg_infinity, QuadOptions};
use crate::scalar::Real;

/// Stability index `alpha` in `(1, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct StabilityIndex<T>(T);

impl<T: Real> StabilityIndex<T> {
    pub fn new(alpha: T) -> Result<Self> {
        if alpha > T::one() && alpha <= T::lit(2.0) {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha.as_f64()))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    /// Barrier exponent `1 / (1 + alpha)`.
    #[inline]
    pub fn barrier_exponent(self) -> T {
        (T::one() + self.0).recip()
    }

    pub fn is_gaussian(self) -> bool {
        self.0 == T::lit(2.0)
    }
}

/// A distribution of i.i.d. walk increments.
pub trait StepLaw<T: Real>: Send + Sync {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T;

    /// Step together with a brood-size mark. Plain laws carry mark 1.
    fn sample_marked<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, u64) {
        (self.sample(rng), 1)
    }

    fn cdf(&self, x: T) -> T;
}

/// Exact-Pareto-tail / exponential-left spine law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpineLaw<T> {
    alpha: StabilityIndex<T>,
    tail_const: T,
    tail_threshold: T,
    left_rate: T,
    left_weight: T,
}

impl<T: Real> SpineLaw<T> {
    /// Calibrates the law from `(alpha, c, y0)`.
    ///
    /// The left part has density `w lambda e^{lambda (x - y0)}` on `(-inf, y0)`
    /// with `w = 1 - c y0^{-alpha}` and
    /// `lambda = w / (w y0 + c alpha y0^{1-alpha} / (alpha - 1))`.
    pub fn pareto(alpha: StabilityIndex<T>, tail_const: T, tail_threshold: T) -> Result<Self> {
        let a = alpha.get();
        if !(tail_const > T::zero()) || !tail_const.is_finite() {
            return Err(Error::param("tail_const", "must be positive and finite"));
        }
        if !(tail_threshold > T::zero()) || !tail_threshold.is_finite() {
            return Err(Error::param("tail_threshold", "must be positive and finite"));
        }
        let tail_mass = tail_const * tail_threshold.powf(-a);
        if tail_mass >= T::one() {
            return Err(Error::TailMassTooLarge(tail_mass.as_f64()));
        }
        let w = T::one() - tail_mass;
        let pareto_mean = tail_const * a * tail_threshold.powf(T::one() - a) / (a - T::one());
        let left_rate = w / (w * tail_threshold + pareto_mean);
        if !(left_rate > T::zero()) || !left_rate.is_finite() {
            return Err(Error::param("left_rate", format!("calibration produced {}", left_rate.as_f64())));
        }
        Ok(Self { alpha, tail_const, tail_threshold, left_rate, left_weight: w })
    }

    pub fn alpha(&self) -> StabilityIndex<T> {
        self.alpha
    }
    pub fn tail_const(&self) -> T {
        self.tail_const
    }
    pub fn tail_threshold(&self) -> T {
        self.tail_threshold
    }
    pub fn left_rate(&self) -> T {
        self.left_rate
    }
    pub fn left_weight(&self) -> T {
        self.left_weight
    }

    /// Exact `P(X > y)`.
    pub fn step_tail(&self, y: T) -> T {
        if y >= self.tail_threshold {
            self.tail_const * y.powf(-self.alpha.get())
        } else {
            T::one() - self.left_weight * (self.left_rate * (y - self.tail_threshold)).exp()
        }
    }

    pub fn density(&self, x: T) -> T {
        let a = self.alpha.get();
        if x >= self.tail_threshold {
            self.tail_const * a * x.powf(-a - T::one())
        } else {
            self.left_weight * self.left_rate * (self.left_rate * (x - self.tail_threshold)).exp()
        }
    }

    /// Inverse CDF on `(0, 1)`.
    pub fn quantile(&self, u: T) -> T {
        if u < self.left_weight {
            self.tail_threshold + (u / self.left_weight).ln() / self.left_rate
        } else {
            (self.tail_const / (T::one() - u)).powf(self.alpha.get().recip())
        }
    }

    /// Closed-form mean; zero up to rounding by construction.
    pub fn mean(&self) -> T {
        let a = self.alpha.get();
        let y0 = self.tail_threshold;
        self.left_weight * (y0 - self.left_rate.recip()) + self.tail_const * a * y0.powf(T::one() - a) / (a - T::one())
    }

    /// `int g(x) nu(dx)` by adaptive quadrature, split at `y0`. The Pareto
    /// half-line uses `x = y0 s^{-q}` with `q = 2 / (alpha - 1)`, which keeps
    /// integrands growing at most linearly smooth at `s = 0`.
    pub fn integrate_against(&self, g: impl Fn(T) -> T, opts: QuadOptions) -> Result<T> {
        let y0 = self.tail_threshold;
        let left = integrate_from_neg_infinity(|x| g(x) * self.density(x), y0, opts)?;
        let a = self.alpha.get();
        let q = T::lit(2.0) / (a - T::one());
        let right = integrate(
            |s: T| {
                if s <= T::zero() {
                    return T::zero();
                }
                let x = y0 * s.powf(-q);
                let jac = q * y0 * s.powf(-q - T::one());
                let v = g(x) * self.density(x) * jac;
                if v.is_finite() {
                    v
                } else {
                    T::zero()
                }
            },
            T::zero(),
            T::one(),
            opts,
        )?;
        Ok(left.value + right.value)
    }

    /// Closed form of `E[e^{-rho X}]` for `0 < rho < left_rate`; the Pareto
    /// part is integrated numerically.
    pub fn exp_moment(&self, rho: T) -> Result<T> {
        if rho >= self.left_rate {
            return Err(Error::MomentDiverges { rho: rho.as_f64(), left_rate: self.left_rate.as_f64() });
        }
        if rho <= T::zero() {
            return Err(Error::param(
                "varrho",
                "must be positive (the Pareto tail has no positive exponential moment)",
            ));
        }
        let y0 = self.tail_threshold;
        let left = self.left_weight * self.left_rate * (-rho * y0).exp() / (self.left_rate - rho);
        let a = self.alpha.get();
        let right = crate::numerics::integrate_to_infinity(
            |x: T| (-rho * x).exp() * self.tail_const * a * x.powf(-a - T::one()),
            y0,
            QuadOptions::tol(1e-14, 1e-12),
        )?;
        Ok(left + right.value)
    }

    pub fn to_kv(&self) -> KvBlock {
        let mut kv = KvBlock::default();
        kv.set("alpha", self.alpha.get());
        kv.set("tail_const", self.tail_const);
        kv.set("tail_threshold", self.tail_threshold);
        kv
    }

    /// Reads `alpha`, `tail_const`, `tail_threshold` (aliases `c`, `y0`);
    /// derived fields are recomputed.
    pub fn from_kv(kv: &KvBlock) -> Result<Self> {
        let alpha = kv.require_f64("alpha")?;
        let c = kv.f64("tail_const")?.or(kv.f64("c")?).ok_or_else(|| Error::Config("missing `tail_const`".into()))?;
        let y0 = kv
            .f64("tail_threshold")?
            .or(kv.f64("y0")?)
            .ok_or_else(|| Error::Config("missing `tail_threshold`".into()))?;
        Self::pareto(StabilityIndex::new(T::lit(alpha))?, T::lit(c), T::lit(y0))
    }
}

impl<T: Real> StepLaw<T> for SpineLaw<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.sample(Open01);
        self.quantile(T::lit(u))
    }

    fn cdf(&self, x: T) -> T {
        T::one() - self.step_tail(x)
    }
}

/// Centered Gaussian steps with standard deviation `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianStep<T> {
    pub sigma: T,
}

impl<T: Real> StepLaw<T> for GaussianStep<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let z: f64 = rng.sample(StandardNormal);
        self.sigma * T::lit(z)
    }

    fn cdf(&self, x: T) -> T {
        T::lit(normal_cdf(x.as_f64() / self.sigma.as_f64()))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Integer-valued steps with a finite pmf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeStep {
    /// Smallest support point.
    pub offset: i64,
    /// `probs[k]` is `P(X = offset + k)`.
    pub probs: Vec<f64>,
}

impl LatticeStep {
    pub fn new(offset: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::param("lattice pmf", "probabilities must be non-negative and non-empty"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("lattice pmf", format!("mass {total} != 1")));
        }
        Ok(Self { offset, probs })
    }

    /// Symmetric simple walk on `{-1, +1}`.
    pub fn plus_minus_one() -> Self {
        Self { offset: -1, probs: vec![0.5, 0.0, 0.5] }
    }

    pub fn sample_int<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (k, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return self.offset + k as i64;
            }
        }
        // Rounding left a sliver above the accumulated mass.
        let last = self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0);
        self.offset + last as i64
    }

    pub fn variance(&self) -> f64 {
        let mean: f64 = self.probs.iter().enumerate().map(|(k, p)| (self.offset + k as i64) as f64 * p).sum();
        self.probs.iter().enumerate().map(|(k, p)| ((self.offset + k as i64) as f64 - mean).powi(2) * p).sum()
    }
}

impl<T: Real> StepLaw<T> for LatticeStep {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::lit(self.sample_int(rng) as f64)
    }

    fn cdf(&self, x: T) -> T {
        let x = x.as_f64();
        let mass: f64 = self
            .probs
            .iter()
            .enumerate()
            .filter(|(k, _)| ((self.offset + *k as i64) as f64) <= x)
            .map(|(_, p)| p)
            .sum();
        T::lit(mass.min(1.0))
    }
}

/// A random-walk path `S_0 = 0, S_1, ..., S_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath<T> {
    pub positions: Vec<T>,
}

impl<T: Real> WalkPath<T> {
    pub fn len_steps(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn end(&self) -> T {
        *self.positions.last().expect("path always holds S_0")
    }
}

pub fn walk_path<T: Real, L: StepLaw<T>, R: Rng + ?Sized>(law: &L, n: usize, rng: &mut R) -> WalkPath<T> {
    let mut positions = Vec::with_capacity(n + 1);
    let mut s = T::zero();
    positions.push(s);
    for _ in 0..n {
        s = s + law.sample(rng);
        positions.push(s);
    }
    WalkPath { positions }
}

/// Boundary and tail diagnostics for a spine law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    /// `max |y^alpha P(X > y) - c|` over grid points at or beyond `y0`.
    pub tail_deviation: f64,
    /// Largest relative deviation over grid points below `y0` (pre-asymptotic).
    pub pre_threshold_deviation: Option<f64>,
    pub mass: f64,
    /// `|E X|` by quadrature.
    pub abs_mean: f64,
    pub varrho: f64,
    /// `E[e^{-varrho X}]` by quadrature.
    pub exp_moment: f64,
}

pub fn validate_boundary_tail<T: Real>(law: &SpineLaw<T>, probe_grid: &[T], varrho: T) -> Result<TailReport> {
    if varrho >= law.left_rate() {
        return Err(Error::MomentDiverges { rho: varrho.as_f64(), left_rate: law.left_rate().as_f64() });
    }
    let a = law.alpha().get();
    let c = law.tail_const();
    let mut tail_deviation = 0.0f64;
    let mut pre: Option<f64> = None;
    for &y in probe_grid {
        let dev = (y.powf(a) * law.step_tail(y) - c).abs().as_f64();
        if y >= law.tail_threshold() {
            tail_deviation = tail_deviation.max(dev);
        } else if y > T::zero() {
            let rel = dev / c.as_f64();
            pre = Some(pre.map_or(rel, |p| p.max(rel)));
        }
    }
    let opts = QuadOptions::tol(1e-13, 1e-12);
    let mass = law.integrate_against(|_| T::one(), opts)?;
    let mean = law.integrate_against(|x| x, opts)?;
    let moment = law.integrate_against(|x| (-varrho * x).exp(), opts)?;
    Ok(TailReport {
        tail_deviation,
        pre_threshold_deviation: pre,
        mass: mass.as_f64(),
        abs_mean: mean.abs().as_f64(),
        varrho: varrho.as_f64(),
        exp_moment: moment.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Streams;

    fn law(alpha: f64, c: f64, y0: f64) -> SpineLaw<f64> {
        SpineLaw::pareto(StabilityIndex::new(alpha).unwrap(), c, y0).unwrap()
    }

    #[test]
    fn calibration_values() {
        let l = law(1.5, 1.0, 2.0);
        assert!((l.left_weight() - 0.646_446_609_4).abs() < 1e-9);
        assert!((l.left_rate() - 0.189_339_828_2).abs() < 1e-9);
        assert!(l.mean().abs() < 1e-14);
        let g = law(2.0, 1.0, 10.0);
        assert!((g.left_weight() - 0.99).abs() < 1e-15);
    }

    #[test]
    fn rejects_heavy_tail_mass() {
        let e = SpineLaw::pareto(StabilityIndex::new(1.5).unwrap(), 4.0, 1.0).unwrap_err();
        assert_eq!(e, Error::TailMassTooLarge(4.0));
        assert!(StabilityIndex::new(0.8f64).is_err());
        assert!(StabilityIndex::new(1.0f64).is_err());
        assert!(StabilityIndex::new(2.0f64).is_ok());
    }

    #[test]
    fn tail_is_exact_beyond_threshold() {
        let l = law(1.5, 1.0, 2.0);
        assert!((l.step_tail(2.0) - 2f64.powf(-1.5)).abs() < 1e-15);
        assert_eq!(l.step_tail(4.0), 0.125);
        assert!((l.step_tail(-1e6) - 1.0).abs() < 1e-15);
        for y in [2.0f64, 3.7, 10.0, 1e3, 1e6] {
            assert!((y.powf(1.5) * l.step_tail(y) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_is_a_cdf_on_dense_grid() {
        let l = law(1.5, 1.0, 2.0);
        let mut prev = 0.0;
        for i in 0..=4000 {
            let x = -200.0 + i as f64 * 0.1;
            let f = StepLaw::<f64>::cdf(&l, x);
            assert!(f >= prev - 1e-15 && (0.0..=1.0).contains(&f));
            prev = f;
        }
        assert!(StepLaw::<f64>::cdf(&l, -1e4) < 1e-300);
        assert!(StepLaw::<f64>::cdf(&l, 1e12) > 1.0 - 1e-15);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let l = law(1.7, 0.5, 1.5);
        for u in [1e-9, 0.1, 0.5, l.left_weight(), 0.9, 0.999_999] {
            let x = l.quantile(u);
            assert!((StepLaw::<f64>::cdf(&l, x) - u).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn report_flags_moment_boundary() {
        let l = law(1.5, 1.0, 2.0);
        let r = validate_boundary_tail(&l, &[2.0, 4.0, 20.0], 0.05).unwrap();
        assert!(r.tail_deviation < 1e-14);
        assert!(r.abs_mean < 1e-8, "{}", r.abs_mean);
        assert!((r.mass - 1.0).abs() < 1e-10);
        assert!((r.exp_moment - l.exp_moment(0.05).unwrap()).abs() < 1e-9);
        let err = validate_boundary_tail(&l, &[2.0], l.left_rate()).unwrap_err();
        assert!(matches!(err, Error::MomentDiverges { .. }));
    }

    #[test]
    fn deterministic_given_stream() {
        let l = law(1.5, 1.0, 2.0);
        let s = Streams::new(9);
        let a = walk_path(&l, 50, &mut s.stream(0));
        let b = walk_path(&l, 50, &mut s.stream(0));
        assert_eq!(a, b);
        assert_eq!(walk_path(&l, 0, &mut s.stream(0)).positions, vec![0.0]);
    }

    #[test]
    fn kv_round_trip_recomputes_derived_fields() {
        let l = law(1.5, 1.0, 2.0);
        let text = l.to_kv().render();
        assert!(!text.contains("left"));
        let back = SpineLaw::<f64>::from_kv(&KvBlock::parse(&text).unwrap()).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn works_in_f32() {
        let l = SpineLaw::<f32>::pareto(StabilityIndex::new(1.5f32).unwrap(), 1.0, 2.0).unwrap();
        assert!((l.left_rate() - 0.189_34).abs() < 1e-5);
        assert!(l.mean().abs() < 1e-5);
    }
}
