//! The totally right-skewed strictly stable law and its confinement constant.
//!
//! The characteristic function is
//! `exp{-c0 |t|^alpha (1 - i sgn(t) tan(pi alpha / 2))}`. For `alpha = 2` the
//! law is centered normal with variance `2 c0`.

use num_complex::Complex;
use rand::distr::Open01;
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{integrate, perron_root, Dense, GaussLegendre, QuadOptions};
use crate::rng::{mix, stage, Streams};
use crate::scalar::Real;
use crate::spine_law::{normal_cdf, StabilityIndex, StepLaw};
use crate::stats::{linear_fit, mean_var};

/// Parameters of the strictly stable law `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSpec<T> {
    alpha: StabilityIndex<T>,
    c0: T,
    sigma: Option<T>,
}

impl<T: Real> StableSpec<T> {
    pub fn new(alpha: StabilityIndex<T>, c0: T) -> Result<Self> {
        if !(c0 > T::zero()) || !c0.is_finite() {
            return Err(Error::param("c0", "must be positive and finite"));
        }
        let sigma = alpha.is_gaussian().then(|| (T::lit(2.0) * c0).sqrt());
        Ok(Self { alpha, c0, sigma })
    }

    /// Brownian case with variance `sigma^2` per unit time.
    pub fn gaussian(sigma: T) -> Result<Self> {
        if !(sigma > T::zero()) || !sigma.is_finite() {
            return Err(Error::param("sigma", "must be positive and finite"));
        }
        Ok(Self { alpha: StabilityIndex::new(T::lit(2.0))?, c0: sigma * sigma / T::lit(2.0), sigma: Some(sigma) })
    }

    pub fn alpha(&self) -> StabilityIndex<T> {
        self.alpha
    }
    pub fn c0(&self) -> T {
        self.c0
    }
    pub fn sigma(&self) -> Option<T> {
        self.sigma
    }

    /// `tan(pi alpha / 2)`, exactly zero in the Gaussian case.
    pub fn skew_tan(&self) -> T {
        skew_tan(self.alpha)
    }
}

fn skew_tan<T: Real>(alpha: StabilityIndex<T>) -> T {
    if alpha.is_gaussian() {
        T::zero()
    } else {
        (T::FRAC_PI_2() * alpha.get()).tan()
    }
}

pub fn stable_cf<T: Real>(spec: &StableSpec<T>, t: T) -> Complex<T> {
    if t == T::zero() {
        return Complex::new(T::one(), T::zero());
    }
    let m = spec.c0 * t.abs().powf(spec.alpha.get());
    let phase = m * t.signum() * spec.skew_tan();
    Complex::from_polar((-m).exp(), phase)
}

/// One draw of `Y`. Uses the Chambers-Mallows-Stuck transform with
/// skewness 1 for `alpha < 2` and a normal draw for `alpha = 2`.
pub fn sample_stable<T: Real, R: Rng + ?Sized>(spec: &StableSpec<T>, rng: &mut R) -> T {
    let a = spec.alpha.get();
    if spec.alpha.is_gaussian() {
        let z: f64 = rng.sample(StandardNormal);
        return (T::lit(2.0) * spec.c0).sqrt() * T::lit(z);
    }
    let u: f64 = rng.sample(Open01);
    let e: f64 = rng.sample(Open01);
    let v = T::PI() * (T::lit(u) - T::lit(0.5));
    let w = -T::lit(e).ln();
    let tan = spec.skew_tan();
    let b = tan.atan() / a;
    let s = (T::one() + tan * tan).powf((T::lit(2.0) * a).recip());
    let x = s * (a * (v + b)).sin() / v.cos().powf(a.recip()) * ((v - a * (v + b)).cos() / w).powf((T::one() - a) / a);
    spec.c0.powf(a.recip()) * x
}

/// `Y` viewed as a step law, so the walk machinery accepts it.
impl<T: Real> StepLaw<T> for StableSpec<T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        sample_stable(self, rng)
    }

    fn cdf(&self, x: T) -> T {
        T::lit(stable_cdf(self, x.as_f64()))
    }
}

/// CDF of `Y`. Gaussian closed form for `alpha = 2`, Gil-Pelaez inversion
/// otherwise.
pub fn stable_cdf<T: Real>(spec: &StableSpec<T>, x: f64) -> f64 {
    let a = spec.alpha.get().as_f64();
    let c0 = spec.c0.as_f64();
    if spec.alpha.is_gaussian() {
        return normal_cdf(x / (2.0 * c0).sqrt());
    }
    let gl = GaussLegendre::<f64>::new(16);
    standard_stable_cdf(a, x * c0.powf(-1.0 / a), &gl)
}

/// Gil-Pelaez for `c0 = 1`:
/// `F(z) = 1/2 - (1/pi) int_0^inf e^{-t^a} sin(t^a tan - t z) / t dt`.
fn standard_stable_cdf(a: f64, z: f64, gl: &GaussLegendre<f64>) -> f64 {
    let tan = (std::f64::consts::FRAC_PI_2 * a).tan();
    let f = |t: f64| {
        if t <= 0.0 {
            return tan * 0.0 - z;
        }
        let ta = t.powf(a);
        (-ta).exp() * (ta * tan - t * z).sin() / t
    };
    let t_max = 42f64.powf(1.0 / a);
    // Panels short enough to resolve both the oscillation and the cusp at 0.
    let width = (1.0f64).min(std::f64::consts::PI / z.abs().max(1e-300)).min(t_max);
    let mut total = 0.0;
    let mut hi = width;
    for _ in 0..48 {
        let lo = hi * 0.5;
        total += gl.integrate(f, lo, hi);
        hi = lo;
    }
    total += hi * f(hi);
    let n_panels = ((t_max - width) / width).ceil().max(0.0) as usize;
    for k in 0..n_panels {
        let lo = width + k as f64 * width;
        total += gl.integrate(f, lo, (lo + width).min(t_max));
    }
    (0.5 - total / std::f64::consts::PI).clamp(0.0, 1.0)
}

/// `int_0^inf (e^{itx} - 1 - itx) c alpha x^{-alpha-1} dx` for `alpha` in `(1, 2)`.
///
/// The piece near zero is a Taylor series, the middle is adaptive quadrature
/// period by period, and the far tail is integrated by parts.
pub fn levy_exponent_from_tail<T: Real>(alpha: StabilityIndex<T>, tail_const: T, t: T) -> Result<Complex<T>> {
    if alpha.is_gaussian() {
        return Err(Error::param("alpha", "the tail map needs alpha < 2"));
    }
    if t == T::zero() {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let a = alpha.get();
    let tau = t.abs();
    let two = T::lit(2.0);

    let eps = T::lit(0.5) / tau;
    let mut near = Complex::new(T::zero(), T::zero());
    let mut it_pow = Complex::new(T::one(), T::zero());
    let mut fact = T::one();
    for k in 1..=40usize {
        it_pow = it_pow * Complex::new(T::zero(), tau);
        fact = fact * T::count(k);
        if k >= 2 {
            let kk = T::count(k);
            near = near + it_pow * (eps.powf(kk - a) / (fact * (kk - a)));
        }
    }

    let far_point = T::lit(400.0) / tau;
    let period = two * T::PI() / tau;
    let opts = QuadOptions::tol(0.0, 1e-13);
    let mut re = Vec::new();
    let mut im = Vec::new();
    let mut lo = eps;
    while lo < far_point {
        let hi = (lo + period).min(far_point);
        re.push(integrate(|x: T| ((tau * x).cos() - T::one()) * x.powf(-a - T::one()), lo, hi, opts)?.value.as_f64());
        im.push(integrate(|x: T| ((tau * x).sin() - tau * x) * x.powf(-a - T::one()), lo, hi, opts)?.value.as_f64());
        lo = hi;
    }
    let middle = Complex::new(T::lit(crate::stats::neumaier_sum(re)), T::lit(crate::stats::neumaier_sum(im)));

    // int_X^inf e^{i tau x} x^{-p} dx by repeated integration by parts.
    let x = far_point;
    let p = a + T::one();
    let i_tau = Complex::new(T::zero(), tau);
    let mut term = -Complex::from_polar(T::one(), tau * x) / i_tau * x.powf(-p);
    let mut osc = term;
    for k in 0..12usize {
        term = term * ((p + T::count(k)) / x) / i_tau;
        osc = osc + term;
    }
    let smooth = Complex::new(-x.powf(-a) / a, -tau * x.powf(T::one() - a) / (a - T::one()));
    let far = osc + smooth;

    let psi = (near + middle + far) * (tail_const * a);
    Ok(if t < T::zero() { psi.conj() } else { psi })
}

/// Result of matching the tail exponent to the stable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C0Fit {
    pub c0: f64,
    /// Largest relative spread of `-Re psi(t) / |t|^alpha` over the grid.
    pub scale_residual: f64,
    /// Largest relative deviation of `|Im psi / Re psi|` from `|tan(pi alpha / 2)|`.
    pub skew_residual: f64,
}

/// Stable scale `c0` induced by a Pareto tail constant, fitted over `t_grid`.
pub fn extract_c0<T: Real>(alpha: StabilityIndex<T>, tail_const: T, t_grid: &[T], tol: f64) -> Result<C0Fit> {
    if t_grid.is_empty() {
        return Err(Error::param("t_grid", "empty"));
    }
    let a = alpha.get();
    let tan = skew_tan(alpha).abs().as_f64();
    let mut ratios = Vec::with_capacity(t_grid.len());
    let mut skew_residual = 0.0f64;
    for &t in t_grid {
        let psi = levy_exponent_from_tail(alpha, tail_const, t)?;
        ratios.push((-psi.re / t.abs().powf(a)).as_f64());
        skew_residual = skew_residual.max(((psi.im / psi.re).abs().as_f64() - tan).abs() / tan);
    }
    let (c0, _) = mean_var(&ratios);
    let scale_residual = ratios.iter().map(|r| (r - c0).abs() / c0).fold(0.0, f64::max);
    let residual = scale_residual.max(skew_residual);
    if residual > tol || !(c0 > 0.0) {
        return Err(Error::FitInconsistent { residual, tolerance: tol });
    }
    Ok(C0Fit { c0, scale_residual, skew_residual })
}

/// A discretized path of `Y` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StablePath<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub spec: StableSpec<T>,
}

pub fn stable_path<T: Real, R: Rng + ?Sized>(
    spec: &StableSpec<T>,
    horizon: T,
    n_steps: usize,
    rng: &mut R,
) -> Result<StablePath<T>> {
    if n_steps == 0 {
        return Err(Error::param("n_steps", "must be at least 1"));
    }
    if !(horizon > T::zero()) {
        return Err(Error::param("horizon", "must be positive"));
    }
    let dt = horizon / T::count(n_steps);
    let scale = dt.powf(spec.alpha.get().recip());
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut y = T::zero();
    times.push(T::zero());
    values.push(y);
    for k in 1..=n_steps {
        y = y + scale * sample_stable(spec, rng);
        times.push(T::count(k) * dt);
        values.push(y);
    }
    Ok(StablePath { times, values, spec: *spec })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CstarMethod {
    McResampling,
    Spectral,
    ClosedForm,
    /// Supplied by the caller.
    Configured,
}

/// An estimate of the confinement constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CstarEstimate {
    pub alpha: f64,
    pub c0: f64,
    pub method: CstarMethod,
    pub value: f64,
    pub std_error: f64,
    pub dt: Option<f64>,
    pub n_bins: Option<usize>,
    pub particles: Option<usize>,
    /// Unextrapolated rate at `dt`, for the spectral method.
    pub raw: Option<f64>,
}

impl CstarEstimate {
    pub fn to_record(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain struct serializes")
    }
}

/// Exact value for the Brownian case: `pi^2 sigma^2 / 2` on a unit-width interval.
pub fn cstar_closed_form<T: Real>(spec: &StableSpec<T>) -> Result<CstarEstimate> {
    let sigma = spec.sigma.ok_or_else(|| Error::param("alpha", "closed form exists only for alpha = 2"))?.as_f64();
    Ok(CstarEstimate {
        alpha: 2.0,
        c0: spec.c0.as_f64(),
        method: CstarMethod::ClosedForm,
        value: std::f64::consts::PI.powi(2) * sigma * sigma / 2.0,
        std_error: 0.0,
        dt: None,
        n_bins: None,
        particles: None,
        raw: None,
    })
}

/// Settings for the resampling estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CstarMcConfig {
    pub dt: f64,
    pub t_end: f64,
    pub n_particles: usize,
    /// The ensemble is killed outside `[-half_width, half_width]`.
    pub half_width: f64,
    /// For `alpha = 2`, also kill with the Brownian-bridge crossing
    /// probability between grid times.
    pub bridge: bool,
}

impl Default for CstarMcConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 4.0, n_particles: 10_000, half_width: 0.5, bridge: true }
    }
}

const CHUNK: usize = 2048;

/// Killed-and-resampled particle ensemble. The value is the least-squares
/// slope of `-log survival` over the second half of the run; the standard
/// error is a block bootstrap of the per-step log-survival increments.
///
/// The ensemble runs at `c0 = 1` and the result is multiplied by `c0`
/// (`C_*` is linear in `c0` by self-similarity), so `dt` and `t_end` are in
/// the time of the unit-scale process.
pub fn estimate_cstar_mc<T: Real>(
    spec: &StableSpec<T>,
    cfg: &CstarMcConfig,
    streams: &Streams,
) -> Result<CstarEstimate> {
    let (unit, c0) = unit_scale(spec)?;
    let mut e = cstar_mc_unit(&unit, cfg, streams)?;
    e.c0 = c0;
    e.value *= c0;
    e.std_error *= c0;
    Ok(e)
}

/// The same limit law with `c0 = 1`, and the original `c0`.
pub fn unit_scale<T: Real>(spec: &StableSpec<T>) -> Result<(StableSpec<T>, f64)> {
    let unit = if spec.alpha.is_gaussian() {
        StableSpec::gaussian(T::lit(2.0).sqrt())?
    } else {
        StableSpec::new(spec.alpha, T::one())?
    };
    Ok((unit, spec.c0.as_f64()))
}

fn cstar_mc_unit<T: Real>(spec: &StableSpec<T>, cfg: &CstarMcConfig, streams: &Streams) -> Result<CstarEstimate> {
    if cfg.n_particles < 2 || !(cfg.dt > 0.0) || !(cfg.t_end > cfg.dt) || !(cfg.half_width > 0.0) {
        return Err(Error::param("cstar mc config", format!("{cfg:?}")));
    }
    let streams = streams.stage(stage::CSTAR_MC);
    let resample_streams = streams.stage(stage::RESAMPLE);
    let n = cfg.n_particles;
    let n_steps = (cfg.t_end / cfg.dt).round() as usize;
    let dt = T::lit(cfg.dt);
    let hw = T::lit(cfg.half_width);
    let scale = dt.powf(spec.alpha.get().recip());
    let bridge_var = spec.alpha.is_gaussian().then(|| T::lit(2.0) * spec.c0 * dt).filter(|_| cfg.bridge);

    let mut pos = vec![T::zero(); n];
    let mut alive = vec![false; n];
    let mut increments = Vec::with_capacity(n_steps);
    let mut survivors: Vec<T> = Vec::with_capacity(n);
    for step in 0..n_steps as u64 {
        pos.par_chunks_mut(CHUNK).zip(alive.par_chunks_mut(CHUNK)).enumerate().for_each(|(chunk, (xs, ok))| {
            let mut rng = SmallRng::seed_from_u64(streams.seed(mix(step, chunk as u64)));
            for (x, ok) in xs.iter_mut().zip(ok.iter_mut()) {
                let x0 = *x;
                let x1 = x0 + scale * sample_stable(spec, &mut rng);
                *ok = x1.abs() <= hw;
                if *ok {
                    if let Some(v) = bridge_var {
                        let two = T::lit(2.0);
                        let up = (-two * (hw - x0) * (hw - x1) / v).exp();
                        let dn = (-two * (hw + x0) * (hw + x1) / v).exp();
                        let keep = (T::one() - up) * (T::one() - dn);
                        *ok = T::lit(rng.random::<f64>()) < keep;
                    }
                }
                *x = x1;
            }
        });
        survivors.clear();
        survivors.extend(pos.iter().zip(&alive).filter(|(_, ok)| **ok).map(|(x, _)| *x));
        let m = survivors.len();
        if m == 0 {
            return Err(Error::EnsembleExtinct { time: (step + 1) as f64 * cfg.dt });
        }
        increments.push(-((m as f64) / (n as f64)).ln());
        // Systematic resampling back to n particles.
        let u0: f64 = resample_streams.stream(step).random();
        for (j, x) in pos.iter_mut().enumerate() {
            let idx = (((j as f64 + u0) * m as f64 / n as f64) as usize).min(m - 1);
            *x = survivors[idx];
        }
    }

    let half = n_steps / 2;
    let mut cum = 0.0;
    let mut ts = Vec::with_capacity(n_steps - half);
    let mut ys = Vec::with_capacity(n_steps - half);
    for (k, inc) in increments.iter().enumerate() {
        cum += inc;
        if k >= half {
            ts.push((k + 1) as f64 * cfg.dt);
            ys.push(cum);
        }
    }
    let value = linear_fit(&ts, &ys).slope;
    let std_error = block_bootstrap_rate(&increments[half..], cfg.dt, &streams.stage(stage::BOOTSTRAP));
    Ok(CstarEstimate {
        alpha: spec.alpha.get().as_f64(),
        c0: spec.c0.as_f64(),
        method: CstarMethod::McResampling,
        value,
        std_error,
        dt: Some(cfg.dt),
        n_bins: None,
        particles: Some(n),
        raw: None,
    })
}

fn block_bootstrap_rate(increments: &[f64], dt: f64, streams: &Streams) -> f64 {
    let n_blocks = 40.min(increments.len()).max(1);
    let len = increments.len() / n_blocks;
    if len == 0 {
        return f64::NAN;
    }
    let blocks: Vec<f64> =
        (0..n_blocks).map(|b| increments[b * len..(b + 1) * len].iter().sum::<f64>() / (len as f64 * dt)).collect();
    let mut rng = streams.stream(0);
    let reps: Vec<f64> = (0..400)
        .map(|_| (0..n_blocks).map(|_| blocks[rng.random_range(0..n_blocks)]).sum::<f64>() / n_blocks as f64)
        .collect();
    mean_var(&reps).1.sqrt()
}

/// `-log rho(dt) / dt`, where `rho` is the Perron root of the killed one-step
/// kernel on `n_bins` equal cells of `[-half_width, half_width]`.
pub fn spectral_rate<T: Real>(spec: &StableSpec<T>, dt: f64, n_bins: usize, half_width: f64) -> Result<f64> {
    if n_bins == 0 || !(dt > 0.0) || !(half_width > 0.0) {
        return Err(Error::param("spectral grid", format!("n_bins = {n_bins}, dt = {dt}")));
    }
    let h = 2.0 * half_width / n_bins as f64;
    let a = spec.alpha.get().as_f64();
    let scale = dt.powf(1.0 / a);
    let nb = n_bins as i64;
    // Increment CDF at the cell edges (k + 1/2) h, k = -nb..nb-1.
    let edges: Vec<f64> = (-nb..nb).into_par_iter().map(|k| stable_cdf(spec, (k as f64 + 0.5) * h / scale)).collect();
    let lag = |d: i64| -> f64 {
        let hi = edges[(d + nb) as usize];
        let lo = if d + nb >= 1 { edges[(d + nb - 1) as usize] } else { 0.0 };
        (hi - lo).max(0.0)
    };
    if n_bins == 1 {
        let p = lag(0);
        return Ok(-p.ln() / dt);
    }
    let mut m = Dense::<f64>::zeros(n_bins);
    for i in 0..n_bins {
        for j in 0..n_bins {
            m.set(i, j, lag(j as i64 - i as i64));
        }
    }
    let squarings = (0.2 / dt).log2().ceil().max(0.0) as u32;
    let rho = perron_root(&m, squarings, 1e-15, 10_000)?;
    Ok(-rho.ln() / dt)
}

/// Raw rates for a sequence of grid sizes at fixed `dt`.
pub fn refinement_sequence<T: Real>(spec: &StableSpec<T>, dt: f64, bins: &[usize]) -> Result<Vec<f64>> {
    bins.iter().map(|&nb| spectral_rate(spec, dt, nb, 0.5)).collect()
}

/// Richardson combination of rates at `dt` and `dt / 4`, assuming the
/// leading error scales as `dt^{1/alpha}`.
pub fn richardson(alpha: f64, r_dt: f64, r_quarter: f64) -> f64 {
    let g = 4f64.powf(1.0 / alpha);
    (g * r_quarter - r_dt) / (g - 1.0)
}

/// Spectral estimate extrapolated in `dt`. The standard error adds the change
/// under halving `n_bins` to the change under shifting the `dt` pair by 4.
/// Like [`estimate_cstar_mc`], it works at `c0 = 1` and rescales.
pub fn estimate_cstar_spectral<T: Real>(spec: &StableSpec<T>, dt: f64, n_bins: usize) -> Result<CstarEstimate> {
    if n_bins < 4 {
        return Err(Error::param("n_bins", "extrapolation needs at least 4 cells"));
    }
    let (unit, c0) = unit_scale(spec)?;
    let mut e = cstar_spectral_unit(&unit, dt, n_bins)?;
    e.c0 = c0;
    e.value *= c0;
    e.std_error *= c0;
    e.raw = e.raw.map(|r| r * c0);
    Ok(e)
}

fn cstar_spectral_unit<T: Real>(spec: &StableSpec<T>, dt: f64, n_bins: usize) -> Result<CstarEstimate> {
    let a = spec.alpha.get().as_f64();
    let r = |dt: f64, nb: usize| spectral_rate(spec, dt, nb, 0.5);
    let (r4, r1, rq) = (r(4.0 * dt, n_bins)?, r(dt, n_bins)?, r(dt / 4.0, n_bins)?);
    let (h1, hq) = (r(dt, n_bins / 2)?, r(dt / 4.0, n_bins / 2)?);
    let value = richardson(a, r1, rq);
    let std_error = (value - richardson(a, h1, hq)).abs() + (value - richardson(a, r4, r1)).abs();
    Ok(CstarEstimate {
        alpha: a,
        c0: spec.c0.as_f64(),
        method: CstarMethod::Spectral,
        value,
        std_error,
        dt: Some(dt),
        n_bins: Some(n_bins),
        particles: None,
        raw: Some(r1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(alpha: f64, c0: f64) -> StableSpec<f64> {
        StableSpec::new(StabilityIndex::new(alpha).unwrap(), c0).unwrap()
    }

    #[test]
    fn cf_basics() {
        let s = spec(1.5, 1.0);
        assert_eq!(stable_cf(&s, 0.0), Complex::new(1.0, 0.0));
        let g = spec(2.0, 0.5);
        let v = stable_cf(&g, 1.0);
        assert!((v.re - (-0.5f64).exp()).abs() < 1e-15 && v.im == 0.0);
        for t in [-3.0f64, -0.2, 0.7, 5.0] {
            assert!((stable_cf(&s, -t) - stable_cf(&s, t).conj()).norm() < 1e-15);
            assert!((stable_cf(&s, t).norm() - (-t.abs().powf(1.5)).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_spec_and_closed_form() {
        let g = StableSpec::gaussian(1.0f64).unwrap();
        assert_eq!(g.c0(), 0.5);
        let c = cstar_closed_form(&g).unwrap();
        assert!((c.value - 4.934_802_200_544_679).abs() < 1e-12);
        assert!(cstar_closed_form(&spec(1.5, 1.0)).is_err());
    }

    #[test]
    fn cdf_matches_gaussian_and_is_monotone() {
        let s = spec(1.5, 1.0);
        let mut prev = 0.0;
        for i in 0..200 {
            let x = -6.0 + i as f64 * 0.1;
            let f = stable_cdf(&s, x);
            assert!(f >= prev - 1e-12, "x={x}");
            prev = f;
        }
        assert!(stable_cdf(&s, -8.0) < 1e-10);
        // Totally skewed tail: P(Y > y) y^alpha -> c0 (1 - alpha) / (Gamma(2 - alpha) cos(pi alpha / 2)).
        let y = 200.0f64;
        let tail = (1.0 - stable_cdf(&s, y)) * y.powf(1.5);
        let want = -0.5 / (statrs::function::gamma::gamma(0.5) * (0.75 * std::f64::consts::PI).cos());
        assert!((tail / want - 1.0).abs() < 0.02, "{tail} vs {want}");
    }

    #[test]
    fn exponent_matches_gamma_closed_form() {
        // Test-side oracle: c0 = c Gamma(1 - alpha) cos(pi alpha / 2).
        for alpha in [1.2, 1.5, 1.8] {
            let a = StabilityIndex::new(alpha).unwrap();
            let fit = extract_c0(a, 0.7, &[0.5, 1.0, 2.0, 4.0], 1e-8).unwrap();
            let want = 0.7 * statrs::function::gamma::gamma(1.0 - alpha) * (std::f64::consts::FRAC_PI_2 * alpha).cos();
            assert!((fit.c0 / want - 1.0).abs() < 1e-8, "alpha {alpha}: {} vs {want}", fit.c0);
            let psi = levy_exponent_from_tail(a, 0.7, 1.3).unwrap();
            assert!((levy_exponent_from_tail(a, 0.7, -1.3).unwrap() - psi.conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn spectral_single_cell_is_one_step_rate() {
        let g = StableSpec::gaussian(1.0f64).unwrap();
        let dt: f64 = 0.01;
        let p = normal_cdf(0.5 / dt.sqrt()) - normal_cdf(-0.5 / dt.sqrt());
        let r = spectral_rate(&g, dt, 1, 0.5).unwrap();
        assert!((r + p.ln() / dt).abs() < 1e-12);
    }

    #[test]
    fn path_starts_at_zero() {
        let s = spec(1.5, 1.0);
        let p = stable_path(&s, 2.0, 8, &mut Streams::new(1).stream(0)).unwrap();
        assert_eq!(p.values[0], 0.0);
        assert_eq!(p.times.len(), 9);
        assert!((p.times[8] - 2.0).abs() < 1e-15);
        assert!(stable_path(&s, 1.0, 0, &mut Streams::new(1).stream(0)).is_err());
    }

    #[test]
    fn record_uses_snake_case_method() {
        let g = StableSpec::gaussian(1.0f64).unwrap();
        let rec = cstar_closed_form(&g).unwrap().to_record();
        assert_eq!(rec["method"], "closed_form");
    }
}
