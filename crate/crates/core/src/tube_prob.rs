//! Tube (small-deviation) probabilities of random walks and their rate
//! functionals.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::KvBlock;
use crate::numerics::{integrate, QuadOptions};
use crate::rng::{mix, stage, Streams};
use crate::scalar::Real;
use crate::spine_law::{LatticeStep, SpineLaw, StabilityIndex, StepLaw};
use crate::stable_process::{extract_c0, stable_cdf, StableSpec};
use crate::stats::{ks_statistic, linear_fit, mean_var, neumaier_sum, Estimate};

/// Continuous piecewise-linear function on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear<T> {
    knots: Vec<(T, T)>,
}

impl<T: Real> PiecewiseLinear<T> {
    /// Breakpoints `(s, value)` with strictly increasing `s`, starting at 0
    /// and ending at 1.
    pub fn new(knots: Vec<(T, T)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::param("breakpoints", "need at least two"));
        }
        if knots[0].0 != T::zero() || knots[knots.len() - 1].0 != T::one() {
            return Err(Error::param("breakpoints", "must start at 0 and end at 1"));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) || knots.iter().any(|k| !k.1.is_finite()) {
            return Err(Error::param("breakpoints", "abscissae must increase and values be finite"));
        }
        Ok(Self { knots })
    }

    pub fn constant(v: T) -> Self {
        Self { knots: vec![(T::zero(), v), (T::one(), v)] }
    }

    pub fn linear(v0: T, v1: T) -> Self {
        Self { knots: vec![(T::zero(), v0), (T::one(), v1)] }
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    pub fn eval(&self, s: T) -> T {
        let k = &self.knots;
        if s <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|p| p.0 < s).min(k.len() - 1);
        let (s0, v0) = k[i - 1];
        let (s1, v1) = k[i];
        v0 + (v1 - v0) * (s - s0) / (s1 - s0)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self { knots: self.knots.iter().map(|&(s, v)| (s, v * factor)).collect() }
    }

    /// Parses `"s:v, s:v, ..."`.
    pub fn parse(text: &str) -> Result<Self> {
        let knots = text
            .split(',')
            .map(|pair| {
                let (s, v) = pair.split_once(':').ok_or_else(|| Error::Config(format!("breakpoint `{pair}`")))?;
                let p = |x: &str| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("number `{x}`")));
                Ok((T::lit(p(s)?), T::lit(p(v)?)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(knots)
    }

    pub fn render(&self) -> String {
        self.knots.iter().map(|(s, v)| format!("{s}:{v}")).collect::<Vec<_>>().join(", ")
    }

    fn breakpoints(&self) -> impl Iterator<Item = T> + '_ {
        self.knots.iter().map(|k| k.0)
    }
}

/// How the tube boundaries map to walk positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TubeScale<T> {
    /// `S_j / c_n` in `[f(j/n), g(j/n)]` with `c_n = n^exponent`.
    Scaled { exponent: T },
    /// `S_j` in `[f(j/n), g(j/n)]`.
    Unscaled,
}

/// Uniformly vanishing perturbation `f_n = f + n^{-rate} df`, same for `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation<T> {
    pub lower: PiecewiseLinear<T>,
    pub upper: PiecewiseLinear<T>,
    pub rate: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeSpec<T> {
    pub lower: PiecewiseLinear<T>,
    pub upper: PiecewiseLinear<T>,
    pub scale: TubeScale<T>,
    pub n: usize,
    pub perturbation: Option<Perturbation<T>>,
    /// Accept `f <= g` and `f(0) <= 0 <= g(0)` instead of strict inequalities.
    pub relaxed: bool,
}

impl<T: Real> TubeSpec<T> {
    pub fn new(lower: PiecewiseLinear<T>, upper: PiecewiseLinear<T>, scale: TubeScale<T>, n: usize) -> Result<Self> {
        let tube = Self { lower, upper, scale, n, perturbation: None, relaxed: false };
        tube.validate()?;
        Ok(tube)
    }

    /// Constant tube `[-width/2, width/2]` scaled by `c_n = n^{1/(1+alpha)}`.
    pub fn centered(width: T, alpha: StabilityIndex<T>, n: usize) -> Result<Self> {
        let h = width / T::lit(2.0);
        Self::new(
            PiecewiseLinear::constant(-h),
            PiecewiseLinear::constant(h),
            TubeScale::Scaled { exponent: alpha.barrier_exponent() },
            n,
        )
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn relaxed(mut self) -> Result<Self> {
        self.relaxed = true;
        self.validate()?;
        Ok(self)
    }

    pub fn with_perturbation(mut self, p: Perturbation<T>) -> Self {
        self.perturbation = Some(p);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::param("n", "must be at least 1"));
        }
        let (f0, g0) = (self.lower.eval(T::zero()), self.upper.eval(T::zero()));
        let min_width = self.min_width();
        let ok = if self.relaxed {
            f0 <= T::zero() && T::zero() <= g0 && min_width >= T::zero()
        } else {
            f0 < T::zero() && T::zero() < g0 && min_width > T::zero()
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param("tube", format!("f(0) = {f0}, g(0) = {g0}, min width = {min_width}")))
        }
    }

    /// `min (g - f)`, attained at a breakpoint of one of the two functions.
    pub fn min_width(&self) -> T {
        self.lower
            .breakpoints()
            .chain(self.upper.breakpoints())
            .map(|s| self.upper.eval(s) - self.lower.eval(s))
            .fold(T::infinity(), T::min)
    }

    /// `c_n` (1 in unscaled mode).
    pub fn c_n(&self) -> T {
        match self.scale {
            TubeScale::Scaled { exponent } => T::count(self.n).powf(exponent),
            TubeScale::Unscaled => T::one(),
        }
    }

    /// Walk-position bounds at step `j`.
    pub fn bounds(&self, j: usize) -> (T, T) {
        let s = T::count(j) / T::count(self.n);
        let (mut f, mut g) = (self.lower.eval(s), self.upper.eval(s));
        if let Some(p) = &self.perturbation {
            let eps = T::count(self.n).powf(-p.rate);
            f = f + eps * p.lower.eval(s);
            g = g + eps * p.upper.eval(s);
        }
        let c = self.c_n();
        (c * f, c * g)
    }

    /// Integer bounds `ceil(lower_j), floor(upper_j)` for lattice walks.
    pub fn integer_bounds(&self) -> (Vec<i64>, Vec<i64>) {
        (0..=self.n)
            .map(|j| {
                let (lo, hi) = self.bounds(j);
                (lo.ceil().as_f64() as i64, hi.floor().as_f64() as i64)
            })
            .unzip()
    }

    /// Reads `lower`, `upper` as breakpoint lists, plus `n`, optional
    /// `scale-exponent` (unscaled if absent) and `relaxed`.
    pub fn from_kv(kv: &KvBlock) -> Result<Self> {
        let lower = PiecewiseLinear::parse(kv.get("lower").ok_or_else(|| Error::Config("missing `lower`".into()))?)?;
        let upper = PiecewiseLinear::parse(kv.get("upper").ok_or_else(|| Error::Config("missing `upper`".into()))?)?;
        let n = kv.u64("n")?.ok_or_else(|| Error::Config("missing `n`".into()))? as usize;
        let scale = match kv.f64("scale-exponent")? {
            Some(e) => TubeScale::Scaled { exponent: T::lit(e) },
            None => TubeScale::Unscaled,
        };
        let tube = Self { lower, upper, scale, n, perturbation: None, relaxed: kv.get("relaxed") == Some("true") };
        tube.validate()?;
        Ok(tube)
    }
}

/// Shifted tube of the lower-bound construction: integrand
/// `(g - u* - f + v*)^{-alpha}` on `[beta*, gamma*]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftedTubeSpec<T> {
    pub base: TubeSpec<T>,
    pub beta_star: T,
    pub gamma_star: T,
    pub u_star: T,
    pub v_star: T,
}

impl<T: Real> ShiftedTubeSpec<T> {
    pub fn new(base: TubeSpec<T>, beta_star: T, gamma_star: T, u_star: T, v_star: T) -> Result<Self> {
        if !(T::zero() <= beta_star && beta_star < gamma_star && gamma_star <= T::one()) {
            return Err(Error::param("beta*, gamma*", "need 0 <= beta* < gamma* <= 1"));
        }
        let (f, g) = (base.lower.eval(beta_star), base.upper.eval(beta_star));
        if !(f <= u_star && u_star < v_star && v_star <= g) {
            return Err(Error::param("u*, v*", format!("need f(beta*) = {f} <= u* < v* <= g(beta*) = {g}")));
        }
        Ok(Self { base, beta_star, gamma_star, u_star, v_star })
    }
}

/// Truncation of the brood-size marks: `upsilon_j <= exp(n^{1/beta})` for all `j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationEvent {
    pub beta_trunc: f64,
    pub n: usize,
}

impl TruncationEvent {
    pub fn new<T: Real>(beta_trunc: f64, alpha: StabilityIndex<T>, n: usize) -> Result<Self> {
        if !(beta_trunc > 1.0 + alpha.get().as_f64()) {
            return Err(Error::param("beta_trunc", "must exceed 1 + alpha"));
        }
        Ok(Self { beta_trunc, n })
    }

    pub fn threshold(&self) -> f64 {
        (self.n as f64).powf(1.0 / self.beta_trunc).exp()
    }
}

/// A rate value, `+inf` with `divergent` set when the width vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateValue {
    pub value: f64,
    pub divergent: bool,
}

fn width_integral<T: Real>(width: impl Fn(T) -> T, breaks: &[T], alpha: T) -> Result<RateValue> {
    let mut pieces = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        if width(w[0]) <= T::zero() || width(w[1]) <= T::zero() {
            return Ok(RateValue { value: f64::INFINITY, divergent: true });
        }
        let q = integrate(|s| width(s).powf(-alpha), w[0], w[1], QuadOptions::tol(1e-14, 1e-12))?;
        pieces.push(q.value.as_f64());
    }
    Ok(RateValue { value: neumaier_sum(pieces), divergent: false })
}

fn merged_breaks<T: Real>(tube: &TubeSpec<T>, lo: T, hi: T) -> Vec<T> {
    let mut b: Vec<T> =
        tube.lower.breakpoints().chain(tube.upper.breakpoints()).filter(|s| *s > lo && *s < hi).collect();
    b.push(lo);
    b.push(hi);
    b.sort_by(|x, y| x.partial_cmp(y).expect("finite breakpoints"));
    b.dedup();
    b
}

/// `C_* int_0^1 (g - f)^{-alpha} ds`, the positive rate `J`.
pub fn rate_functional<T: Real>(tube: &TubeSpec<T>, alpha: StabilityIndex<T>, cstar: T) -> Result<RateValue> {
    let breaks = merged_breaks(tube, T::zero(), T::one());
    let r = width_integral(|s| tube.upper.eval(s) - tube.lower.eval(s), &breaks, alpha.get())?;
    Ok(RateValue { value: r.value * cstar.as_f64(), ..r })
}

/// `C_* int_{beta*}^{gamma*} (g - u* - f + v*)^{-alpha} ds`.
pub fn shifted_rate_functional<T: Real>(
    spec: &ShiftedTubeSpec<T>,
    alpha: StabilityIndex<T>,
    cstar: T,
) -> Result<RateValue> {
    let shift = spec.v_star - spec.u_star;
    let tube = &spec.base;
    let breaks = merged_breaks(tube, spec.beta_star, spec.gamma_star);
    let r = width_integral(|s| tube.upper.eval(s) - tube.lower.eval(s) + shift, &breaks, alpha.get())?;
    Ok(RateValue { value: r.value * cstar.as_f64(), ..r })
}

const TRIAL_BLOCK: u64 = 1024;

/// Plain Monte Carlo tube probability for a walk started at `start_z`.
///
/// Trial `i` always consumes the same random stream, so runs that differ
/// only in the tube are coupled path by path.
pub fn tube_prob_mc<T: Real, L: StepLaw<T>>(
    law: &L,
    tube: &TubeSpec<T>,
    start_z: T,
    trials: u64,
    streams: &Streams,
    trunc: Option<TruncationEvent>,
) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    let (lo0, hi0) = tube.bounds(0);
    if !(lo0 <= start_z && start_z <= hi0) {
        return Err(Error::param("start_z", "outside the tube at time 0"));
    }
    let streams = streams.stage(stage::TUBE);
    let mark_cap = trunc.map(|t| t.threshold());
    let hits: u64 = (0..trials.div_ceil(TRIAL_BLOCK))
        .into_par_iter()
        .map(|block| {
            let end = ((block + 1) * TRIAL_BLOCK).min(trials);
            (block * TRIAL_BLOCK..end).filter(|&i| stays_in_tube(law, tube, start_z, streams.seed(i), mark_cap)).count()
                as u64
        })
        .sum();
    Ok(Estimate::binomial(hits, trials))
}

fn stays_in_tube<T: Real, L: StepLaw<T>>(
    law: &L,
    tube: &TubeSpec<T>,
    start_z: T,
    seed: u64,
    mark_cap: Option<f64>,
) -> bool {
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut s = start_z;
    for j in 1..=tube.n {
        let (x, mark) = law.sample_marked(&mut rng);
        s = s + x;
        if mark_cap.is_some_and(|cap| mark as f64 > cap) {
            return false;
        }
        let (lo, hi) = tube.bounds(j);
        if !(lo <= s && s <= hi) {
            return false;
        }
    }
    true
}

/// Log tube probability from a resampled particle ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingEstimate {
    pub log_p: f64,
    pub std_error: f64,
    pub particles: usize,
    pub replicates: usize,
}

/// Fixed-effort splitting for tube probabilities too small for plain Monte
/// Carlo. Each replicate carries `particles` walkers, kills those leaving the
/// tube, records the surviving fraction and resamples back to full size; the
/// product of fractions estimates the probability. The reported value is the
/// mean over replicates of the log estimate.
pub fn tube_prob_splitting<T: Real, L: StepLaw<T>>(
    law: &L,
    tube: &TubeSpec<T>,
    start_z: T,
    particles: usize,
    replicates: usize,
    streams: &Streams,
) -> Result<SplittingEstimate> {
    if particles < 2 || replicates < 2 {
        return Err(Error::param("splitting", "need at least 2 particles and 2 replicates"));
    }
    let (lo0, hi0) = tube.bounds(0);
    if !(lo0 <= start_z && start_z <= hi0) {
        return Err(Error::param("start_z", "outside the tube at time 0"));
    }
    let streams = streams.stage(stage::TUBE).stage(stage::RESAMPLE);
    let logs = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = SmallRng::seed_from_u64(streams.seed(r));
            let mut pos = vec![start_z; particles];
            let mut live = Vec::with_capacity(particles);
            let mut log_p = 0.0;
            for j in 1..=tube.n {
                let (lo, hi) = tube.bounds(j);
                live.clear();
                for x in &pos {
                    let y = *x + law.sample(&mut rng);
                    if lo <= y && y <= hi {
                        live.push(y);
                    }
                }
                if live.is_empty() {
                    return Err(Error::EnsembleExtinct { time: j as f64 });
                }
                log_p += (live.len() as f64 / particles as f64).ln();
                let u0: f64 = rng.random();
                let m = live.len();
                for (i, x) in pos.iter_mut().enumerate() {
                    *x = live[(((i as f64 + u0) * m as f64 / particles as f64) as usize).min(m - 1)];
                }
            }
            Ok(log_p)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, var) = mean_var(&logs);
    Ok(SplittingEstimate { log_p: mean, std_error: (var / replicates as f64).sqrt(), particles, replicates })
}

/// Exact `P(lower_j <= S_j <= upper_j for all j <= n)` for a lattice walk
/// from 0, by forward convolution restricted to the tube.
pub fn tube_prob_dp(step: &LatticeStep, lower: &[i64], upper: &[i64]) -> Result<f64> {
    if lower.len() != upper.len() || lower.is_empty() {
        return Err(Error::Mismatch(format!("bound lengths {} and {}", lower.len(), upper.len())));
    }
    if let Some(j) = lower.iter().zip(upper).position(|(l, u)| l > u) {
        return Err(Error::Mismatch(format!("lower > upper at step {j}")));
    }
    if !(lower[0] <= 0 && 0 <= upper[0]) {
        return Ok(0.0);
    }
    // dist[k] = P(S_j = lower_j + k, tube respected so far).
    let mut dist = vec![0.0; (upper[0] - lower[0] + 1) as usize];
    dist[(-lower[0]) as usize] = 1.0;
    let support: Vec<(i64, f64)> =
        step.probs.iter().enumerate().filter(|(_, p)| **p > 0.0).map(|(k, p)| (step.offset + k as i64, *p)).collect();
    for j in 1..lower.len() {
        let (lo, hi) = (lower[j], upper[j]);
        let (plo, _) = (lower[j - 1], upper[j - 1]);
        let next: Vec<f64> = (lo..=hi)
            .map(|y| {
                neumaier_sum(support.iter().filter_map(|&(d, p)| {
                    let k = y - d - plo;
                    (k >= 0 && (k as usize) < dist.len()).then(|| dist[k as usize] * p)
                }))
            })
            .collect();
        dist = next;
    }
    Ok(neumaier_sum(dist.iter().copied()))
}

/// One point of an empirical rate report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub c_n: f64,
    pub log_p: f64,
    pub log_p_se: f64,
    /// `-(c_n^alpha / n) log p`.
    pub rate: f64,
    pub rate_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub points: Vec<RatePoint>,
    /// Value of the linear fit of `rate` against `1 / c_n` at `1 / c_n = 0`.
    pub extrapolated: f64,
    pub extrapolated_se: f64,
    pub target: f64,
    /// `|target - rate|` per point.
    pub gaps: Vec<f64>,
    pub gap_shrinks: bool,
    pub relative_error: f64,
    /// `n` values dropped because the estimate was zero.
    pub excluded: Vec<usize>,
}

/// Settings for [`empirical_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub particles: usize,
    pub replicates: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self { particles: 10_000, replicates: 8 }
    }
}

/// Finite-`n` rates `-(c_n^alpha / n) log p_n` along `n_list`, extrapolated
/// linearly in `1 / c_n` and compared with the rate functional.
pub fn empirical_rate<T: Real, L: StepLaw<T>>(
    law: &L,
    tube: &TubeSpec<T>,
    alpha: StabilityIndex<T>,
    cstar: T,
    n_list: &[usize],
    cfg: RateConfig,
    streams: &Streams,
) -> Result<RateReport> {
    if n_list.len() < 2 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("n_list", "need at least two increasing values"));
    }
    let a = alpha.get().as_f64();
    let target = rate_functional(tube, alpha, cstar)?.value;
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for (i, &n) in n_list.iter().enumerate() {
        let t = tube.with_n(n);
        match tube_prob_splitting(law, &t, T::zero(), cfg.particles, cfg.replicates, &streams.stage(mix(99, i as u64)))
        {
            Ok(est) => {
                let c_n = t.c_n().as_f64();
                let k = c_n.powf(a) / n as f64;
                points.push(RatePoint {
                    n,
                    c_n,
                    log_p: est.log_p,
                    log_p_se: est.std_error,
                    rate: -k * est.log_p,
                    rate_se: k * est.std_error,
                });
            }
            Err(Error::EnsembleExtinct { .. }) => excluded.push(n),
            Err(e) => return Err(e),
        }
    }
    if points.len() < 2 {
        return Err(Error::param("n_list", "fewer than two usable points"));
    }
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.c_n).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.rate).collect();
    let fit = linear_fit(&xs, &ys);
    let gaps: Vec<f64> = points.iter().map(|p| (target - p.rate).abs()).collect();
    let gap_shrinks = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok(RateReport {
        points,
        extrapolated: fit.intercept,
        extrapolated_se: fit.intercept_se,
        target,
        gaps,
        gap_shrinks,
        relative_error: (fit.intercept - target).abs() / target,
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub trials: usize,
    pub c0: f64,
    /// One-sample KS distance of `S_n / n^{1/alpha}` against the stable CDF.
    pub ks: f64,
    /// Two-sample KS distance against `sample_stable` draws.
    pub ks_two_sample: f64,
}

/// Compares `S_n / n^{1/alpha}` with the stable target law.
pub fn scaled_path_convergence<T: Real, L: StepLaw<T>>(
    law: &L,
    target: &StableSpec<T>,
    n: usize,
    trials: usize,
    streams: &Streams,
) -> Result<ConvergenceReport> {
    if trials == 0 || n == 0 {
        return Err(Error::param("trials", "n and trials must be positive"));
    }
    let streams = streams.stage(stage::SCALED_PATH);
    let norm = T::count(n).powf(target.alpha().get().recip());
    let sums: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = SmallRng::seed_from_u64(streams.seed(i));
            let mut s = T::zero();
            for _ in 0..n {
                s = s + law.sample(&mut rng);
            }
            (s / norm).as_f64()
        })
        .collect();
    let reference: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = SmallRng::seed_from_u64(streams.seed(mix(i, u64::MAX)));
            crate::stable_process::sample_stable(target, &mut rng).as_f64()
        })
        .collect();
    Ok(ConvergenceReport {
        n,
        trials,
        c0: target.c0().as_f64(),
        ks: ks_statistic(&sums, |x| stable_cdf(target, x)),
        ks_two_sample: crate::stats::ks_two_sample(&sums, &reference),
    })
}

/// [`scaled_path_convergence`] for a spine law with `alpha < 2`, using the
/// stable scale induced by its tail constant.
pub fn scaled_path_convergence_check<T: Real>(
    law: &SpineLaw<T>,
    n: usize,
    trials: usize,
    streams: &Streams,
) -> Result<ConvergenceReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be positive"));
    }
    if law.alpha().is_gaussian() {
        return Err(Error::param(
            "alpha",
            "a Pareto tail with alpha = 2 has infinite variance; pass a finite-variance law to scaled_path_convergence",
        ));
    }
    let grid = [0.5, 1.0, 2.0, 4.0].map(T::lit);
    let fit = extract_c0(law.alpha(), law.tail_const(), &grid, 1e-6)?;
    let target = StableSpec::new(law.alpha(), T::lit(fit.c0))?;
    scaled_path_convergence(law, &target, n, trials, streams)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spine_law::GaussianStep;

    fn abs_tube(h: f64, n: usize) -> TubeSpec<f64> {
        TubeSpec::new(PiecewiseLinear::constant(-h), PiecewiseLinear::constant(h), TubeScale::Unscaled, n).unwrap()
    }

    #[test]
    fn piecewise_eval_and_parse() {
        let p = PiecewiseLinear::<f64>::parse("0:1, 0.5:3, 1:2").unwrap();
        assert_eq!(p.eval(0.25), 2.0);
        assert_eq!(p.eval(0.75), 2.5);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(PiecewiseLinear::<f64>::parse(&p.render()).unwrap(), p);
        assert!(PiecewiseLinear::<f64>::parse("0:1, 0.7:2").is_err());
    }

    #[test]
    fn rate_functional_examples() {
        let a2 = StabilityIndex::new(2.0).unwrap();
        let a15 = StabilityIndex::new(1.5).unwrap();
        let unit = TubeSpec::centered(1.0, a2, 10).unwrap();
        assert!((rate_functional(&unit, a2, 3.0).unwrap().value - 3.0).abs() < 1e-12);
        let two = TubeSpec::centered(2.0, a15, 10).unwrap();
        assert!((rate_functional(&two, a15, 3.0).unwrap().value - 3.0 * 2f64.powf(-1.5)).abs() < 1e-12);
        let lin =
            TubeSpec::new(PiecewiseLinear::constant(-0.5), PiecewiseLinear::linear(0.5, 1.5), TubeScale::Unscaled, 10)
                .unwrap();
        assert!((rate_functional(&lin, a2, 3.0).unwrap().value - 1.5).abs() < 1e-12);
        let pinched =
            TubeSpec::new(PiecewiseLinear::constant(-0.5), PiecewiseLinear::linear(0.5, -0.5), TubeScale::Unscaled, 10)
                .unwrap_err();
        assert!(matches!(pinched, Error::InvalidParameter { .. }));
        let relaxed = TubeSpec {
            lower: PiecewiseLinear::constant(-0.5),
            upper: PiecewiseLinear::linear(0.5, -0.5),
            scale: TubeScale::Unscaled,
            n: 10,
            perturbation: None,
            relaxed: true,
        };
        let r = rate_functional(&relaxed, a2, 1.0).unwrap();
        assert!(r.divergent && r.value.is_infinite());
    }

    #[test]
    fn shifted_rate_examples() {
        let a2 = StabilityIndex::new(2.0).unwrap();
        let base = TubeSpec::centered(1.0, a2, 10).unwrap();
        let s = ShiftedTubeSpec::new(base.clone(), 0.0, 1.0, -0.5, 0.5).unwrap();
        assert!((shifted_rate_functional(&s, a2, 8.0).unwrap().value - 2.0).abs() < 1e-12);
        let narrow = ShiftedTubeSpec::new(base.clone(), 0.2, 0.7, 0.0, 0.1).unwrap();
        let wide = ShiftedTubeSpec::new(base.clone(), 0.2, 0.7, 0.0, 0.3).unwrap();
        let (vn, vw) = (
            shifted_rate_functional(&narrow, a2, 1.0).unwrap().value,
            shifted_rate_functional(&wide, a2, 1.0).unwrap().value,
        );
        assert!(vw < vn && vn < 0.5);
        assert!(ShiftedTubeSpec::new(base, 0.2, 0.7, 0.1, 0.1).is_err());
    }

    #[test]
    fn dp_hand_cases() {
        let pm = LatticeStep::plus_minus_one();
        assert!((tube_prob_dp(&pm, &[-2; 5], &[2; 5]).unwrap() - 0.75).abs() < 1e-15);
        let frozen = LatticeStep::new(0, vec![1.0]).unwrap();
        assert_eq!(tube_prob_dp(&frozen, &[0; 6], &[0; 6]).unwrap(), 1.0);
        assert_eq!(tube_prob_dp(&pm, &[0, 0], &[0, 0]).unwrap(), 0.0);
        assert!(tube_prob_dp(&pm, &[0, 0], &[0]).is_err());
        assert!(tube_prob_dp(&pm, &[0, 1], &[0, 0]).is_err());
    }

    #[test]
    fn integer_bounds_of_unscaled_tube() {
        let (lo, hi) = abs_tube(2.5, 4).integer_bounds();
        assert_eq!(lo, vec![-2; 5]);
        assert_eq!(hi, vec![2; 5]);
    }

    #[test]
    fn mc_vacuous_tube_is_one() {
        let pm = LatticeStep::plus_minus_one();
        let e = tube_prob_mc::<f64, _>(&pm, &abs_tube(10.0, 8), 0.0, 2000, &Streams::new(1), None).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn mc_zero_successes_gives_one_sided_bound() {
        let g = GaussianStep { sigma: 10.0 };
        let e = tube_prob_mc(&g, &abs_tube(0.01, 50), 0.0, 500, &Streams::new(1), None).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.ci_high > 0.0 && e.ci_high < 0.01);
    }

    #[test]
    fn truncation_threshold() {
        let a = StabilityIndex::new(1.5).unwrap();
        assert!(TruncationEvent::new(2.5, a, 100).is_err());
        let t = TruncationEvent::new(3.0, a, 1000).unwrap();
        assert!((t.threshold() - 10f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn convergence_rejects_zero_trials() {
        let law = SpineLaw::pareto(StabilityIndex::new(1.5).unwrap(), 1.0, 2.0).unwrap();
        assert!(scaled_path_convergence_check(&law, 1000, 0, &Streams::new(1)).is_err());
    }
}
