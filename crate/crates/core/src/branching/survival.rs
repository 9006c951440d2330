//! Population runs under absorbing barriers and survival estimates.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::barrier::BarrierSpec;
use super::model::{Brood, OffspringModel};
use crate::error::{Error, Result};
use crate::rng::{mix, node_rng, stage, Streams};
use crate::scalar::Real;
use crate::stats::Estimate;

const SUBSAMPLE_SALT: u64 = 0x5AB5_A3F1;
/// Key of the root individual.
pub const ROOT_KEY: u64 = 1;

/// One generation of an absorbed branching random walk.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    pub generation: u64,
    /// `(position, key)` of every living member.
    pub members: Vec<(T, u64)>,
}

impl<T: Real> Population<T> {
    pub fn root(position: T, generation: u64) -> Self {
        Self { generation, members: vec![(position, ROOT_KEY)] }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// What to do once the population exceeds `max_pop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    /// Stop and count the trial as surviving (biased upward).
    DeclareSurvival,
    /// Keep a uniform random subset of `max_pop` members (biased downward).
    Subsample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunLimits {
    pub max_pop: usize,
    pub policy: OverflowPolicy,
    /// Brood cap `R`: broods larger than this are discarded whole.
    pub cap: Option<u64>,
    /// Check every kept member against the barriers.
    pub audit: bool,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self { max_pop: 100_000, policy: OverflowPolicy::DeclareSurvival, cap: None, audit: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RunOutcome {
    Extinct { generation: u64 },
    Reached { size: usize },
    Overflow { generation: u64, size: usize },
    Stopped { generation: u64 },
}

impl RunOutcome {
    /// Counts as survival: reached the horizon alive or overflowed.
    pub fn survived(&self) -> bool {
        matches!(self, Self::Reached { .. } | Self::Overflow { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Runs one trial from `start` to generation `n_end`. `observe` sees every
/// generation, including the start, and may stop the run. Returns the
/// outcome and the number of audit violations.
pub fn run_population<T: Real>(
    model: &OffspringModel<T>,
    barrier: &BarrierSpec<T>,
    start: Population<T>,
    n_end: u64,
    trial_seed: u64,
    limits: &RunLimits,
    mut observe: impl FnMut(&Population<T>) -> Flow,
) -> Result<(RunOutcome, u64)> {
    let mut pop = start;
    let mut next = Vec::new();
    let mut brood = Brood::default();
    let mut violations = 0u64;
    loop {
        if pop.is_empty() {
            return Ok((RunOutcome::Extinct { generation: pop.generation }, violations));
        }
        if observe(&pop) == Flow::Stop {
            return Ok((RunOutcome::Stopped { generation: pop.generation }, violations));
        }
        if pop.generation >= n_end {
            return Ok((RunOutcome::Reached { size: pop.len() }, violations));
        }
        let g = pop.generation + 1;
        let (upper, lower) = (barrier.upper(g), barrier.lower(g));
        next.clear();
        for &(x, key) in &pop.members {
            model.sample_brood(x, key, trial_seed, upper, lower, limits.cap, &mut brood)?;
            next.extend_from_slice(&brood.children);
        }
        if limits.audit {
            violations += next.iter().filter(|(x, _)| !barrier.contains(g, *x)).count() as u64;
        }
        if next.len() > limits.max_pop {
            match limits.policy {
                OverflowPolicy::DeclareSurvival => {
                    return Ok((RunOutcome::Overflow { generation: g, size: next.len() }, violations));
                }
                OverflowPolicy::Subsample => {
                    let mut rng = node_rng(trial_seed, mix(g, SUBSAMPLE_SALT));
                    next.partial_shuffle(&mut rng, limits.max_pop);
                    next.truncate(limits.max_pop);
                }
            }
        }
        pop.generation = g;
        std::mem::swap(&mut pop.members, &mut next);
    }
}

/// Settings shared by the survival estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalConfig {
    pub n: u64,
    pub trials: u64,
    pub limits: RunLimits,
    /// Overflowed trials rerun with a larger population limit to bound the
    /// bias of declaring them survivors.
    pub aux_trials: usize,
    pub aux_factor: usize,
}

impl SurvivalConfig {
    pub fn new(n: u64, trials: u64) -> Self {
        Self { n, trials, limits: RunLimits::default(), aux_trials: 0, aux_factor: 10 }
    }

    pub fn max_pop(mut self, max_pop: usize) -> Self {
        self.limits.max_pop = max_pop;
        self
    }

    pub fn cap(mut self, cap: Option<u64>) -> Self {
        self.limits.cap = cap;
        self
    }

    pub fn aux(mut self, trials: usize, factor: usize) -> Self {
        self.aux_trials = trials;
        self.aux_factor = factor;
        self
    }
}

/// Share of overflowed trials that still died with a larger limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxBias {
    pub continued: u64,
    pub died: u64,
    /// Upper 95% bound on the upward bias of the survival estimate.
    pub bias_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub n: u64,
    pub estimate: Estimate,
    pub overflowed: u64,
    pub aux: Option<AuxBias>,
    pub audit_violations: u64,
}

pub(crate) fn trial_seed(streams: &Streams, trial: u64) -> u64 {
    streams.stage(stage::SURVIVAL).seed(trial)
}

/// Per-trial outcomes from a single root at 0. Trial `i` uses the same node
/// randomness whatever the barrier, which couples runs across barriers.
pub fn survival_outcomes<T: Real>(
    model: &OffspringModel<T>,
    barrier: &BarrierSpec<T>,
    cfg: &SurvivalConfig,
    streams: &Streams,
) -> Result<Vec<(RunOutcome, u64)>> {
    if cfg.n == 0 || cfg.trials == 0 {
        return Err(Error::param("survival", "n and trials must be positive"));
    }
    (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            run_population(
                model,
                barrier,
                Population::root(T::zero(), 0),
                cfg.n,
                trial_seed(streams, i),
                &cfg.limits,
                |_| Flow::Continue,
            )
        })
        .collect()
}

/// Fraction of trials whose absorbed population is alive at generation `n`.
pub fn survival_prob<T: Real>(
    model: &OffspringModel<T>,
    barrier: &BarrierSpec<T>,
    cfg: &SurvivalConfig,
    streams: &Streams,
) -> Result<SurvivalEstimate> {
    let outcomes = survival_outcomes(model, barrier, cfg, streams)?;
    summarize(model, barrier, cfg, streams, &outcomes)
}

fn summarize<T: Real>(
    model: &OffspringModel<T>,
    barrier: &BarrierSpec<T>,
    cfg: &SurvivalConfig,
    streams: &Streams,
    outcomes: &[(RunOutcome, u64)],
) -> Result<SurvivalEstimate> {
    let alive = outcomes.iter().filter(|(o, _)| o.survived()).count() as u64;
    let overflow_idx: Vec<u64> = outcomes
        .iter()
        .enumerate()
        .filter(|(_, (o, _))| matches!(o, RunOutcome::Overflow { .. }))
        .map(|(i, _)| i as u64)
        .collect();
    let aux = if cfg.aux_trials > 0 && !overflow_idx.is_empty() {
        let mut limits = cfg.limits;
        limits.max_pop = limits.max_pop.saturating_mul(cfg.aux_factor);
        let chosen: Vec<u64> = overflow_idx.iter().copied().take(cfg.aux_trials).collect();
        let died = chosen
            .par_iter()
            .map(|&i| {
                run_population(
                    model,
                    barrier,
                    Population::root(T::zero(), 0),
                    cfg.n,
                    trial_seed(streams, i),
                    &limits,
                    |_| Flow::Continue,
                )
                .map(|(o, _)| u64::from(!o.survived()))
            })
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .sum::<u64>();
        let continued = chosen.len() as u64;
        let frac_hi = Estimate::binomial(died, continued).ci_high;
        Some(AuxBias { continued, died, bias_bound: frac_hi * overflow_idx.len() as f64 / cfg.trials as f64 })
    } else {
        None
    };
    Ok(SurvivalEstimate {
        n: cfg.n,
        estimate: Estimate::binomial(alive, cfg.trials),
        overflowed: overflow_idx.len() as u64,
        aux,
        audit_violations: outcomes.iter().map(|(_, v)| v).sum(),
    })
}

/// Survival probabilities along an increasing grid of barrier coefficients,
/// all on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub a_grid: Vec<f64>,
    pub n: u64,
    pub trials: u64,
    pub max_pop: usize,
    pub cap: Option<u64>,
    pub estimates: Vec<SurvivalEstimate>,
    /// No trial survives at some `a` and dies at a larger one.
    pub pathwise_monotone: bool,
}

pub fn survival_curve<T: Real>(
    model: &OffspringModel<T>,
    shape: &BarrierSpec<T>,
    a_grid: &[T],
    cfg: &SurvivalConfig,
    streams: &Streams,
) -> Result<SurvivalCurve> {
    if a_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("a_grid", "must be strictly increasing"));
    }
    let mut estimates = Vec::with_capacity(a_grid.len());
    let mut prev: Option<Vec<bool>> = None;
    let mut monotone = true;
    for &a in a_grid {
        let barrier = shape.with_a(a);
        let outcomes = survival_outcomes(model, &barrier, cfg, streams)?;
        let alive: Vec<bool> = outcomes.iter().map(|(o, _)| o.survived()).collect();
        if let Some(p) = &prev {
            monotone &= p.iter().zip(&alive).all(|(lo, hi)| !lo || *hi);
        }
        estimates.push(summarize(model, &barrier, cfg, streams, &outcomes)?);
        prev = Some(alive);
    }
    Ok(SurvivalCurve {
        a_grid: a_grid.iter().map(|a| a.as_f64()).collect(),
        n: cfg.n,
        trials: cfg.trials,
        max_pop: cfg.limits.max_pop,
        cap: cfg.limits.cap,
        estimates,
        pathwise_monotone: monotone,
    })
}

/// Finite-`n` coefficient where the survival curve crosses `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingEstimate {
    pub a_cross: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: u64,
    pub threshold: f64,
    /// Bracket width after each bisection step.
    pub widths: Vec<f64>,
}

/// Bisection on the coupled survival curve `a -> s(a, n)`.
pub fn critical_a_search<T: Real>(
    model: &OffspringModel<T>,
    shape: &BarrierSpec<T>,
    cfg: &SurvivalConfig,
    bracket: (T, T),
    threshold: f64,
    steps: usize,
    streams: &Streams,
) -> Result<CrossingEstimate> {
    let s = |a: T| -> Result<f64> { Ok(survival_prob(model, &shape.with_a(a), cfg, streams)?.estimate.value) };
    let (mut lo, mut hi) = bracket;
    let (s_lo, s_hi) = (s(lo)?, s(hi)?);
    if !(s_lo < threshold && threshold < s_hi) {
        return Err(Error::BracketInvalid { lo: lo.as_f64(), hi: hi.as_f64(), threshold, s_lo, s_hi });
    }
    let mut widths = vec![(hi - lo).as_f64()];
    for _ in 0..steps {
        let mid = (lo + hi) * T::lit(0.5);
        if s(mid)? < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        widths.push((hi - lo).as_f64());
    }
    Ok(CrossingEstimate {
        a_cross: ((lo + hi) * T::lit(0.5)).as_f64(),
        lo: lo.as_f64(),
        hi: hi.as_f64(),
        n: cfg.n,
        threshold,
        widths,
    })
}

/// Survival frequency under the linear barrier `eps i`.
pub fn linear_barrier_check<T: Real>(
    model: &OffspringModel<T>,
    eps: T,
    cfg: &SurvivalConfig,
    streams: &Streams,
) -> Result<SurvivalEstimate> {
    survival_prob(model, &BarrierSpec::linear(eps), cfg, &streams.stage(stage::LINEAR))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::model::make_binary_gaussian_model;
    use crate::spine_law::StabilityIndex;

    #[test]
    fn impossible_first_step_gives_zero() {
        let m = make_binary_gaussian_model::<f64>();
        let b = BarrierSpec::linear(-1e3);
        let s = survival_prob(&m, &b, &SurvivalConfig::new(5, 200), &Streams::new(1)).unwrap();
        assert_eq!(s.estimate.value, 0.0);
    }

    #[test]
    fn nested_in_horizon_and_audited() {
        let m = make_binary_gaussian_model::<f64>();
        let b = BarrierSpec::power(4.0, StabilityIndex::new(2.0).unwrap()).unwrap();
        let mut cfg = SurvivalConfig::new(10, 400).max_pop(2000);
        cfg.limits.audit = true;
        let short = survival_outcomes(&m, &b, &cfg, &Streams::new(2)).unwrap();
        cfg.n = 40;
        let long = survival_outcomes(&m, &b, &cfg, &Streams::new(2)).unwrap();
        for ((s, vs), (l, vl)) in short.iter().zip(&long) {
            assert!(!l.survived() || s.survived());
            assert_eq!(vs + vl, 0);
        }
    }

    #[test]
    fn subsample_keeps_population_bounded() {
        let m = make_binary_gaussian_model::<f64>();
        let mut limits = RunLimits { max_pop: 50, policy: OverflowPolicy::Subsample, ..Default::default() };
        limits.audit = true;
        let mut biggest = 0;
        let (out, v) = run_population(&m, &BarrierSpec::none(), Population::root(0.0, 0), 12, 9, &limits, |p| {
            biggest = biggest.max(p.len());
            Flow::Continue
        })
        .unwrap();
        assert_eq!(out, RunOutcome::Reached { size: 50 });
        assert!(biggest <= 50 && v == 0);
    }
}
