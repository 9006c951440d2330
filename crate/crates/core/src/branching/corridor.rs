//! Corridor counts between two barriers and the population-growth event.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::barrier::BarrierSpec;
use super::model::OffspringModel;
use super::survival::{run_population, Flow, OverflowPolicy, Population, RunLimits, RunOutcome};
use crate::critical_ode::r_a;
use crate::error::{Error, Result};
use crate::rng::{stage, Streams};
use crate::scalar::Real;
use crate::stats::Estimate;

/// Largest generation any corridor experiment may reach.
pub const HORIZON_BUDGET: u64 = 10_000_000;

/// `R_k = floor(exp(l_k^{1/c}))`, saturating.
pub fn cap_r(l_k: u64, c: f64) -> u64 {
    let v = (l_k as f64).powf(1.0 / c).exp().floor();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

fn generation(base: u64, k: u32) -> Result<u64> {
    base.checked_pow(k)
        .filter(|g| *g <= HORIZON_BUDGET)
        .ok_or_else(|| Error::BudgetExceeded(format!("generation {base}^{k} beyond {HORIZON_BUDGET}")))
}

/// Settings for [`two_barrier_count`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBarrierConfig<T> {
    pub a: T,
    pub b: T,
    /// `e^lambda`.
    pub base: u64,
    pub k: u32,
    pub cap: Option<u64>,
    pub max_pop: usize,
}

/// One sample of `Z_k`: descendants at generation `N^{k+1}` of a particle
/// placed on the upper barrier at generation `N^k` that stayed inside
/// `[(a - b) i^{1/(1+alpha)}, a i^{1/(1+alpha)}]` throughout.
pub fn two_barrier_count<T: Real>(
    model: &OffspringModel<T>,
    cfg: &TwoBarrierConfig<T>,
    trial_seed: u64,
) -> Result<u64> {
    if cfg.base < 2 {
        return Err(Error::param("base", "e^lambda must be an integer >= 2"));
    }
    let g0 = generation(cfg.base, cfg.k)?;
    let g1 = generation(cfg.base, cfg.k + 1)?;
    if !(cfg.b > T::zero()) {
        return Ok(0);
    }
    let alpha = model.alpha();
    let barrier = BarrierSpec::two_barrier(cfg.a, cfg.b, alpha)?;
    let start = Population::root(barrier.upper(g0), g0);
    let limits =
        RunLimits { max_pop: cfg.max_pop, policy: OverflowPolicy::DeclareSurvival, cap: cfg.cap, audit: false };
    match run_population(model, &barrier, start, g1, trial_seed, &limits, |_| Flow::Continue)?.0 {
        RunOutcome::Reached { size } => Ok(size as u64),
        RunOutcome::Extinct { .. } => Ok(0),
        RunOutcome::Overflow { generation, size } => Err(Error::BudgetExceeded(format!(
            "corridor population {size} above {} at generation {generation}",
            cfg.max_pop
        ))),
        RunOutcome::Stopped { .. } => unreachable!("observer never stops"),
    }
}

/// Paired capped and uncapped samples of `Z_k` on common random numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBarrierSamples {
    pub capped: Vec<u64>,
    pub uncapped: Vec<u64>,
    pub cap: Option<u64>,
}

impl TwoBarrierSamples {
    /// `Z_k^{(k)} <= Z_k` in every run.
    pub fn ordered(&self) -> bool {
        self.capped.iter().zip(&self.uncapped).all(|(c, u)| c <= u)
    }
}

pub fn two_barrier_samples<T: Real>(
    model: &OffspringModel<T>,
    cfg: &TwoBarrierConfig<T>,
    runs: u64,
    streams: &Streams,
) -> Result<TwoBarrierSamples> {
    let s = streams.stage(stage::TWO_BARRIER);
    let uncapped_cfg = TwoBarrierConfig { cap: None, ..*cfg };
    let pairs = (0..runs)
        .into_par_iter()
        .map(|i| Ok((two_barrier_count(model, cfg, s.seed(i))?, two_barrier_count(model, &uncapped_cfg, s.seed(i))?)))
        .collect::<Result<Vec<(u64, u64)>>>()?;
    let (capped, uncapped) = pairs.into_iter().unzip();
    Ok(TwoBarrierSamples { capped, uncapped, cap: cfg.cap })
}

/// Paley-Zygmund check `P(Z >= theta E Z) >= (1 - theta)^2 (E Z)^2 / E Z^2`
/// on an empirical sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PzReport {
    pub theta: f64,
    pub mean: f64,
    pub second_moment: f64,
    /// Empirical `P(Z >= theta mean)`.
    pub t_k: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn paley_zygmund(samples: &[u64], theta: f64) -> Result<PzReport> {
    if samples.is_empty() || !(theta > 0.0 && theta < 1.0) {
        return Err(Error::param("paley-zygmund", "need samples and theta in (0, 1)"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().map(|&z| z as f64).sum::<f64>() / n;
    let second_moment = samples.iter().map(|&z| (z as f64).powi(2)).sum::<f64>() / n;
    let nu = theta * mean;
    let t_k = samples.iter().filter(|&&z| z as f64 >= nu).count() as f64 / n;
    let bound = if second_moment > 0.0 { (1.0 - theta).powi(2) * mean * mean / second_moment } else { 0.0 };
    Ok(PzReport { theta, mean, second_moment, t_k, bound, holds: t_k >= bound })
}

/// Settings for [`bn_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BnConfig<T> {
    pub a: T,
    pub cstar: T,
    /// Checkpoints are generations `base^k`, `k = 1..=k_max`.
    pub base: u64,
    pub k_max: u32,
    pub eps: T,
    pub trials: u64,
    pub max_pop: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnReport {
    pub r_a: f64,
    /// `exp(N^{k/(1+alpha)} (r_a - eps) / 2)` for `k = 1..=k_max`.
    pub thresholds: Vec<f64>,
    /// Frequency of meeting every threshold up to `k`.
    pub per_k: Vec<Estimate>,
    pub overflowed: u64,
}

/// Frequency of the event that, for every `k <= k_max`, the population kept
/// inside `[(a - r_a) i^{1/(1+alpha)}, a i^{1/(1+alpha)}]` numbers at least
/// `exp(N^{k/(1+alpha)} (r_a - eps) / 2)` at generation `N^k`. A run that
/// outgrows `max_pop` counts as meeting the remaining thresholds that do not
/// exceed `max_pop`.
pub fn bn_experiment<T: Real>(model: &OffspringModel<T>, cfg: &BnConfig<T>, streams: &Streams) -> Result<BnReport> {
    let alpha = model.alpha();
    let ra = r_a(cfg.a, alpha, cfg.cstar)?;
    if !(cfg.eps > T::zero() && cfg.eps < ra) {
        return Err(Error::param("eps", "must lie in (0, r_a)"));
    }
    if cfg.k_max == 0 || cfg.trials == 0 {
        return Err(Error::param("bn", "k_max and trials must be positive"));
    }
    let gens: Vec<u64> = (1..=cfg.k_max).map(|k| generation(cfg.base, k)).collect::<Result<_>>()?;
    let be = alpha.barrier_exponent().as_f64();
    let margin = (ra - cfg.eps).as_f64();
    let thresholds: Vec<f64> = gens.iter().map(|&g| (0.5 * (g as f64).powf(be) * margin).exp()).collect();
    let barrier = BarrierSpec::two_barrier(cfg.a, ra, alpha)?;
    let limits = RunLimits { max_pop: cfg.max_pop, policy: OverflowPolicy::DeclareSurvival, cap: None, audit: false };
    let s = streams.stage(stage::BN);
    let horizon = *gens.last().expect("k_max >= 1");
    let results = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut passed = 0usize;
            let (outcome, _) =
                run_population(model, &barrier, Population::root(T::zero(), 0), horizon, s.seed(i), &limits, |p| {
                    match gens.iter().position(|&g| g == p.generation) {
                        Some(k) if p.len() as f64 >= thresholds[k] => {
                            passed = k + 1;
                            Flow::Continue
                        }
                        Some(_) => Flow::Stop,
                        None => Flow::Continue,
                    }
                })?;
            if let RunOutcome::Overflow { generation, .. } = outcome {
                for (k, &g) in gens.iter().enumerate().skip(passed) {
                    if g >= generation && thresholds[k] <= cfg.max_pop as f64 {
                        passed = k + 1;
                    } else {
                        break;
                    }
                }
                return Ok((passed, true));
            }
            Ok((passed, false))
        })
        .collect::<Result<Vec<(usize, bool)>>>()?;
    let per_k = (1..=gens.len())
        .map(|k| Estimate::binomial(results.iter().filter(|(p, _)| *p >= k).count() as u64, cfg.trials))
        .collect();
    Ok(BnReport { r_a: ra.as_f64(), thresholds, per_k, overflowed: results.iter().filter(|(_, o)| *o).count() as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::model::make_binary_gaussian_model;

    #[test]
    fn cap_formula() {
        assert_eq!(cap_r(12, 3.5), (12f64.powf(1.0 / 3.5)).exp().floor() as u64);
        assert_eq!(cap_r(1, 3.0), 2);
    }

    #[test]
    fn pz_on_constant_sample() {
        let r = paley_zygmund(&[3, 3, 3], 0.5).unwrap();
        assert_eq!(r.t_k, 1.0);
        assert!((r.bound - 0.25).abs() < 1e-15 && r.holds);
        let z = paley_zygmund(&[0, 0], 0.5).unwrap();
        assert!(z.holds);
    }

    #[test]
    fn empty_corridor_forces_zero() {
        let m = make_binary_gaussian_model::<f64>();
        let cfg = TwoBarrierConfig { a: 5.0, b: 0.0, base: 4, k: 1, cap: None, max_pop: 1000 };
        assert_eq!(two_barrier_count(&m, &cfg, 1).unwrap(), 0);
    }

    #[test]
    fn horizon_budget_guard() {
        let m = make_binary_gaussian_model::<f64>();
        let cfg = TwoBarrierConfig { a: 5.0, b: 1.0, base: 1000, k: 3, cap: None, max_pop: 1000 };
        assert!(matches!(two_barrier_count(&m, &cfg, 1), Err(Error::BudgetExceeded(_))));
    }
}
