//! Two-sided Monte Carlo check of the many-to-one identity
//! `E sum_{|u|=n} e^{-V(u)} F(V(u_1), ..., V(u_n)) = E F(S_1, ..., S_n)`.

use rand::rngs::SmallRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{Brood, OffspringModel};
use super::survival::ROOT_KEY;
use crate::error::{Error, Result};
use crate::rng::{stage, Streams};
use crate::scalar::Real;
use crate::spine_law::StepLaw;
use crate::stats::Estimate;

/// Bounded path functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Functional {
    One,
    /// `1{S_n <= level}`.
    EndBelow {
        level: f64,
    },
    /// `1{|S_i| <= bound for all i <= n}`.
    IndicatorTube {
        bound: f64,
    },
    /// `exp(-max_i |S_i|)`.
    ExpBounded,
    /// `1{S_n <= level} 1{upsilon_n <= max_brood}`, with `upsilon_n` the size
    /// of the brood the generation-`n` individual was born into.
    Bivariate {
        level: f64,
        max_brood: u64,
    },
}

#[derive(Debug, Clone, Copy)]
struct PathState<T> {
    pos: T,
    max_abs: T,
    brood: u64,
}

impl<T: Real> PathState<T> {
    fn start() -> Self {
        Self { pos: T::zero(), max_abs: T::zero(), brood: 0 }
    }

    fn step(&self, x: T, brood: u64) -> Self {
        let pos = self.pos + x;
        Self { pos, max_abs: self.max_abs.max(pos.abs()), brood }
    }
}

impl Functional {
    fn eval<T: Real>(&self, s: &PathState<T>) -> f64 {
        let pos = s.pos.as_f64();
        match *self {
            Self::One => 1.0,
            Self::EndBelow { level } => f64::from(u8::from(pos <= level)),
            Self::IndicatorTube { bound } => f64::from(u8::from(s.max_abs.as_f64() <= bound)),
            Self::ExpBounded => (-s.max_abs.as_f64()).exp(),
            Self::Bivariate { level, max_brood } => f64::from(u8::from(pos <= level && s.brood <= max_brood)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManyToOneResult {
    pub n: usize,
    pub functional: Functional,
    /// Tree side: `sum e^{-V} F` over generation `n`.
    pub left: Estimate,
    /// Walk side: `F` along the spine walk.
    pub right: Estimate,
    /// Right-cut bias bound `n c T^{-alpha}` added to the tree-side interval.
    pub bias: f64,
    pub overlap: bool,
}

/// Runs both sides of the identity with `trials` samples each.
pub fn many_to_one_check<T: Real>(
    model: &OffspringModel<T>,
    n: usize,
    functional: Functional,
    trials: u64,
    streams: &Streams,
) -> Result<ManyToOneResult> {
    if n == 0 || n > 6 {
        return Err(Error::param("n", "must lie in 1..=6"));
    }
    if trials < 2 {
        return Err(Error::param("trials", "need at least 2"));
    }
    let tree = streams.stage(stage::MANY_TO_ONE_TREE);
    let walk = streams.stage(stage::MANY_TO_ONE_WALK);
    let left: Vec<f64> =
        (0..trials).into_par_iter().map(|i| tree_sum(model, n, functional, tree.seed(i))).collect::<Result<_>>()?;
    let palm = model.palm_step();
    let right: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = SmallRng::seed_from_u64(walk.seed(i));
            let mut s = PathState::<T>::start();
            for _ in 0..n {
                let (x, mark) = palm.sample_marked(&mut rng);
                s = s.step(x, mark);
            }
            functional.eval(&s)
        })
        .collect();
    let left = Estimate::from_samples(&left);
    let right = Estimate::from_samples(&right);
    let bias = n as f64 * model.cut_bias();
    Ok(ManyToOneResult { n, functional, overlap: left.overlaps(&right, bias), left, right, bias })
}

fn tree_sum<T: Real>(model: &OffspringModel<T>, n: usize, f: Functional, seed: u64) -> Result<f64> {
    let mut gen = vec![(PathState::<T>::start(), ROOT_KEY)];
    let mut next = Vec::new();
    let mut brood = Brood::default();
    for _ in 0..n {
        next.clear();
        for (state, key) in &gen {
            model.sample_brood(state.pos, *key, seed, T::infinity(), T::neg_infinity(), None, &mut brood)?;
            let total = brood.total;
            next.extend(brood.children.iter().map(|&(x, k)| (state.step(x - state.pos, total), k)));
        }
        std::mem::swap(&mut gen, &mut next);
    }
    Ok(gen.iter().map(|(s, _)| (-s.pos.as_f64()).exp() * f.eval(s)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branching::model::make_binary_gaussian_model;

    #[test]
    fn normalization_at_one_generation() {
        let m = make_binary_gaussian_model::<f64>();
        let r = many_to_one_check(&m, 1, Functional::One, 20_000, &Streams::new(4)).unwrap();
        assert_eq!(r.right.value, 1.0);
        assert!((r.left.value - 1.0).abs() < 4.0 * r.left.std_error, "{:?}", r.left);
        assert!(many_to_one_check(&m, 7, Functional::One, 10, &Streams::new(4)).is_err());
    }
}
