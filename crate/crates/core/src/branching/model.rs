//! Offspring point processes in the boundary case.

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::GaussLegendre;
use crate::rng::{child_key, mix, node_rng};
use crate::scalar::Real;
use crate::spine_law::{normal_cdf, SpineLaw, StabilityIndex, StepLaw};

/// Salt separating the unmaterialized-brood draw from a node's main stream.
const BROOD_SALT: u64 = 0x5EED_B200D;

/// Children form a Poisson process with intensity `e^v nu_X(dv)` on `v <= T`.
///
/// Children are produced in order of a unit-rate Poisson process
/// `Gamma_1 < Gamma_2 < ...` pushed through the inverse of the cumulative
/// intensity `M`. A brood restricted to `v <= L` is the prefix with
/// `Gamma_k <= M(L)`, so raising the barrier only appends children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonBoundary<T> {
    spine: SpineLaw<T>,
    right_cut: T,
    /// `M(y0)`.
    m_y0: T,
    /// Cell edges `y0, y0 + delta, ..., T` and `M` at those edges.
    edges: Vec<T>,
    cum: Vec<T>,
    /// Materialized-children limit per brood.
    pub brood_budget: usize,
}

/// Boundary quantities `(c T^{-alpha}, |int_{-inf}^T v nu_X(dv)|)` of the cut model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryDefect {
    pub mass: f64,
    pub mean: f64,
}

impl<T: Real> PoissonBoundary<T> {
    /// Builds the cut model, rejecting `T` whose mass defect `c T^{-alpha}`
    /// exceeds `budget`.
    pub fn new(spine: SpineLaw<T>, right_cut: T, budget: f64) -> Result<Self> {
        if !(right_cut >= spine.tail_threshold()) || !right_cut.is_finite() {
            return Err(Error::param("right_cut", "must be finite and at least the tail threshold y0"));
        }
        let defect = spine.step_tail(right_cut).as_f64();
        if defect > budget * (1.0 + 1e-9) {
            return Err(Error::DefectAboveBudget { defect, budget });
        }
        let y0 = spine.tail_threshold();
        let lam = spine.left_rate();
        let m_y0 = spine.left_weight() * lam * y0.exp() / (T::one() + lam);
        let delta = T::lit(1.0 / 32.0);
        let gl = GaussLegendre::<T>::new(10);
        let mut edges = vec![y0];
        let mut cum = vec![m_y0];
        let mut x = y0;
        while x < right_cut {
            let next = (x + delta).min(right_cut);
            let piece = gl.integrate(|v| v.exp() * spine.density(v), x, next);
            cum.push(*cum.last().expect("non-empty") + piece);
            edges.push(next);
            x = next;
        }
        Ok(Self { spine, right_cut, m_y0, edges, cum, brood_budget: 1_000_000 })
    }

    pub fn spine(&self) -> &SpineLaw<T> {
        &self.spine
    }

    pub fn right_cut(&self) -> T {
        self.right_cut
    }

    pub fn defect(&self) -> BoundaryDefect {
        let a = self.spine.alpha().get();
        let c = self.spine.tail_const();
        let t = self.right_cut;
        BoundaryDefect {
            mass: (c * t.powf(-a)).as_f64(),
            mean: (c * a * t.powf(T::one() - a) / (a - T::one())).as_f64(),
        }
    }

    /// Cumulative intensity `M(v) = int_{-inf}^v e^x nu_X(dx)`, capped at `v = T`.
    pub fn cumulative(&self, v: T) -> T {
        let y0 = self.spine.tail_threshold();
        if v <= y0 {
            return self.m_y0 * ((T::one() + self.spine.left_rate()) * (v - y0)).exp();
        }
        let v = v.min(self.right_cut);
        let k = self.edges.partition_point(|e| *e <= v).max(1) - 1;
        if self.edges[k] == v {
            return self.cum[k];
        }
        let gl = GaussLegendre::<T>::new(10);
        self.cum[k] + gl.integrate(|x| x.exp() * self.spine.density(x), self.edges[k], v)
    }

    /// Mean brood size `M(T)`.
    pub fn mean_brood(&self) -> T {
        *self.cum.last().expect("non-empty")
    }

    /// Inverse of `M` on `(0, M(T)]`.
    pub fn inverse_cumulative(&self, gamma: T) -> T {
        let y0 = self.spine.tail_threshold();
        if gamma <= self.m_y0 {
            return y0 + (gamma / self.m_y0).ln() / (T::one() + self.spine.left_rate());
        }
        let k = (self.cum.partition_point(|c| *c <= gamma).max(1) - 1).min(self.edges.len() - 2);
        let (mut lo, mut hi) = (self.edges[k], self.edges[k + 1]);
        let gl = GaussLegendre::<T>::new(10);
        let target = gamma - self.cum[k];
        let mut x = lo + (hi - lo) * (target / (self.cum[k + 1] - self.cum[k])).min(T::one());
        for _ in 0..60 {
            let g = gl.integrate(|v| v.exp() * self.spine.density(v), self.edges[k], x) - target;
            if g > T::zero() {
                hi = x;
            } else {
                lo = x;
            }
            let step = g / (x.exp() * self.spine.density(x));
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = (lo + hi) * T::lit(0.5);
            }
            if (next - x).abs() <= T::epsilon() * T::lit(4.0) * x.abs().max(T::one()) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Two children with i.i.d. `Normal(m, s^2)` displacements, `m = s^2 = 2 log 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryGaussian<T> {
    pub m: T,
    pub s2: T,
}

impl<T: Real> BinaryGaussian<T> {
    pub fn new() -> Self {
        let v = T::lit(2.0 * std::f64::consts::LN_2);
        Self { m: v, s2: v }
    }

    /// Spine variance `sigma^2 = E sum V^2 e^{-V}`.
    pub fn sigma2(&self) -> T {
        self.s2
    }

    /// `pi^2 sigma^2 / 2`.
    pub fn cstar(&self) -> T {
        T::PI() * T::PI() * self.sigma2() / T::lit(2.0)
    }
}

impl<T: Real> Default for BinaryGaussian<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OffspringModel<T> {
    PoissonBoundary(PoissonBoundary<T>),
    BinaryGaussian(BinaryGaussian<T>),
}

pub fn make_poisson_boundary_model<T: Real>(spine: SpineLaw<T>, right_cut: T) -> Result<OffspringModel<T>> {
    Ok(OffspringModel::PoissonBoundary(PoissonBoundary::new(spine, right_cut, 1e-3)?))
}

pub fn make_binary_gaussian_model<T: Real>() -> OffspringModel<T> {
    OffspringModel::BinaryGaussian(BinaryGaussian::new())
}

/// Output of [`OffspringModel::sample_brood`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Brood<T> {
    /// `(position, key)` of materialized children inside the barriers.
    pub children: Vec<(T, u64)>,
    /// Full brood size, counting children the barrier removed. Zero when
    /// the brood was discarded by the cap.
    pub total: u64,
    pub discarded_by_cap: bool,
}

impl<T: Real> OffspringModel<T> {
    pub fn alpha(&self) -> StabilityIndex<T> {
        match self {
            Self::PoissonBoundary(p) => p.spine.alpha(),
            Self::BinaryGaussian(_) => StabilityIndex::new(T::lit(2.0)).expect("2 is valid"),
        }
    }

    /// Closed-form confinement constant where one exists.
    pub fn cstar_closed_form(&self) -> Option<T> {
        match self {
            Self::BinaryGaussian(b) => Some(b.cstar()),
            Self::PoissonBoundary(_) => None,
        }
    }

    /// Per-generation right-cut bias `c T^{-alpha}` (zero for the Gaussian model).
    pub fn cut_bias(&self) -> f64 {
        match self {
            Self::PoissonBoundary(p) => p.defect().mass,
            Self::BinaryGaussian(_) => 0.0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::PoissonBoundary(_) => "poisson_boundary",
            Self::BinaryGaussian(_) => "binary_gaussian",
        }
    }

    /// Brood of the node `(trial_seed, key)` at `parent`. Children above
    /// `upper` are never kept, children below `lower` are removed; with a
    /// cap, a brood whose full size exceeds it is discarded whole. The same
    /// node always draws the same randomness, whatever the barriers.
    #[allow(clippy::too_many_arguments)]
    pub fn sample_brood(
        &self,
        parent: T,
        key: u64,
        trial_seed: u64,
        upper: T,
        lower: T,
        cap: Option<u64>,
        out: &mut Brood<T>,
    ) -> Result<()> {
        out.children.clear();
        out.total = 0;
        out.discarded_by_cap = false;
        let mut rng = node_rng(trial_seed, key);
        match self {
            Self::BinaryGaussian(b) => {
                let s = b.s2.sqrt();
                for j in 0..2u64 {
                    let z: f64 = rng.sample(StandardNormal);
                    let x = parent + b.m + s * T::lit(z);
                    if x <= upper && x >= lower {
                        out.children.push((x, child_key(key, j)));
                    }
                }
                out.total = 2;
            }
            Self::PoissonBoundary(p) => {
                let room = (upper - parent).min(p.right_cut);
                let limit = p.cumulative(room);
                let mut gamma = T::zero();
                let mut j = 0u64;
                loop {
                    let u: f64 = rng.sample(Open01);
                    gamma = gamma - T::lit(u).ln();
                    if gamma > limit {
                        break;
                    }
                    if j as usize >= p.brood_budget {
                        return Err(Error::BudgetExceeded(format!(
                            "brood above {} children (intensity mass {})",
                            p.brood_budget,
                            limit.as_f64()
                        )));
                    }
                    let x = parent + p.inverse_cumulative(gamma);
                    if x <= upper && x >= lower {
                        out.children.push((x, child_key(key, j)));
                    }
                    j += 1;
                }
                out.total = j;
                if cap.is_some() {
                    let rest = (p.mean_brood() - limit).max(T::zero()).as_f64();
                    if rest > 0.0 {
                        let mut salted = node_rng(trial_seed, mix(key, BROOD_SALT));
                        out.total += Poisson::new(rest).map(|d| d.sample(&mut salted) as u64).unwrap_or(0);
                    }
                }
            }
        }
        if cap.is_some_and(|r| out.total > r) {
            out.children.clear();
            out.discarded_by_cap = true;
        }
        Ok(())
    }

    /// Palm (size-biased) law of one spine step and its brood mark: the step
    /// follows `nu_X`, the mark is the size of the brood the spine child was
    /// born into.
    pub fn palm_step(&self) -> PalmStep<'_, T> {
        PalmStep { model: self }
    }
}

/// Spine step with brood mark, for walks under the many-to-one change of measure.
#[derive(Debug, Clone, Copy)]
pub struct PalmStep<'a, T> {
    model: &'a OffspringModel<T>,
}

impl<T: Real> StepLaw<T> for PalmStep<'_, T> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.sample_marked(rng).0
    }

    fn sample_marked<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, u64) {
        match self.model {
            OffspringModel::BinaryGaussian(b) => {
                let z: f64 = rng.sample(StandardNormal);
                (b.s2.sqrt() * T::lit(z) + b.m - b.s2, 2)
            }
            OffspringModel::PoissonBoundary(p) => {
                let x = p.spine.sample(rng);
                let extra = Poisson::new(p.mean_brood().as_f64()).map(|d| d.sample(rng) as u64).unwrap_or(0);
                (x, 1 + extra)
            }
        }
    }

    fn cdf(&self, x: T) -> T {
        match self.model {
            OffspringModel::BinaryGaussian(b) => T::lit(normal_cdf(((x - b.m + b.s2) / b.s2.sqrt()).as_f64())),
            OffspringModel::PoissonBoundary(p) => p.spine.cdf(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, QuadOptions};

    fn spine(c: f64, y0: f64) -> SpineLaw<f64> {
        SpineLaw::pareto(StabilityIndex::new(1.5).unwrap(), c, y0).unwrap()
    }

    #[test]
    fn defect_is_exact() {
        let p = PoissonBoundary::new(spine(1.0, 2.0), 100.0, 1e-3).unwrap();
        assert!((p.defect().mass - 1e-3).abs() < 1e-15);
        let e = PoissonBoundary::new(spine(1.0, 2.0), 50.0, 1e-3).unwrap_err();
        assert!(matches!(e, Error::DefectAboveBudget { .. }));
    }

    #[test]
    fn cumulative_matches_quadrature_and_inverts() {
        let s = spine(1e-3, 0.25);
        let p = PoissonBoundary::new(s, 1.0, 1e-3).unwrap();
        for v in [-3.0, 0.0, 0.25, 0.4, 0.77, 1.0] {
            let q = integrate(|x: f64| x.exp() * s.density(x), -60.0, v, QuadOptions::tol(1e-14, 1e-12)).unwrap();
            let q = if v > 0.25 {
                integrate(|x: f64| x.exp() * s.density(x), -60.0, 0.25, QuadOptions::default()).unwrap().value
                    + integrate(|x: f64| x.exp() * s.density(x), 0.25, v, QuadOptions::default()).unwrap().value
            } else {
                q.value
            };
            assert!((p.cumulative(v) - q).abs() < 1e-12, "v={v}");
            assert!((p.inverse_cumulative(p.cumulative(v)) - v).abs() < 1e-10, "v={v}");
        }
    }

    #[test]
    fn empty_brood_without_room() {
        let m = make_poisson_boundary_model(spine(1e-3, 0.25), 1.0).unwrap();
        let mut b = Brood::default();
        m.sample_brood(0.0, 1, 7, -1e4, f64::NEG_INFINITY, None, &mut b).unwrap();
        assert!(b.children.is_empty());
    }

    #[test]
    fn cap_one_keeps_at_most_one() {
        let m = make_binary_gaussian_model::<f64>();
        let mut b = Brood::default();
        for key in 0..100 {
            m.sample_brood(0.0, key, 3, f64::INFINITY, f64::NEG_INFINITY, Some(1), &mut b).unwrap();
            assert!(b.children.is_empty() && b.discarded_by_cap);
        }
        let p = make_poisson_boundary_model(spine(1e-3, 0.25), 1.0).unwrap();
        for key in 0..2000 {
            p.sample_brood(0.0, key, 3, f64::INFINITY, f64::NEG_INFINITY, Some(1), &mut b).unwrap();
            assert!(b.children.len() <= 1);
        }
    }

    #[test]
    fn raising_barrier_appends_children() {
        let p = make_poisson_boundary_model(spine(1e-3, 0.25), 1.0).unwrap();
        let (mut lo, mut hi) = (Brood::default(), Brood::default());
        for key in 0..500 {
            p.sample_brood(0.0, key, 11, -0.5, f64::NEG_INFINITY, None, &mut lo).unwrap();
            p.sample_brood(0.0, key, 11, 0.3, f64::NEG_INFINITY, None, &mut hi).unwrap();
            assert!(lo.children.iter().all(|c| hi.children.contains(c)));
        }
    }

    #[test]
    fn binary_calibration_is_exact() {
        let b = BinaryGaussian::<f64>::new();
        let (m, s2) = (b.m, b.s2);
        assert!((2.0 * (-m + s2 / 2.0).exp() - 1.0).abs() < 1e-15);
        assert!((2.0 * (m - s2) * (-m + s2 / 2.0).exp()).abs() < 1e-15);
        assert!((b.cstar() - std::f64::consts::PI.powi(2) * std::f64::consts::LN_2).abs() < 1e-13);
    }
}
