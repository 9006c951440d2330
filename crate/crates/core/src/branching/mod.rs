//! Branching random walks with absorbing barriers.
//!
//! Every individual draws its brood from a generator keyed by the trial seed
//! and its own genealogical key, so runs that differ only in the barrier see
//! the same tree: raising the barrier can add individuals but never remove
//! one.

pub mod barrier;
pub mod corridor;
pub mod many_to_one;
pub mod model;
pub mod survival;

pub use barrier::BarrierSpec;
pub use corridor::{
    bn_experiment, cap_r, paley_zygmund, two_barrier_count, two_barrier_samples, BnConfig, BnReport, PzReport,
    TwoBarrierConfig, TwoBarrierSamples,
};
pub use many_to_one::{many_to_one_check, Functional, ManyToOneResult};
pub use model::{
    make_binary_gaussian_model, make_poisson_boundary_model, BinaryGaussian, BoundaryDefect, Brood, OffspringModel,
    PalmStep, PoissonBoundary,
};
pub use survival::{
    critical_a_search, linear_barrier_check, run_population, survival_curve, survival_outcomes, survival_prob,
    CrossingEstimate, Flow, OverflowPolicy, Population, RunLimits, RunOutcome, SurvivalConfig, SurvivalCurve,
    SurvivalEstimate,
};
