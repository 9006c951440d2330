//! Branching random walks whose spine lies in the domain of attraction of a
//! spectrally positive alpha-stable law, killed above the barrier
//! `a i^{1/(1+alpha)}`.
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`). The aliases below fix it to `f64`, which is what the
//! harness and CLI use.
//!
//! Parameter checks are written as `!(x > 0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod branching;
pub mod critical_ode;
pub mod error;
pub mod harness;
pub mod kv;
pub mod numerics;
pub mod rng;
pub mod scalar;
pub mod spine_law;
pub mod stable_process;
pub mod stats;
pub mod tube_prob;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Alpha = spine_law::StabilityIndex<f64>;
pub type Spine = spine_law::SpineLaw<f64>;
pub type Stable = stable_process::StableSpec<f64>;
pub type Tube = tube_prob::TubeSpec<f64>;
pub type Model = branching::OffspringModel<f64>;
pub type Barrier = branching::BarrierSpec<f64>;
pub type OdeSolution = critical_ode::OdeSolveResult<f64>;
pub type Corridor = critical_ode::CorridorFunctions<f64>;
