use thiserror::Error;

/// Errors raised by model construction, numerical routines and experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("stability index alpha = {0} outside (1, 2]")]
    InvalidAlpha(f64),

    #[error("Pareto tail mass c * y0^-alpha = {0} must be < 1")]
    TailMassTooLarge(f64),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exponential moment E[exp(-rho X)] diverges: rho = {rho} >= left rate {left_rate}")]
    MomentDiverges { rho: f64, left_rate: f64 },

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {error})")]
    QuadratureFailed { a: f64, b: f64, error: f64 },

    #[error("integral diverges: {0}")]
    DivergentIntegral(String),

    #[error("power iteration did not converge after {iterations} iterations")]
    EigenNotConverged { iterations: usize },

    #[error("particle ensemble went extinct at t = {time}; increase particles or reduce dt")]
    EnsembleExtinct { time: f64 },

    #[error("ODE integration failed: {0}")]
    OdeFailed(String),

    #[error("no blow-down within t_budget = {t_budget}: a looks at or above the critical value")]
    NoBlowDown { t_budget: f64 },

    #[error("a = {a} is not above a_alpha = {a_alpha}; the equation f(x) = a has no pair of roots")]
    BelowCritical { a: f64, a_alpha: f64 },

    #[error("a = {a} is not below a_alpha = {a_alpha}")]
    AboveCritical { a: f64, a_alpha: f64 },

    #[error("profile h vanishes at t = {0} inside (0, 1); use the rescaled solution")]
    ProfileVanishes(f64),

    #[error("bracket [{lo}, {hi}] does not straddle the threshold {threshold} (s_lo = {s_lo}, s_hi = {s_hi})")]
    BracketInvalid { lo: f64, hi: f64, threshold: f64, s_lo: f64, s_hi: f64 },

    #[error("right cut T leaves boundary defect {defect} above budget {budget}")]
    DefectAboveBudget { defect: f64, budget: f64 },

    #[error("fit residual {residual} above tolerance {tolerance}")]
    FitInconsistent { residual: f64, tolerance: f64 },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("tube/pmf mismatch: {0}")]
    Mismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
