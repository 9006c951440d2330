//! Experiment orchestration: typed configuration, dispatch, and the
//! `records.jsonl` / `summary.csv` / `report.txt` artifacts.
//!
//! A configuration is a [`KvBlock`] plus an experiment kind. Every parameter
//! block is parsed and validated into a [`Plan`] before any computation, so a
//! bad value fails fast and names the offending key.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::branching::{
    bn_experiment, critical_a_search, make_binary_gaussian_model, make_poisson_boundary_model, many_to_one_check,
    paley_zygmund, survival_curve, survival_prob, two_barrier_samples, BarrierSpec, BnConfig, Functional,
    OffspringModel, SurvivalConfig, TwoBarrierConfig,
};
use crate::critical_ode::{a_alpha, decay_k, r_a, solve_h, SolveOptions};
use crate::error::{Error, Result};
use crate::kv::KvBlock;
use crate::rng::{stage, Streams};
use crate::spine_law::{validate_boundary_tail, GaussianStep, SpineLaw, StabilityIndex};
use crate::stable_process::{
    cstar_closed_form, estimate_cstar_mc, estimate_cstar_spectral, extract_c0, CstarEstimate, CstarMcConfig, StableSpec,
};
use crate::tube_prob::{empirical_rate, RateConfig, TubeSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Points of the Levy-exponent fit used to read off `c0` from a Pareto tail.
const C0_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Calibrate,
    Cstar,
    Tube,
    ManyToOne,
    Survival,
    Critical,
    Ode,
    Bn,
    Pipeline,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        Self::Calibrate,
        Self::Cstar,
        Self::Tube,
        Self::ManyToOne,
        Self::Survival,
        Self::Critical,
        Self::Ode,
        Self::Bn,
        Self::Pipeline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Calibrate => "calibrate",
            Self::Cstar => "cstar",
            Self::Tube => "tube",
            Self::ManyToOne => "manytoone",
            Self::Survival => "survival",
            Self::Critical => "critical",
            Self::Ode => "ode",
            Self::Bn => "bn",
            Self::Pipeline => "pipeline",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

/// An experiment request: kind, flat parameter block, seed and output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    pub params: KvBlock,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// `seed` and `out` are read from the block when present; the rest stays
    /// in `params`.
    pub fn new(kind: ExperimentKind, mut params: KvBlock) -> Result<Self> {
        let seed = params.u64("seed")?.unwrap_or(1);
        let out = params.get("out").map(PathBuf::from);
        params.remove("seed");
        params.remove("out");
        Ok(Self { kind, params, seed, out })
    }

    /// Config file text; the kind comes from a `kind = ...` line.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut kv = KvBlock::parse(text)?;
        let kind = kv.get("kind").ok_or_else(|| Error::Config("missing `kind`".into()))?.parse()?;
        kv.remove("kind");
        Self::new(kind, kv)
    }

    /// First 16 hex digits of SHA-256 over kind, seed and the sorted
    /// parameters. The output directory does not enter the hash.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("kind = {}\nseed = {}\n", self.kind.as_str(), self.seed));
        h.update(self.params.render());
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<Plan> {
        Plan::from_config(self)
    }
}

/// Offspring model choice with everything needed to build it.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    BinaryGaussian,
    PoissonBoundary { spine: SpineLaw<f64>, cut: f64, cstar: Option<f64> },
}

impl ModelSpec {
    fn from_kv(kv: &KvBlock, alpha: StabilityIndex<f64>) -> Result<Self> {
        let default = if kv.get("c").is_some() { "poisson_boundary" } else { "binary_gaussian" };
        match kv.get("model").unwrap_or(default) {
            "binary_gaussian" => {
                if !alpha.is_gaussian() {
                    return Err(Error::Config("binary_gaussian requires alpha = 2".into()));
                }
                Ok(Self::BinaryGaussian)
            }
            "poisson_boundary" => {
                let spine = SpineLaw::pareto(alpha, kv.require_f64("c")?, kv.f64("y0")?.unwrap_or(0.25))?;
                // Default: the smallest cut (at least 1) whose defect c T^{-alpha} stays within 1e-3.
                let cut = match kv.f64("cut-t")? {
                    Some(t) => t,
                    None => ((spine.tail_const() / 1e-3).powf(1.0 / alpha.get()) * (1.0 + 1e-9)).max(1.0),
                };
                let cstar = kv.f64("cstar")?;
                // Fails here if the right cut leaves too much defect.
                make_poisson_boundary_model(spine, cut)?;
                Ok(Self::PoissonBoundary { spine, cut, cstar })
            }
            other => Err(Error::Config(format!("unknown model `{other}`"))),
        }
    }

    pub fn build(&self) -> Result<OffspringModel<f64>> {
        match self {
            Self::BinaryGaussian => Ok(make_binary_gaussian_model()),
            Self::PoissonBoundary { spine, cut, .. } => make_poisson_boundary_model(*spine, *cut),
        }
    }

    /// Known or configured `C_*`, else a spectral estimate from the spine tail.
    pub fn cstar(&self) -> Result<CstarEstimate> {
        match self {
            Self::BinaryGaussian => cstar_closed_form(&StableSpec::gaussian((2.0 * std::f64::consts::LN_2).sqrt())?),
            Self::PoissonBoundary { spine, cstar, .. } => {
                let fit = extract_c0(spine.alpha(), spine.tail_const(), &C0_GRID, 1e-6)?;
                let spec = StableSpec::new(spine.alpha(), fit.c0)?;
                match cstar {
                    Some(v) => Ok(CstarEstimate {
                        alpha: spine.alpha().get(),
                        c0: fit.c0,
                        method: crate::stable_process::CstarMethod::Configured,
                        value: *v,
                        std_error: 0.0,
                        dt: None,
                        n_bins: None,
                        particles: None,
                        raw: None,
                    }),
                    None => estimate_cstar_spectral(&spec, 1e-3, 400),
                }
            }
        }
    }
}

/// Stable limit for `cstar`/`tube`: `sigma` for `alpha = 2`, else `c0`
/// directly or via the tail constant `c`.
fn stable_spec(kv: &KvBlock, alpha: StabilityIndex<f64>) -> Result<StableSpec<f64>> {
    if alpha.is_gaussian() && kv.get("c0").is_none() {
        return StableSpec::gaussian(kv.f64("sigma")?.unwrap_or(1.0));
    }
    let c0 = match (kv.f64("c0")?, kv.f64("c")?) {
        (Some(c0), _) => c0,
        (None, Some(c)) => extract_c0(alpha, c, &C0_GRID, 1e-6)?.c0,
        (None, None) => return Err(Error::Config("alpha < 2 needs `c0` or `c`".into())),
    };
    StableSpec::new(alpha, c0)
}

/// `cstar` as given, the closed form for `alpha = 2` (scale `sigma`), or a
/// spectral estimate from the tail constant `c`.
fn cstar_from_kv(kv: &KvBlock, alpha: StabilityIndex<f64>) -> Result<f64> {
    if let Some(v) = kv.f64("cstar")? {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param("cstar", "must be positive"));
        }
        return Ok(v);
    }
    if alpha.is_gaussian() && kv.get("c").is_none() {
        return Ok(std::f64::consts::PI.powi(2) * kv.f64("sigma")?.unwrap_or(1.0).powi(2) / 2.0);
    }
    if kv.get("c").is_none() {
        return Err(Error::Config("alpha < 2 needs `cstar` or `c`".into()));
    }
    let spec = stable_spec(kv, alpha)?;
    Ok(estimate_cstar_spectral(&spec, 1e-3, 400)?.value)
}

fn usize_list(kv: &KvBlock, key: &str, default: &[usize]) -> Result<Vec<usize>> {
    match kv.f64_list(key)? {
        None => Ok(default.to_vec()),
        Some(v) => v
            .into_iter()
            .map(|x| {
                if x >= 1.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(Error::Config(format!("`{key}`: expected positive integers")))
                }
            })
            .collect(),
    }
}

/// `threshold` (absolute) or `threshold-rel` (default 0.5 of the survival
/// at the top of the bracket).
fn threshold_from_kv(kv: &KvBlock) -> Result<Threshold> {
    let t = match kv.f64("threshold")? {
        Some(x) => Threshold::Absolute(x),
        None => Threshold::Relative(kv.f64("threshold-rel")?.unwrap_or(0.5)),
    };
    let (Threshold::Absolute(x) | Threshold::Relative(x)) = t;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Config("crossing threshold must lie in (0, 1)".into()));
    }
    Ok(t)
}

fn u64_or(kv: &KvBlock, key: &str, default: u64) -> Result<u64> {
    Ok(kv.u64(key)?.unwrap_or(default))
}

/// Barrier coefficients: `a` as absolute values, or `a-frac` as multiples of `a_alpha`.
fn a_values(kv: &KvBlock, a_crit: f64, default_frac: &[f64]) -> Result<Vec<f64>> {
    match (kv.f64_list("a")?, kv.f64_list("a-frac")?) {
        (Some(a), _) => Ok(a),
        (None, Some(f)) => Ok(f.iter().map(|x| x * a_crit).collect()),
        (None, None) => Ok(default_frac.iter().map(|x| x * a_crit).collect()),
    }
}

fn survival_cfg(kv: &KvBlock, n: u64) -> Result<SurvivalConfig> {
    let cap = kv.u64("cap-r")?;
    Ok(SurvivalConfig::new(n, u64_or(kv, "trials", 1000)?).max_pop(u64_or(kv, "max-pop", 10_000)? as usize).cap(cap))
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Calibrate {
        spine: SpineLaw<f64>,
        probe: Vec<f64>,
        varrho: f64,
    },
    Cstar {
        spec: StableSpec<f64>,
        mc: Option<CstarMcConfig>,
        spectral: Option<(f64, usize)>,
    },
    Tube {
        spec: StableSpec<f64>,
        law: TubeLaw,
        width: f64,
        n_list: Vec<usize>,
        rate: RateConfig,
    },
    ManyToOne {
        model: ModelSpec,
        n_list: Vec<usize>,
        functionals: Vec<Functional>,
        trials: u64,
    },
    Survival {
        model: ModelSpec,
        a_frac: Option<Vec<f64>>,
        a_abs: Option<Vec<f64>>,
        n_list: Vec<u64>,
        cfg: SurvivalConfig,
        /// Crossing search per horizon, when requested.
        search: Option<CrossingSearch>,
    },
    /// `alpha`, `C_*`, `a_alpha`, `r_a`, `t_max` and `K` for each `a`.
    Critical {
        alpha: StabilityIndex<f64>,
        cstar: f64,
        a: Vec<f64>,
        h0: f64,
    },
    Ode {
        alpha: StabilityIndex<f64>,
        cstar: f64,
        a: Vec<f64>,
        h0: f64,
    },
    Bn {
        model: ModelSpec,
        a_frac: f64,
        /// Absolute coefficient; overrides `a_frac`.
        a_abs: Option<f64>,
        base: u64,
        k_max: u32,
        eps: Option<f64>,
        trials: u64,
        max_pop: usize,
        /// Corridor width, level and cap for the two-barrier count, if requested.
        corridor: Option<(f64, u32, Option<u64>)>,
    },
    Pipeline {
        model: ModelSpec,
        n_list: Vec<u64>,
        a_frac: Vec<f64>,
        threshold: Threshold,
        cfg: SurvivalConfig,
        mc: CstarMcConfig,
    },
}

/// Finite-`n` crossing search over a bracket given in multiples of `a_alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingSearch {
    pub bracket: (f64, f64),
    pub threshold: Threshold,
    pub steps: usize,
}

/// Survival level whose crossing in `a` is searched for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Absolute(f64),
    /// Fraction of the survival probability at the top of the bracket, which
    /// keeps the search meaningful when extinction of the unkilled tree
    /// already dominates.
    Relative(f64),
}

/// Step law driving the tube experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum TubeLaw {
    Gaussian(GaussianStep<f64>),
    Pareto(SpineLaw<f64>),
}

impl Plan {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        let kv = &cfg.params;
        let alpha = StabilityIndex::new(kv.f64("alpha")?.unwrap_or(2.0))?;
        let plan = match cfg.kind {
            ExperimentKind::Calibrate => {
                let spine = SpineLaw::pareto(alpha, kv.require_f64("c")?, kv.require_f64("y0")?)?;
                let y0 = spine.tail_threshold();
                let probe = kv.f64_list("probe")?.unwrap_or_else(|| (0..6).map(|k| y0 * 4f64.powi(k)).collect());
                let varrho = kv.f64("varrho")?.unwrap_or(0.5 * spine.left_rate());
                Plan::Calibrate { spine, probe, varrho }
            }
            ExperimentKind::Cstar => {
                let spec = stable_spec(kv, alpha)?;
                let method = kv.get("method").unwrap_or("both");
                let dt = kv.f64("dt")?.unwrap_or(1e-3);
                let mc = CstarMcConfig {
                    dt,
                    t_end: kv.f64("t-end")?.unwrap_or(if alpha.is_gaussian() { 4.0 } else { 6.0 }),
                    n_particles: u64_or(kv, "particles", 10_000)? as usize,
                    ..Default::default()
                };
                let nb = u64_or(kv, "n-bins", 400)? as usize;
                if !(dt > 0.0 && dt < 0.1) || nb < 4 {
                    return Err(Error::Config("need 0 < dt < 0.1 and n-bins >= 4".into()));
                }
                let (want_mc, want_sp) = match method {
                    "both" => (true, true),
                    "mc" => (true, false),
                    "spectral" => (false, true),
                    m => return Err(Error::Config(format!("unknown method `{m}`"))),
                };
                Plan::Cstar { spec, mc: want_mc.then_some(mc), spectral: want_sp.then_some((dt, nb)) }
            }
            ExperimentKind::Tube => {
                let spec = stable_spec(kv, alpha)?;
                let law = if alpha.is_gaussian() && kv.get("c").is_none() {
                    TubeLaw::Gaussian(GaussianStep { sigma: spec.sigma().expect("gaussian spec") })
                } else {
                    TubeLaw::Pareto(SpineLaw::pareto(alpha, kv.require_f64("c")?, kv.f64("y0")?.unwrap_or(0.25))?)
                };
                let width = kv.f64("width")?.unwrap_or(1.0);
                let n_list = usize_list(kv, "n", &[200, 400, 800])?;
                TubeSpec::centered(width, alpha, n_list[0])?;
                let rate = RateConfig {
                    particles: u64_or(kv, "particles", 10_000)? as usize,
                    replicates: u64_or(kv, "replicates", 8)? as usize,
                };
                Plan::Tube { spec, law, width, n_list, rate }
            }
            ExperimentKind::ManyToOne => {
                let model = ModelSpec::from_kv(kv, alpha)?;
                let n_list = usize_list(kv, "n", &[1, 2, 3])?;
                if n_list.iter().any(|&n| n > 6) {
                    return Err(Error::Config("`n` must lie in 1..=6".into()));
                }
                let level = kv.f64("level")?.unwrap_or(0.0);
                let functionals = match kv.get("functional").unwrap_or("both") {
                    "both" => vec![Functional::EndBelow { level }, Functional::Bivariate { level, max_brood: 3 }],
                    "end_below" => vec![Functional::EndBelow { level }],
                    "bivariate" => vec![Functional::Bivariate { level, max_brood: 3 }],
                    "tube" => vec![Functional::IndicatorTube { bound: kv.f64("bound")?.unwrap_or(2.0) }],
                    "exp_bounded" => vec![Functional::ExpBounded],
                    "one" => vec![Functional::One],
                    f => return Err(Error::Config(format!("unknown functional `{f}`"))),
                };
                Plan::ManyToOne { model, n_list, functionals, trials: u64_or(kv, "trials", 10_000)? }
            }
            ExperimentKind::Survival => {
                let model = ModelSpec::from_kv(kv, alpha)?;
                let n_list: Vec<u64> = usize_list(kv, "n", &[500])?.into_iter().map(|n| n as u64).collect();
                let search = match kv.get("search").unwrap_or("false") {
                    "false" => None,
                    "true" => {
                        let b = kv.f64_list("bracket")?.unwrap_or_else(|| vec![0.3, 2.0]);
                        if b.len() != 2 || !(0.0 < b[0] && b[0] < b[1]) {
                            return Err(Error::Config("`bracket` must be two increasing fractions of a_alpha".into()));
                        }
                        Some(CrossingSearch {
                            bracket: (b[0], b[1]),
                            threshold: threshold_from_kv(kv)?,
                            steps: u64_or(kv, "steps", 6)? as usize,
                        })
                    }
                    v => return Err(Error::Config(format!("`search` must be true or false, got `{v}`"))),
                };
                Plan::Survival {
                    model,
                    a_frac: kv.f64_list("a-frac")?,
                    a_abs: kv.f64_list("a")?,
                    n_list,
                    cfg: survival_cfg(kv, 1)?,
                    search,
                }
            }
            ExperimentKind::Critical => {
                let cstar = cstar_from_kv(kv, alpha)?;
                let crit = a_alpha(alpha, cstar);
                let a = a_values(kv, crit, &[0.5, 0.9, 1.1, 1.5])?;
                if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                    return Err(Error::param("a", "must be positive"));
                }
                Plan::Critical { alpha, cstar, a, h0: kv.f64("h0")?.unwrap_or(1.0) }
            }
            ExperimentKind::Ode => {
                let cstar = cstar_from_kv(kv, alpha)?;
                let crit = a_alpha(alpha, cstar);
                let a = a_values(kv, crit, &[0.1, 0.3, 0.5, 0.7, 0.9])?;
                if a.iter().any(|&x| x >= crit || x < 0.0) {
                    return Err(Error::AboveCritical { a: a.iter().copied().fold(0.0, f64::max), a_alpha: crit });
                }
                Plan::Ode { alpha, cstar, a, h0: kv.f64("h0")?.unwrap_or(1.0) }
            }
            ExperimentKind::Bn => {
                let model = ModelSpec::from_kv(kv, alpha)?;
                let base = match (kv.u64("base")?, kv.f64("lambda")?) {
                    (Some(b), _) => b,
                    (None, Some(l)) => {
                        let b = l.exp().round();
                        if (b.ln() - l).abs() > 1e-9 || b < 2.0 {
                            return Err(Error::Config("`lambda` must be the log of an integer >= 2".into()));
                        }
                        b as u64
                    }
                    (None, None) => 4,
                };
                Plan::Bn {
                    model,
                    a_frac: kv.f64("a-frac")?.unwrap_or(1.5),
                    a_abs: kv.f64("a")?,
                    base,
                    k_max: u64_or(kv, "k-max", 3)? as u32,
                    eps: kv.f64("eps")?,
                    trials: u64_or(kv, "trials", 10_000)?,
                    max_pop: u64_or(kv, "max-pop", 1000)? as usize,
                    corridor: match kv.f64("b")? {
                        Some(b) => Some((b, u64_or(kv, "k", 1)? as u32, kv.u64("cap-r")?)),
                        None => None,
                    },
                }
            }
            ExperimentKind::Pipeline => {
                let model = ModelSpec::from_kv(kv, alpha)?;
                let n_list: Vec<u64> = usize_list(kv, "n", &[250, 500, 1000])?.into_iter().map(|n| n as u64).collect();
                let mc = CstarMcConfig {
                    dt: kv.f64("dt")?.unwrap_or(1e-3),
                    t_end: kv.f64("t-end")?.unwrap_or(if alpha.is_gaussian() { 4.0 } else { 6.0 }),
                    n_particles: u64_or(kv, "particles", 5_000)? as usize,
                    ..Default::default()
                };
                Plan::Pipeline {
                    model,
                    n_list,
                    a_frac: kv.f64_list("a-frac")?.unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0, 1.5]),
                    threshold: threshold_from_kv(kv)?,
                    cfg: survival_cfg(kv, 1)?,
                    mc,
                }
            }
        };
        Ok(plan)
    }
}

/// Critical constants at one barrier coefficient. `r_a` exists for
/// `a >= a_alpha`, `t_max` and `K` for `a < a_alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub alpha: f64,
    pub cstar: f64,
    pub a: f64,
    pub a_alpha: f64,
    pub r_a: Option<f64>,
    pub t_max: Option<f64>,
    pub k: Option<f64>,
}

impl CriticalRow {
    pub const CSV_HEADER: &'static str = "alpha,cstar,a,a_alpha,r_a,t_max,K";

    pub fn csv(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{}",
            self.alpha,
            self.cstar,
            self.a,
            self.a_alpha,
            o(self.r_a),
            o(self.t_max),
            o(self.k)
        )
    }
}

/// One plot-ready summary line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub value: f64,
    pub std_error: f64,
    /// Closed-form or predicted comparison value, if any.
    pub reference: Option<f64>,
}

impl SummaryRow {
    fn new(metric: impl Into<String>, value: f64, std_error: f64, reference: Option<f64>) -> Self {
        Self { metric: metric.into(), value, std_error, reference }
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub records: Vec<Value>,
    pub summary: Vec<SummaryRow>,
    pub report: String,
    /// Set when a stage failed; the records before it are kept.
    pub truncated: Option<String>,
}

/// Records, summary rows and report lines gathered by a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageOutput {
    pub records: Vec<Value>,
    pub summary: Vec<SummaryRow>,
    pub report: String,
}

impl StageOutput {
    fn record(&mut self, stage: &str, v: impl Serialize) {
        let mut v = serde_json::to_value(v).expect("records serialize");
        if let Value::Object(m) = &mut v {
            m.insert("stage".into(), json!(stage));
        } else {
            v = json!({ "stage": stage, "value": v });
        }
        self.records.push(v);
    }

    fn row(&mut self, row: SummaryRow) {
        self.summary.push(row);
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.report.push_str(text.as_ref());
        self.report.push('\n');
    }
}

/// Validates, runs, and writes artifacts when `out` is set. On a stage
/// failure the partial artifacts are written with a truncation marker and
/// the error is returned.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    let plan = config.validate()?;
    let start = Instant::now();
    let mut sink = StageOutput::default();
    sink.line(format!("experiment: {}", config.kind.as_str()));
    sink.line(format!("config hash: {}", config.hash()));
    sink.line(format!("seed: {}", config.seed));
    let streams = Streams::new(config.seed);
    let outcome = execute(&plan, &streams, &mut sink);
    let record = RunRecord {
        config_hash: config.hash(),
        kind: config.kind,
        seed: config.seed,
        version: VERSION.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        records: sink.records,
        summary: sink.summary,
        report: sink.report,
        truncated: outcome.as_ref().err().map(ToString::to_string),
    };
    if let Some(dir) = &config.out {
        write_artifacts(&record, dir)?;
    }
    outcome.map(|()| record)
}

/// `records.jsonl`, `summary.csv` and `report.txt` under `dir`.
pub fn write_artifacts(record: &RunRecord, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut jl = fs::File::create(dir.join("records.jsonl"))?;
    for r in &record.records {
        let mut r = r.clone();
        if let Value::Object(m) = &mut r {
            m.insert("config_hash".into(), json!(record.config_hash));
        }
        writeln!(jl, "{r}")?;
    }
    let meta = json!({
        "stage": "meta",
        "config_hash": record.config_hash,
        "kind": record.kind,
        "seed": record.seed,
        "version": record.version,
        "wall_time_s": record.wall_time_s,
        "truncated": record.truncated,
    });
    writeln!(jl, "{meta}")?;

    let mut csv = String::from("config_hash,kind,metric,value,std_error,reference\n");
    for r in &record.summary {
        let reference = r.reference.map(|v| format!("{v:e}")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{:e},{:e},{}",
            record.config_hash,
            record.kind.as_str(),
            r.metric,
            r.value,
            r.std_error,
            reference
        );
    }
    if let Some(t) = &record.truncated {
        let _ = writeln!(csv, "{},{},truncated,,,{}", record.config_hash, record.kind.as_str(), t.replace(',', ";"));
    }
    fs::write(dir.join("summary.csv"), csv)?;

    let mut report = record.report.clone();
    let _ = writeln!(report, "wall time: {:.2} s", record.wall_time_s);
    let _ = writeln!(report, "version: {}", record.version);
    if let Some(t) = &record.truncated {
        let _ = writeln!(report, "TRUNCATED: {t}");
    }
    fs::write(dir.join("report.txt"), report)?;
    Ok(())
}

fn execute(plan: &Plan, streams: &Streams, sink: &mut StageOutput) -> Result<()> {
    match plan {
        Plan::Calibrate { spine, probe, varrho } => calibrate(spine, probe, *varrho, sink).map(|_| ()),
        Plan::Cstar { spec, mc, spectral } => cstar(spec, mc.as_ref(), *spectral, streams, sink).map(|_| ()),
        Plan::Tube { spec, law, width, n_list, rate } => tube(spec, law, *width, n_list, *rate, streams, sink),
        Plan::ManyToOne { model, n_list, functionals, trials } => {
            let m = model.build()?;
            sink.line(format!("model: {}, right-cut bias per generation {:.3e}", m.kind(), m.cut_bias()));
            for &n in n_list {
                for &f in functionals {
                    let r = many_to_one_check(&m, n, f, *trials, &streams.stage(n as u64))?;
                    sink.line(format!(
                        "n = {n} {:?}: tree {:.5} +- {:.5}, walk {:.5} +- {:.5}, bias {:.1e}, overlap {}",
                        f, r.left.value, r.left.std_error, r.right.value, r.right.std_error, r.bias, r.overlap
                    ));
                    sink.row(SummaryRow::new(
                        format!("tree_n{n}_{}", functional_tag(&f)),
                        r.left.value,
                        r.left.std_error,
                        None,
                    ));
                    sink.row(SummaryRow::new(
                        format!("walk_n{n}_{}", functional_tag(&f)),
                        r.right.value,
                        r.right.std_error,
                        None,
                    ));
                    sink.record("many_to_one", &r);
                }
            }
            Ok(())
        }
        Plan::Survival { model, a_frac, a_abs, n_list, cfg, search } => {
            let m = model.build()?;
            let cs = model.cstar().map_err(|e| e.in_stage("cstar"))?;
            let crit = a_alpha(m.alpha(), cs.value);
            let grid = match (a_abs, a_frac) {
                (Some(a), _) => a.clone(),
                (None, Some(f)) => f.iter().map(|x| x * crit).collect(),
                (None, None) => [0.3, 0.6, 1.0, 1.5, 2.0].iter().map(|x| x * crit).collect(),
            };
            sink.line(format!("model: {}, C_* = {:.6}, a_alpha = {:.6}", m.kind(), cs.value, crit));
            for &n in n_list {
                survival_stage(&m, &grid, crit, &SurvivalConfig { n, ..*cfg }, streams, sink)?;
            }
            match search {
                Some(s) => critical_stage(
                    &m,
                    n_list,
                    (s.bracket.0 * crit, s.bracket.1 * crit),
                    s.threshold,
                    s.steps,
                    cfg,
                    crit,
                    streams,
                    sink,
                ),
                None => Ok(()),
            }
        }
        Plan::Critical { alpha, cstar, a, h0 } => {
            let crit = a_alpha(*alpha, *cstar);
            sink.line(format!("alpha = {}, C_* = {:.6}, a_alpha = {:.6}", alpha.get(), cstar, crit));
            for &ai in a {
                let ra = r_a(ai, *alpha, *cstar).ok();
                // Near a_alpha the blow-down time can exceed the solver budget; that
                // entry is left empty rather than failing the row.
                let (t_max, k) = if ai < crit {
                    (
                        solve_h(ai, *alpha, *cstar, *h0, SolveOptions::default()).ok().map(|s| s.t_max),
                        decay_k(ai, *alpha, *cstar).ok(),
                    )
                } else {
                    (None, None)
                };
                let show = |v: Option<f64>| v.map(|x| format!("{x:.8e}")).unwrap_or_else(|| "-".into());
                sink.line(format!("a = {ai:.6}: r_a = {}, t_max = {}, K = {}", show(ra), show(t_max), show(k)));
                sink.row(SummaryRow::new(format!("a_alpha_a{ai:.6}"), crit, 0.0, None));
                if let Some(r) = ra {
                    sink.row(SummaryRow::new(format!("r_a_a{ai:.6}"), r, 0.0, None));
                }
                if let Some(t) = t_max {
                    sink.row(SummaryRow::new(format!("t_max_a{ai:.6}"), t, 0.0, None));
                }
                if let Some(k) = k {
                    sink.row(SummaryRow::new(format!("K_a{ai:.6}"), k, 0.0, None));
                }
                sink.record(
                    "critical_constants",
                    CriticalRow { alpha: alpha.get(), cstar: *cstar, a: ai, a_alpha: crit, r_a: ra, t_max, k },
                );
            }
            Ok(())
        }
        Plan::Ode { alpha, cstar, a, h0 } => {
            let crit = a_alpha(*alpha, *cstar);
            sink.line(format!("alpha = {}, C_* = {:.6}, a_alpha = {:.6}", alpha.get(), cstar, crit));
            for &ai in a {
                let s = solve_h(ai, *alpha, *cstar, *h0, SolveOptions::default())?;
                let k = decay_k(ai, *alpha, *cstar)?;
                sink.line(format!(
                    "a = {ai:.6} ({:.3} a_alpha): t_max = {:.6e}, K = {:.8}, residual {:.2e}",
                    ai / crit,
                    s.t_max,
                    k,
                    s.conserved_residual
                ));
                sink.row(SummaryRow::new(format!("t_max_a{ai:.6}"), s.t_max, 0.0, None));
                sink.row(SummaryRow::new(format!("K_a{ai:.6}"), k, 0.0, None));
                sink.row(SummaryRow::new(format!("residual_a{ai:.6}"), s.conserved_residual, 0.0, None));
                let stride = (s.t_grid.len() / 200).max(1);
                let profile: Vec<[f64; 3]> =
                    (0..s.t_grid.len()).step_by(stride).map(|i| [s.t_grid[i], s.h_values[i], s.q_values[i]]).collect();
                sink.record(
                    "ode",
                    json!({ "a": ai, "h0": h0, "t_max": s.t_max, "k": k, "residual": s.conserved_residual, "profile_t_h_q": profile }),
                );
            }
            Ok(())
        }
        Plan::Bn { model, a_frac, a_abs, base, k_max, eps, trials, max_pop, corridor } => {
            let m = model.build()?;
            let cs = model.cstar().map_err(|e| e.in_stage("cstar"))?.value;
            let crit = a_alpha(m.alpha(), cs);
            let a = a_abs.unwrap_or(a_frac * crit);
            let ra = r_a(a, m.alpha(), cs)?;
            let cfg = BnConfig {
                a,
                cstar: cs,
                base: *base,
                k_max: *k_max,
                eps: eps.unwrap_or(ra - 1.0),
                trials: *trials,
                max_pop: *max_pop,
            };
            let r = bn_experiment(&m, &cfg, &streams.stage(stage::BN))?;
            sink.line(format!(
                "a = {a:.6} ({:.3} a_alpha), r_a = {:.6}, eps = {:.6}, N = {base}",
                a / crit,
                r.r_a,
                cfg.eps
            ));
            for (k, (e, th)) in r.per_k.iter().zip(&r.thresholds).enumerate() {
                sink.line(format!(
                    "k = {}: threshold {:.4e}, frequency {:.5} [{:.5}, {:.5}]",
                    k + 1,
                    th,
                    e.value,
                    e.ci_low,
                    e.ci_high
                ));
                sink.row(SummaryRow::new(format!("bn_freq_k{}", k + 1), e.value, e.std_error, None));
            }
            sink.line(format!(
                "runs outgrowing max_pop {max_pop}: {} (counted toward the thresholds below max_pop)",
                r.overflowed
            ));
            sink.record("bn", &r);
            if let Some((b, k, cap)) = corridor {
                let tb = TwoBarrierConfig { a, b: *b, base: *base, k: *k, cap: *cap, max_pop: *max_pop * 100 };
                let s = two_barrier_samples(&m, &tb, *trials, &streams.stage(stage::TWO_BARRIER))?;
                let pz = paley_zygmund(&s.capped, 0.5)?;
                sink.line(format!(
                    "two-barrier count, b = {b}, k = {k}, cap {:?}: mean {:.4}, P(Z >= mean/2) = {:.4} >= bound {:.4}: {}; capped <= uncapped in every run: {}",
                    cap,
                    pz.mean,
                    pz.t_k,
                    pz.bound,
                    pz.holds,
                    s.ordered()
                ));
                sink.row(SummaryRow::new("z_k_mean", pz.mean, 0.0, None));
                sink.row(SummaryRow::new("z_k_pz_frequency", pz.t_k, 0.0, Some(pz.bound)));
                sink.record("paley_zygmund", pz);
            }
            Ok(())
        }
        Plan::Pipeline { model, n_list, a_frac, threshold, cfg, mc } => {
            pipeline(model, n_list, a_frac, *threshold, cfg, mc, streams, sink)
        }
    }
}

fn functional_tag(f: &Functional) -> &'static str {
    match f {
        Functional::One => "one",
        Functional::EndBelow { .. } => "end_below",
        Functional::IndicatorTube { .. } => "tube",
        Functional::ExpBounded => "exp_bounded",
        Functional::Bivariate { .. } => "bivariate",
    }
}

fn calibrate(spine: &SpineLaw<f64>, probe: &[f64], varrho: f64, sink: &mut StageOutput) -> Result<f64> {
    let tail = validate_boundary_tail(spine, probe, varrho)?;
    let fit = extract_c0(spine.alpha(), spine.tail_const(), &C0_GRID, 1e-6)?;
    sink.line(format!(
        "spine: alpha = {}, c = {}, y0 = {}, left rate {:.6}, left weight {:.6}",
        spine.alpha().get(),
        spine.tail_const(),
        spine.tail_threshold(),
        spine.left_rate(),
        spine.left_weight()
    ));
    sink.line(format!(
        "boundary case: mass {:.3e}, mean {:.3e}, tail deviation {:.3e}, E exp(-{varrho} X) = {:.6}",
        tail.mass - 1.0,
        tail.abs_mean,
        tail.tail_deviation,
        tail.exp_moment
    ));
    sink.line(format!(
        "c0 = {:.8} (scale residual {:.1e}, skew residual {:.1e})",
        fit.c0, fit.scale_residual, fit.skew_residual
    ));
    sink.row(SummaryRow::new("c0", fit.c0, 0.0, None));
    sink.row(SummaryRow::new("mass_minus_one", tail.mass - 1.0, 0.0, Some(0.0)));
    sink.row(SummaryRow::new("mean", tail.abs_mean, 0.0, Some(0.0)));
    sink.record("calibrate_tail", &tail);
    sink.record("calibrate_c0", &fit);
    Ok(fit.c0)
}

fn cstar(
    spec: &StableSpec<f64>,
    mc: Option<&CstarMcConfig>,
    spectral: Option<(f64, usize)>,
    streams: &Streams,
    sink: &mut StageOutput,
) -> Result<Vec<CstarEstimate>> {
    let exact = cstar_closed_form(spec).ok();
    let reference = exact.as_ref().map(|e| e.value);
    sink.line(format!("stable limit: alpha = {}, c0 = {:.8}", spec.alpha().get(), spec.c0()));
    let mut out = Vec::new();
    if let Some(e) = exact {
        sink.line(format!("closed form C_* = pi^2 sigma^2 / 2 = {:.4}", e.value));
        out.push(e);
    }
    if let Some(cfg) = mc {
        out.push(estimate_cstar_mc(spec, cfg, streams).map_err(|e| e.in_stage("cstar_mc"))?);
    }
    if let Some((dt, nb)) = spectral {
        out.push(estimate_cstar_spectral(spec, dt, nb).map_err(|e| e.in_stage("cstar_spectral"))?);
    }
    for e in &out {
        let tag = serde_json::to_value(e.method).expect("enum serializes");
        let tag = tag.as_str().unwrap_or("estimate");
        let rel = reference.map(|r| format!(", relative error {:.3e}", (e.value - r).abs() / r)).unwrap_or_default();
        let raw = e.raw.map(|r| format!(", unextrapolated {r:.5}")).unwrap_or_default();
        sink.line(format!("{tag}: C_* = {:.5} +- {:.5}{raw}{rel}", e.value, e.std_error));
        sink.row(SummaryRow::new(format!("cstar_{tag}"), e.value, e.std_error, reference));
        sink.record("cstar", e.to_record());
    }
    Ok(out)
}

fn tube(
    spec: &StableSpec<f64>,
    law: &TubeLaw,
    width: f64,
    n_list: &[usize],
    rate: RateConfig,
    streams: &Streams,
    sink: &mut StageOutput,
) -> Result<()> {
    let alpha = spec.alpha();
    let cs = match cstar_closed_form(spec) {
        Ok(e) => e,
        Err(_) => estimate_cstar_spectral(spec, 1e-3, 400)?,
    };
    let tube = TubeSpec::centered(width, alpha, n_list[0])?;
    let s = streams.stage(stage::TUBE);
    let r = match law {
        TubeLaw::Gaussian(g) => empirical_rate(g, &tube, alpha, cs.value, n_list, rate, &s)?,
        TubeLaw::Pareto(p) => empirical_rate(p, &tube, alpha, cs.value, n_list, rate, &s)?,
    };
    sink.line(format!("tube width {width}, C_* = {:.5}, target rate {:.5}", cs.value, r.target));
    for p in &r.points {
        sink.line(format!("n = {}: rate {:.5} +- {:.5}", p.n, p.rate, p.rate_se));
        sink.row(SummaryRow::new(format!("rate_n{}", p.n), p.rate, p.rate_se, Some(r.target)));
    }
    sink.line(format!(
        "extrapolated {:.5} +- {:.5}, relative error {:.3}, gap shrinks: {}",
        r.extrapolated, r.extrapolated_se, r.relative_error, r.gap_shrinks
    ));
    sink.row(SummaryRow::new("rate_extrapolated", r.extrapolated, r.extrapolated_se, Some(r.target)));
    sink.record("tube_rate", &r);
    Ok(())
}

fn survival_stage(
    m: &OffspringModel<f64>,
    grid: &[f64],
    crit: f64,
    cfg: &SurvivalConfig,
    streams: &Streams,
    sink: &mut StageOutput,
) -> Result<()> {
    let shape = BarrierSpec::power(1.0, m.alpha())?;
    let curve = survival_curve(m, &shape, grid, cfg, &streams.stage(stage::SURVIVAL))?;
    for (a, e) in curve.a_grid.iter().zip(&curve.estimates) {
        sink.line(format!(
            "n = {}, a = {a:.5} ({:.3} a_alpha): survival {:.5} [{:.5}, {:.5}], overflowed {}",
            curve.n,
            a / crit,
            e.estimate.value,
            e.estimate.ci_low,
            e.estimate.ci_high,
            e.overflowed
        ));
        sink.row(SummaryRow::new(
            format!("survival_n{}_a{a:.5}", curve.n),
            e.estimate.value,
            e.estimate.std_error,
            None,
        ));
    }
    sink.line(format!("pathwise monotone in a: {}", curve.pathwise_monotone));
    sink.record("survival_curve", &curve);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn critical_stage(
    m: &OffspringModel<f64>,
    n_list: &[u64],
    bracket: (f64, f64),
    threshold: Threshold,
    steps: usize,
    cfg: &SurvivalConfig,
    crit: f64,
    streams: &Streams,
    sink: &mut StageOutput,
) -> Result<()> {
    let shape = BarrierSpec::power(1.0, m.alpha())?;
    let s = streams.stage(stage::CRITICAL_SEARCH);
    for &n in n_list {
        let cfg = SurvivalConfig { n, ..*cfg };
        let threshold = match threshold {
            Threshold::Absolute(x) => x,
            Threshold::Relative(r) => r * survival_prob(m, &shape.with_a(bracket.1), &cfg, &s)?.estimate.value,
        };
        let c = critical_a_search(m, &shape, &cfg, bracket, threshold, steps, &s)?;
        sink.line(format!(
            "n = {n}: crossing of s = {threshold} at a = {:.5} [{:.5}, {:.5}] ({:.3} a_alpha)",
            c.a_cross,
            c.lo,
            c.hi,
            c.a_cross / crit
        ));
        sink.row(SummaryRow::new(format!("a_cross_n{n}"), c.a_cross, (c.hi - c.lo) / 2.0, Some(crit)));
        sink.record("critical_crossing", &c);
    }
    Ok(())
}

/// Calibration, both `C_*` estimators, the predicted `a_alpha`, survival
/// curves and finite-`n` crossings, each stage labelled on failure.
pub fn pipeline_critical_comparison(
    model: &ModelSpec,
    n_list: &[u64],
    a_frac: &[f64],
    threshold: Threshold,
    cfg: &SurvivalConfig,
    mc: &CstarMcConfig,
    streams: &Streams,
) -> Result<StageOutput> {
    let mut out = StageOutput::default();
    pipeline(model, n_list, a_frac, threshold, cfg, mc, streams, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn pipeline(
    model: &ModelSpec,
    n_list: &[u64],
    a_frac: &[f64],
    threshold: Threshold,
    cfg: &SurvivalConfig,
    mc: &CstarMcConfig,
    streams: &Streams,
    sink: &mut StageOutput,
) -> Result<()> {
    let m = model.build()?;
    let alpha = m.alpha();
    sink.line("[stage 1] calibration");
    let spec = match model {
        ModelSpec::BinaryGaussian => {
            let spec = StableSpec::gaussian((2.0 * std::f64::consts::LN_2).sqrt())?;
            sink.line(format!("binary Gaussian steps: sigma^2 = 2 ln 2, c0 = {:.8}", spec.c0()));
            sink.record("calibrate_c0", json!({ "c0": spec.c0(), "sigma2": 2.0 * std::f64::consts::LN_2 }));
            spec
        }
        ModelSpec::PoissonBoundary { spine, .. } => {
            let varrho = 0.5 * spine.left_rate();
            let probe: Vec<f64> = (0..6).map(|k| spine.tail_threshold() * 4f64.powi(k)).collect();
            let c0 = calibrate(spine, &probe, varrho, sink).map_err(|e| e.in_stage("calibrate"))?;
            StableSpec::new(alpha, c0)?
        }
    };
    sink.line("[stage 2] confinement constant");
    let ests = cstar(&spec, Some(mc), Some((mc.dt, 400)), &streams.stage(stage::CSTAR_MC), sink)?;
    let best = ests
        .iter()
        .find(|e| e.method == crate::stable_process::CstarMethod::ClosedForm)
        .or_else(|| ests.last())
        .expect("at least one estimate");
    sink.line("[stage 3] critical coefficient");
    let crit = a_alpha(alpha, best.value);
    let crit_se = crit / (1.0 + alpha.get()) * best.std_error / best.value;
    sink.line(format!("predicted a_alpha = {crit:.6} +- {crit_se:.6}"));
    sink.row(SummaryRow::new("a_alpha_predicted", crit, crit_se, None));
    sink.record("a_alpha", json!({ "a_alpha": crit, "std_error": crit_se, "cstar": best.value }));
    sink.line("[stage 4] survival curves");
    let grid: Vec<f64> = a_frac.iter().map(|f| f * crit).collect();
    for &n in n_list {
        let cfg = SurvivalConfig { n, ..*cfg };
        survival_stage(&m, &grid, crit, &cfg, streams, sink).map_err(|e| e.in_stage("survival"))?;
    }
    sink.line("[stage 5] finite-n crossings");
    let lo = grid.first().copied().unwrap_or(0.3 * crit);
    let hi = grid.last().copied().unwrap_or(2.0 * crit);
    critical_stage(&m, n_list, (lo, hi), threshold, 6, cfg, crit, streams, sink).map_err(|e| e.in_stage("critical"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: ExperimentKind, text: &str) -> RunConfig {
        RunConfig::new(kind, KvBlock::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.as_str().parse::<ExperimentKind>().unwrap(), k);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_seed() {
        let a = cfg(ExperimentKind::Cstar, "alpha = 2\nout = /tmp/x");
        let b = cfg(ExperimentKind::Cstar, "alpha = 2\nout = /tmp/y");
        let c = cfg(ExperimentKind::Cstar, "alpha = 2\nseed = 9");
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn invalid_alpha_names_the_range() {
        let e = cfg(ExperimentKind::Cstar, "alpha = 0.8").validate().unwrap_err();
        assert!(e.to_string().contains("(1, 2]"), "{e}");
    }

    #[test]
    fn ode_rejects_supercritical_a() {
        assert!(cfg(ExperimentKind::Ode, "alpha = 2\na-frac = 1.1").validate().is_err());
        assert!(cfg(ExperimentKind::Ode, "alpha = 2").validate().is_ok());
    }

    #[test]
    fn critical_rows_split_at_a_alpha() {
        let r = run(&cfg(ExperimentKind::Critical, "alpha = 2\na-frac = 0.5, 1.5")).unwrap();
        let rows: Vec<CriticalRow> = r.records.iter().map(|v| serde_json::from_value(v.clone()).unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].r_a.is_none() && rows[0].t_max.is_some() && rows[0].k.is_some());
        assert!(rows[1].r_a.is_some() && rows[1].t_max.is_none() && rows[1].k.is_none());
        assert!((rows[0].a_alpha - 4.640502).abs() < 1e-5);
        assert_eq!(rows[0].csv().split(',').count(), 7);
    }

    #[test]
    fn search_flag_is_checked() {
        assert!(cfg(ExperimentKind::Survival, "search = maybe").validate().is_err());
        assert!(cfg(ExperimentKind::Survival, "search = true\nbracket = 2, 1").validate().is_err());
    }
}
