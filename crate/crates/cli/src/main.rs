use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stable_brw::harness::{run, CriticalRow, ExperimentKind, RunConfig};
use stable_brw::kv::KvBlock;

/// Simulations and numerical checks for branching random walks with an
/// alpha-stable spine under an absorbing barrier.
#[derive(Parser, Debug)]
#[command(name = "stable-brw", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the boundary-case spine law and fit the stable scale c0.
    Calibrate(Common),
    /// Estimate the confinement constant C_*.
    Cstar(Common),
    /// Finite-n small-deviation rates in a constant tube.
    Tube(Common),
    /// Tree-side versus walk-side check of the many-to-one identity.
    Manytoone(Common),
    /// Survival probabilities under the barrier a i^{1/(1+alpha)}; with
    /// `--set search=true`, also the finite-n crossings of each curve.
    Survival(Common),
    /// a_alpha, r_a, t_max and K for each `--a` (CSV on stdout).
    Critical(Common),
    /// Solve the blow-down ODE and report t_max and K.
    Ode(Common),
    /// Population growth between two barriers.
    Bn(Common),
    /// Calibration through critical crossings, end to end.
    Pipeline(Common),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Plain `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Pareto tail constant of the spine law.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    y0: Option<f64>,
    /// Barrier coefficient(s), comma separated.
    #[arg(long)]
    a: Option<String>,
    /// Corridor width below the barrier.
    #[arg(long)]
    b: Option<f64>,
    /// Log of the integer checkpoint base.
    #[arg(long)]
    lambda: Option<f64>,
    /// Horizon(s), comma separated.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "max-pop")]
    max_pop: Option<u64>,
    /// Brood-size cap.
    #[arg(long = "cap-R")]
    cap_r: Option<u64>,
    /// Right cut of the offspring point process.
    #[arg(long = "cut-T")]
    cut_t: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Any other key, as `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn to_kv(&self) -> Result<KvBlock, String> {
        let mut kv = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                KvBlock::parse(&text).map_err(|e| e.to_string())?
            }
            None => KvBlock::default(),
        };
        kv.remove("kind");
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.set(k, v);
            }
        };
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("c", self.c.map(|v| v.to_string()));
        put("y0", self.y0.map(|v| v.to_string()));
        put("a", self.a.clone());
        put("b", self.b.map(|v| v.to_string()));
        put("lambda", self.lambda.map(|v| v.to_string()));
        put("n", self.n.clone());
        put("trials", self.trials.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("max-pop", self.max_pop.map(|v| v.to_string()));
        put("cap-r", self.cap_r.map(|v| v.to_string()));
        put("cut-t", self.cut_t.map(|v| v.to_string()));
        put("sigma", self.sigma.map(|v| v.to_string()));
        for s in &self.set {
            let (k, v) = s.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Calibrate(c) => (ExperimentKind::Calibrate, c),
        Command::Cstar(c) => (ExperimentKind::Cstar, c),
        Command::Tube(c) => (ExperimentKind::Tube, c),
        Command::Manytoone(c) => (ExperimentKind::ManyToOne, c),
        Command::Survival(c) => (ExperimentKind::Survival, c),
        Command::Critical(c) => (ExperimentKind::Critical, c),
        Command::Ode(c) => (ExperimentKind::Ode, c),
        Command::Bn(c) => (ExperimentKind::Bn, c),
        Command::Pipeline(c) => (ExperimentKind::Pipeline, c),
    };
    let config = match common.to_kv().and_then(|kv| RunConfig::new(kind, kv).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&config) {
        Ok(record) => {
            if kind == ExperimentKind::Critical {
                println!("{}", CriticalRow::CSV_HEADER);
                for v in &record.records {
                    match serde_json::from_value::<CriticalRow>(v.clone()) {
                        Ok(row) => println!("{}", row.csv()),
                        Err(e) => {
                            eprintln!("error: {e}");
                            return ExitCode::FAILURE;
                        }
                    }
                }
            } else {
                print!("{}", record.report);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
