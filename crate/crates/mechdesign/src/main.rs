use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mechdesign::cli::config::{parse_theta, ExperimentConfig, StartSpec};
use mechdesign::cli::{run_evaluate, run_optimize, run_reproduce, run_solve, Writer};

/// Automated mechanism design: solve induced games for symmetric
/// Bayes-Nash equilibria, evaluate designer objectives and probabilistic
/// constraints by Monte Carlo, and search mechanism parameter boxes with
/// simulated annealing.
///
/// The master seed comes from --seed, then the config file, then the
/// MECH_SEED environment variable, then 0.
#[derive(Parser)]
#[command(name = "mechdesign", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment config file (flat `key = value` lines; flags override).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Domain name: sga, myerson, or vicious.
    #[arg(long, global = true)]
    domain: Option<String>,
    /// Spite level for the vicious domain.
    #[arg(long, global = true)]
    l: Option<f64>,
    /// Master seed for all randomness in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count for objective estimates (smoke runs).
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Write machine records here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record format.
    #[arg(long, global = true, value_parser = ["jsonl", "csv"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the game induced by a design point for a symmetric
    /// Bayes-Nash equilibrium.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Design point, comma-separated (e.g. 0.5,0).
        #[arg(long)]
        theta: String,
    },
    /// Evaluate the objective and constraints at a design point.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        theta: String,
        /// Objective kind (fairness_gap, exante_gap, winner_utility,
        /// revenue, welfare, weighted:NAME=W,...).
        #[arg(long)]
        objective: Option<String>,
    },
    /// Search the design box by simulated annealing.
    Optimize {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        objective: Option<String>,
        /// Start point, comma-separated, or "random".
        #[arg(long)]
        start: Option<String>,
        /// Number of random-restart chains.
        #[arg(long)]
        restarts: Option<usize>,
        /// Annealing steps per chain.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Rerun the published experiments with pinned seeds and compare
    /// achieved values against their targets.
    Reproduce {
        #[command(flatten)]
        common: CommonArgs,
        /// table1, table2, table3, myerson_revenue, myerson_welfare,
        /// vicious, or all.
        #[arg(long, default_value = "all")]
        which: String,
    },
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            ExperimentConfig::parse(&text).map_err(|e| e.to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(domain) = &common.domain {
        cfg.domain = domain.clone();
    }
    if let Some(l) = common.l {
        cfg.spite = l;
    }
    if let Some(n) = common.samples {
        cfg.objective.samples = n;
    }
    if let Some(path) = &common.out {
        cfg.out = Some(path.clone());
    }
    if let Some(format) = &common.format {
        cfg.format = format.parse().map_err(|e: mechdesign::cli::config::ConfigError| e.to_string())?;
    }
    let master = common
        .seed
        .or(if cfg.anneal.seed != 0 { Some(cfg.anneal.seed) } else { None })
        .or_else(|| std::env::var("MECH_SEED").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(0);
    cfg.apply_master_seed(master);
    Ok(cfg)
}

fn writer_for(cfg: &ExperimentConfig) -> std::io::Result<Writer> {
    Writer::open(cfg.out.as_deref(), cfg.format)
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Solve { common, theta } => {
            let cfg = load_config(&common)?;
            let theta = parse_theta(&theta).map_err(|e| e.to_string())?;
            let mut writer = writer_for(&cfg).map_err(|e| e.to_string())?;
            run_solve(&cfg.domain, &theta, cfg.spite, &cfg.solver, &mut writer)
                .map_err(|e| e.to_string())
        }
        Command::Evaluate { common, theta, objective } => {
            let mut cfg = load_config(&common)?;
            if let Some(kind) = objective {
                cfg.objective.kind = kind.parse().map_err(|e: String| e)?;
            }
            let theta = parse_theta(&theta).map_err(|e| e.to_string())?;
            let mut writer = writer_for(&cfg).map_err(|e| e.to_string())?;
            run_evaluate(&cfg, &theta, &mut writer).map_err(|e| e.to_string())
        }
        Command::Optimize { common, objective, start, restarts, steps } => {
            let mut cfg = load_config(&common)?;
            if let Some(kind) = objective {
                cfg.objective.kind = kind.parse().map_err(|e: String| e)?;
            }
            if let Some(start) = start {
                cfg.start = if start == "random" {
                    StartSpec::Random
                } else {
                    StartSpec::Fixed(parse_theta(&start).map_err(|e| e.to_string())?)
                };
            }
            if let Some(r) = restarts {
                cfg.anneal.restarts = r;
            }
            if let Some(s) = steps {
                cfg.anneal.steps = s;
            }
            let mut writer = writer_for(&cfg).map_err(|e| e.to_string())?;
            run_optimize(&cfg, &mut writer).map_err(|e| e.to_string())
        }
        Command::Reproduce { common, which } => {
            let cfg = load_config(&common)?;
            let mut writer = writer_for(&cfg).map_err(|e| e.to_string())?;
            run_reproduce(&which, common.samples, &mut writer).map_err(|e| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
