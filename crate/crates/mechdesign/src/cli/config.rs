//! Flat key-value experiment configuration with dotted section prefixes.
//!
//! ```text
//! domain = sga
//! objective.kind = fairness_gap
//! objective.samples = 10000
//! anneal.steps = 500
//! constraint.ir = on
//! constraint.min_revenue = 0.1
//! start = 0.5,0
//! ```
//!
//! Lines starting with `#` are comments. CLI flags override file values.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use crate::annealer::{AnnealConfig, ConstraintMode};
use crate::domains::VICIOUS_SPITE;
use crate::equilibrium::SolverConfig;
use crate::evaluation::{ConstraintKind, ConstraintSpec, ObjectiveKind, ObjectiveSpec};

#[derive(Debug, Clone, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

/// Where an optimization starts.
#[derive(Debug, Clone, PartialEq)]
pub enum StartSpec {
    Random,
    Fixed(Vec<f64>),
}

/// Output format of the record stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Jsonl,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(OutputFormat::Jsonl),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(ConfigError(format!("unknown format '{other}' (jsonl|csv)"))),
        }
    }
}

/// Everything an experiment run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: String,
    /// Spite level for the vicious domain.
    pub spite: f64,
    pub objective: ObjectiveSpec,
    pub constraints: Vec<ConstraintSpec>,
    pub anneal: AnnealConfig,
    pub solver: SolverConfig,
    pub start: StartSpec,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// True once any seed was given explicitly (file or flag).
    pub objective_seed_set: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: "sga".into(),
            spite: VICIOUS_SPITE,
            objective: ObjectiveSpec::new(ObjectiveKind::FairnessGap),
            constraints: vec![ConstraintSpec::convergence()],
            anneal: AnnealConfig::default(),
            solver: SolverConfig::default(),
            start: StartSpec::Random,
            out: None,
            format: OutputFormat::Jsonl,
            objective_seed_set: false,
        }
    }
}

impl ExperimentConfig {
    /// Parse the flat key-value format.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_map(map)
    }

    fn from_map(map: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::default();
        let mut ir_enabled = false;
        let mut ir = ConstraintSpec::ex_interim_ir();
        let mut min_revenue: Option<ConstraintSpec> = None;
        let mut convergence_enabled = true;
        let mut convergence = ConstraintSpec::convergence();

        for (key, value) in &map {
            match key.as_str() {
                "domain" => cfg.domain = value.clone(),
                "domain.l" => cfg.spite = parse_num(key, value)?,
                "objective.kind" => {
                    cfg.objective.kind =
                        value.parse::<ObjectiveKind>().map_err(ConfigError)?
                }
                "objective.samples" => cfg.objective.samples = parse_num(key, value)?,
                "objective.seed" => {
                    cfg.objective.seed = parse_num(key, value)?;
                    cfg.objective_seed_set = true;
                }
                "constraint.convergence" => convergence_enabled = parse_switch(key, value)?,
                "constraint.convergence.tol" => {
                    if let ConstraintKind::Convergence { tol, .. } = &mut convergence.kind {
                        *tol = parse_num(key, value)?;
                    }
                }
                "constraint.convergence.p" => {
                    if let ConstraintKind::Convergence { p, .. } = &mut convergence.kind {
                        *p = parse_num(key, value)?;
                    }
                }
                "constraint.ir" => ir_enabled = parse_switch(key, value)?,
                "constraint.ir.tol" => {
                    if let ConstraintKind::ExInterimIr { tol, .. } = &mut ir.kind {
                        *tol = parse_num(key, value)?;
                    }
                }
                "constraint.ir.p" => {
                    if let ConstraintKind::ExInterimIr { p, .. } = &mut ir.kind {
                        *p = parse_num(key, value)?;
                    }
                }
                "constraint.ir.alpha" => ir.alpha = parse_num(key, value)?,
                "constraint.ir.opportunity_cost" => {
                    if let ConstraintKind::ExInterimIr { opportunity_cost, .. } = &mut ir.kind {
                        *opportunity_cost = parse_num(key, value)?;
                    }
                }
                "constraint.ir.samples" => ir.samples = Some(parse_num(key, value)?),
                "constraint.min_revenue" => {
                    min_revenue = Some(ConstraintSpec::min_revenue(parse_num(key, value)?));
                }
                "constraint.min_revenue.samples" => {
                    if let Some(spec) = &mut min_revenue {
                        spec.samples = Some(parse_num(key, value)?);
                    } else {
                        return Err(ConfigError(
                            "constraint.min_revenue.samples needs constraint.min_revenue".into(),
                        ));
                    }
                }
                "anneal.steps" => cfg.anneal.steps = parse_num(key, value)?,
                "anneal.initial_temperature" => {
                    cfg.anneal.initial_temperature = parse_num(key, value)?
                }
                "anneal.cooling_rate" => cfg.anneal.cooling_rate = parse_num(key, value)?,
                "anneal.proposal_stddev" => {
                    cfg.anneal.proposal_stddev = parse_list(key, value)?;
                }
                "anneal.restarts" => cfg.anneal.restarts = parse_num(key, value)?,
                "anneal.seed" => cfg.anneal.seed = parse_num(key, value)?,
                "anneal.common_random_numbers" => {
                    cfg.anneal.common_random_numbers = parse_switch(key, value)?
                }
                "anneal.constraint_mode" => {
                    cfg.anneal.constraint_mode = parse_constraint_mode(value)?
                }
                "solver.max_iters" => cfg.solver.max_iters = parse_num(key, value)?,
                "solver.tol" => cfg.solver.tol = parse_num(key, value)?,
                "solver.conv_p" => cfg.solver.conv_p = parse_num(key, value)?,
                "solver.conv_alpha" => cfg.solver.conv_alpha = parse_num(key, value)?,
                "solver.damping" => cfg.solver.damping = parse_num(key, value)?,
                "start" => {
                    cfg.start = if value == "random" {
                        StartSpec::Random
                    } else {
                        StartSpec::Fixed(parse_list(key, value)?)
                    }
                }
                "out" => cfg.out = Some(PathBuf::from(value)),
                "format" => cfg.format = value.parse()?,
                other => return Err(ConfigError(format!("unknown key '{other}'"))),
            }
        }

        cfg.constraints.clear();
        if convergence_enabled {
            cfg.constraints.push(convergence);
        }
        if ir_enabled {
            cfg.constraints.push(ir);
        }
        if let Some(spec) = min_revenue {
            cfg.constraints.push(spec);
        }
        Ok(cfg)
    }

    /// Resolve the master seed into the annealer and objective seeds.
    /// An explicit `objective.seed` wins; otherwise the objective stream
    /// is derived from the master so the two never collide.
    pub fn apply_master_seed(&mut self, seed: u64) {
        self.anneal.seed = seed;
        if !self.objective_seed_set {
            self.objective.seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse::<T>()
        .map_err(|_| ConfigError(format!("bad value '{value}' for {key}")))
}

fn parse_switch(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        other => Err(ConfigError(format!("bad switch '{other}' for {key} (on|off)"))),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|part| parse_num::<f64>(key, part.trim()))
        .collect()
}

fn parse_constraint_mode(value: &str) -> Result<ConstraintMode, ConfigError> {
    if value == "default" {
        return Ok(ConstraintMode::KindDefaults);
    }
    if value == "reject" {
        return Ok(ConstraintMode::Reject);
    }
    if let Some(w) = value.strip_prefix("penalty:") {
        return Ok(ConstraintMode::Penalty(w.parse().map_err(|_| {
            ConfigError(format!("bad penalty weight '{w}'"))
        })?));
    }
    Err(ConfigError(format!(
        "bad constraint mode '{value}' (default|reject|penalty:WEIGHT)"
    )))
}

/// Parse a comma-separated theta vector from the command line.
pub fn parse_theta(text: &str) -> Result<Vec<f64>, ConfigError> {
    parse_list("theta", text)
}
