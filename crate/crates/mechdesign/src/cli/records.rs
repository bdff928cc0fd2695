//! Kind-tagged machine-readable records emitted by every workflow.

use serde::{Deserialize, Serialize};

use crate::annealer::TraceEntry;
use crate::evaluation::{ConstraintVerdict, EvalReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub m: f64,
    pub b: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveRecord {
    pub kind: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub domain: String,
    pub theta: Vec<f64>,
    pub equilibrium: EquilibriumRecord,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub domain: String,
    pub theta: Vec<f64>,
    pub objective: ObjectiveRecord,
    pub constraints: Vec<ConstraintVerdict>,
    pub equilibrium: EquilibriumRecord,
    pub feasible: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub chain: usize,
    pub step: usize,
    pub theta: Vec<f64>,
    pub objective: Option<f64>,
    pub accepted: bool,
}

impl From<&TraceEntry> for TraceRecord {
    fn from(e: &TraceEntry) -> Self {
        Self {
            chain: e.chain,
            step: e.step,
            theta: e.theta.clone(),
            objective: e.objective,
            accepted: e.accepted,
        }
    }
}

/// One achieved-vs-target line of a reproduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub experiment: String,
    pub metric: String,
    pub achieved: f64,
    pub target: f64,
    /// "<=", ">=", or "within"; `tolerance` applies to "within".
    pub op: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl ComparisonRecord {
    pub fn le(experiment: &str, metric: &str, achieved: f64, target: f64) -> Self {
        Self {
            experiment: experiment.into(),
            metric: metric.into(),
            achieved,
            target,
            op: "<=".into(),
            tolerance: None,
            pass: achieved <= target,
        }
    }

    pub fn ge(experiment: &str, metric: &str, achieved: f64, target: f64) -> Self {
        Self {
            experiment: experiment.into(),
            metric: metric.into(),
            achieved,
            target,
            op: ">=".into(),
            tolerance: None,
            pass: achieved >= target,
        }
    }

    pub fn within(experiment: &str, metric: &str, achieved: f64, target: f64, tol: f64) -> Self {
        Self {
            experiment: experiment.into(),
            metric: metric.into(),
            achieved,
            target,
            op: "within".into(),
            tolerance: Some(tol),
            pass: (achieved - target).abs() <= tol,
        }
    }
}

/// Every record the toolkit writes, tagged by kind for grep-ability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Record {
    Trace(TraceRecord),
    Summary(SummaryRecord),
    Report(SummaryRecord),
    Solve(SolveRecord),
    Comparison(ComparisonRecord),
    ReproduceSummary { experiment: String, passed: usize, failed: usize },
}

/// Flatten an evaluation report into the summary shape.
pub fn summary_from_report(domain: &str, report: &EvalReport, objective_kind: &str) -> SummaryRecord {
    SummaryRecord {
        domain: domain.to_string(),
        theta: report.theta.values().to_vec(),
        objective: ObjectiveRecord {
            kind: objective_kind.to_string(),
            value: report.objective_estimate,
            stderr: report.objective_stderr,
        },
        constraints: report.constraint_verdicts.clone(),
        equilibrium: EquilibriumRecord {
            m: report.equilibrium.strategy.m,
            b: report.equilibrium.strategy.b,
            iterations: report.equilibrium.iterations,
            converged: report.equilibrium.converged,
        },
        feasible: report.feasible(),
        seed: report.seed,
    }
}
