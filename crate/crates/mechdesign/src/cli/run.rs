//! Workflow drivers shared by the binary and the integration tests.
//!
//! Each workflow prints a short human-readable line to stdout and emits
//! machine records through a [`Writer`] (JSONL by default, or a CSV
//! summary table). Exit codes: 0 on success, 2 on solver failure, 3 when
//! no feasible design was found, 4 when a reproduction comparison failed.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::annealer::{evaluate_candidate, optimize, AnnealError, DesignPoint, EvalOptions, Start};
use crate::cli::config::{ExperimentConfig, OutputFormat, StartSpec};
use crate::cli::records::{
    summary_from_report, EquilibriumRecord, Record, SolveRecord, TraceRecord,
};
use crate::cli::reproduce::{run_experiments, ReproduceError};
use crate::domains::design_space;
use crate::equilibrium::{solve_equilibrium, SolverConfig};
use crate::evaluation::EvalError;
use crate::game::LinearStrategy;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Domain(#[from] crate::domains::DomainError),
    #[error(transparent)]
    Solve(#[from] crate::equilibrium::SolveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Reproduce(#[from] ReproduceError),
    #[error("{0}")]
    Config(String),
}

/// Serializes records to one sink in the configured format.
pub struct Writer {
    sink: Box<dyn Write>,
    format: OutputFormat,
    csv_header_written: bool,
}

impl Writer {
    pub fn new(sink: Box<dyn Write>, format: OutputFormat) -> Self {
        Self { sink, format, csv_header_written: false }
    }

    /// Write to the given path, or fall back to stdout.
    pub fn open(path: Option<&Path>, format: OutputFormat) -> io::Result<Self> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(io::stdout()),
        };
        Ok(Self::new(sink, format))
    }

    pub fn emit(&mut self, record: &Record) -> io::Result<()> {
        match self.format {
            OutputFormat::Jsonl => {
                let line = serde_json::to_string(record).expect("records always serialize");
                writeln!(self.sink, "{line}")
            }
            OutputFormat::Csv => self.emit_csv(record),
        }
    }

    /// The CSV stream is a summary table: traces and solve records are
    /// JSONL-only.
    fn emit_csv(&mut self, record: &Record) -> io::Result<()> {
        if !self.csv_header_written {
            writeln!(self.sink, "kind,label,metric,value,target,op,pass,theta")?;
            self.csv_header_written = true;
        }
        match record {
            Record::Summary(s) | Record::Report(s) => {
                let theta = join_floats(&s.theta, '|');
                writeln!(
                    self.sink,
                    "{},{},{},{},,,{},{}",
                    if matches!(record, Record::Summary(_)) { "summary" } else { "report" },
                    s.domain,
                    s.objective.kind,
                    s.objective.value,
                    s.feasible,
                    theta
                )
            }
            Record::Comparison(c) => writeln!(
                self.sink,
                "comparison,{},{},{},{},{},{},",
                c.experiment, c.metric, c.achieved, c.target, c.op, c.pass
            ),
            Record::ReproduceSummary { experiment, passed, failed } => writeln!(
                self.sink,
                "reproduce_summary,{experiment},,{passed},{failed},,,"
            ),
            Record::Trace(_) | Record::Solve(_) => Ok(()),
        }
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.sink.flush()
    }
}

fn join_floats(values: &[f64], sep: char) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(&sep.to_string())
}

/// Solve the game induced by θ and report the equilibrium.
pub fn run_solve(
    domain: &str,
    theta: &[f64],
    spite: f64,
    solver: &SolverConfig,
    writer: &mut Writer,
) -> Result<i32, CliError> {
    let space = design_space(domain, spite)?;
    let point = DesignPoint::new(theta.to_vec());
    let mech = space.build(&point)?;
    let init = LinearStrategy::truthful(&mech.game);
    let result = solve_equilibrium(&mech.game, init, solver);

    match result {
        Ok(res) => {
            println!(
                "{domain} theta=({}): {} after {} iterations ({})",
                join_floats(theta, ','),
                res.strategy,
                res.iterations,
                if res.converged { "converged" } else { "NOT converged" }
            );
            writer.emit(&Record::Solve(SolveRecord {
                domain: domain.to_string(),
                theta: theta.to_vec(),
                equilibrium: EquilibriumRecord {
                    m: res.strategy.m,
                    b: res.strategy.b,
                    iterations: res.iterations,
                    converged: res.converged,
                },
                residual: res.residual,
            }))?;
            writer.flush()?;
            if res.converged {
                Ok(0)
            } else {
                eprintln!(
                    "solver stopped at residual {:.3e} without meeting the convergence \
                     criterion; the design may be degenerate",
                    res.residual
                );
                Ok(2)
            }
        }
        Err(err) => {
            eprintln!("degenerate design: {err}");
            Ok(2)
        }
    }
}

/// Evaluate one design point: equilibrium, objective, constraints.
pub fn run_evaluate(
    config: &ExperimentConfig,
    theta: &[f64],
    writer: &mut Writer,
) -> Result<i32, CliError> {
    let space = design_space(&config.domain, config.spite)?;
    let point = DesignPoint::new(theta.to_vec());
    let report = evaluate_candidate(
        &space,
        &point,
        &config.objective,
        &config.constraints,
        &EvalOptions { solver: config.solver },
    )?;
    println!(
        "{} theta=({}): {} = {:.6} (stderr {:.2e}), {}, {}",
        config.domain,
        join_floats(theta, ','),
        config.objective.kind,
        report.objective_estimate,
        report.objective_stderr,
        report.equilibrium.strategy,
        if report.feasible() { "feasible" } else { "infeasible" }
    );
    let record = summary_from_report(&config.domain, &report, &config.objective.kind.to_string());
    writer.emit(&Record::Report(record))?;
    writer.flush()?;
    Ok(0)
}

/// Anneal over the design box and stream the trace.
pub fn run_optimize(config: &ExperimentConfig, writer: &mut Writer) -> Result<i32, CliError> {
    let space = design_space(&config.domain, config.spite)?;
    let start = match &config.start {
        StartSpec::Random => Start::Random,
        StartSpec::Fixed(values) => {
            let point = DesignPoint::new(values.clone());
            if !space.contains(&point) {
                return Err(CliError::Config(format!(
                    "start point ({}) lies outside the {} box",
                    join_floats(values, ','),
                    config.domain
                )));
            }
            Start::Fixed(point)
        }
    };

    match optimize(&space, &config.objective, &config.constraints, &config.anneal, start) {
        Ok(res) => {
            for entry in &res.trace {
                writer.emit(&Record::Trace(TraceRecord::from(entry)))?;
            }
            let summary =
                summary_from_report(&config.domain, &res.best_report, &config.objective.kind.to_string());
            println!(
                "{}: best {} = {:.6} at theta=({}) [{} chains, {} steps each]",
                config.domain,
                config.objective.kind,
                res.best_report.objective_estimate,
                join_floats(res.best_theta.values(), ','),
                res.restarts_used,
                config.anneal.steps
            );
            writer.emit(&Record::Summary(summary))?;
            writer.flush()?;
            Ok(0)
        }
        Err(AnnealError::AllInfeasible { best_attempt, trace }) => {
            for entry in &trace {
                writer.emit(&Record::Trace(TraceRecord::from(entry)))?;
            }
            eprintln!("no feasible design found");
            if let Some(report) = best_attempt {
                let mut summary = summary_from_report(
                    &config.domain,
                    &report,
                    &config.objective.kind.to_string(),
                );
                summary.feasible = false;
                writer.emit(&Record::Summary(summary))?;
            }
            writer.flush()?;
            Ok(3)
        }
    }
}

/// Rerun the published experiments and compare against their targets.
pub fn run_reproduce(
    which: &str,
    samples: Option<usize>,
    writer: &mut Writer,
) -> Result<i32, CliError> {
    let outcomes = run_experiments(which, samples)?;
    let mut all_pass = true;
    for outcome in &outcomes {
        let mut passed = 0;
        let mut failed = 0;
        for comparison in &outcome.comparisons {
            let mark = if comparison.pass { "PASS" } else { "FAIL" };
            let tol = comparison
                .tolerance
                .map(|t| format!(" +/- {t}"))
                .unwrap_or_default();
            println!(
                "[{mark}] {}/{}: {:.6} {} {}{}",
                outcome.name, comparison.metric, comparison.achieved, comparison.op,
                comparison.target, tol
            );
            writer.emit(&Record::Comparison(comparison.clone()))?;
            if comparison.pass {
                passed += 1;
            } else {
                failed += 1;
            }
        }
        for record in &outcome.records {
            writer.emit(record)?;
        }
        writer.emit(&Record::ReproduceSummary {
            experiment: outcome.name.clone(),
            passed,
            failed,
        })?;
        all_pass &= failed == 0;
    }
    writer.flush()?;
    Ok(if all_pass { 0 } else { 4 })
}
