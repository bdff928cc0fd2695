//! Black-box simulated annealing over a box of mechanism parameters.
//!
//! Each step proposes a componentwise Gaussian perturbation clipped to the
//! box, solves the induced game, evaluates the objective and constraints,
//! and accepts by the Metropolis rule under geometric cooling. Restart
//! chains are independent, with per-chain streams derived from the master
//! seed, so runs replay exactly.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domains::{DomainError, Mechanism, OpportunityCost};
use crate::equilibrium::{solve_equilibrium, SolverConfig};
use crate::evaluation::{
    check_convergence_constraint, check_ex_interim_ir, check_min_revenue, evaluate_objective,
    ConstraintKind, ConstraintSpec, Direction, EvalError, EvalReport, ObjectiveSpec,
};
use crate::game::{LinearStrategy, TypeSampler};

pub(crate) const IR_SEED_SALT: u64 = 0x4952;
pub(crate) const REVENUE_SEED_SALT: u64 = 0x5245_5645;

/// A parameter vector θ. Names and bounds live on the [`DesignSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesignPoint(Vec<f64>);

impl DesignPoint {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for DesignPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v:.4}")).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Box-constrained design space plus the factory mapping θ to a mechanism.
#[derive(Clone)]
pub struct DesignSpace {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    factory: Arc<dyn Fn(&DesignPoint) -> Result<Mechanism, DomainError> + Send + Sync>,
    constant_payment_params: Vec<String>,
}

impl fmt::Debug for DesignSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DesignSpace")
            .field("names", &self.names)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish_non_exhaustive()
    }
}

impl DesignSpace {
    pub fn new(
        names: &[&str],
        lower: Vec<f64>,
        upper: Vec<f64>,
        factory: impl Fn(&DesignPoint) -> Result<Mechanism, DomainError> + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(names.len(), lower.len());
        assert_eq!(names.len(), upper.len());
        assert!(
            lower.iter().zip(&upper).all(|(lo, hi)| lo <= hi),
            "lower bounds must not exceed upper bounds"
        );
        Self {
            names: names.iter().map(|s| s.to_string()).collect(),
            lower,
            upper,
            factory: Arc::new(factory),
            constant_payment_params: Vec::new(),
        }
    }

    /// Declare which parameters are constant payments that the IR repair
    /// may shift.
    pub fn with_constant_payment_params(mut self, names: &[&str]) -> Self {
        self.constant_payment_params = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn constant_payment_params(&self) -> &[String] {
        &self.constant_payment_params
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, theta: &DesignPoint) -> bool {
        theta.len() == self.dim()
            && theta
                .values()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    pub fn clip(&self, values: &[f64]) -> DesignPoint {
        DesignPoint::new(
            values
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
        )
    }

    pub fn build(&self, theta: &DesignPoint) -> Result<Mechanism, DomainError> {
        (self.factory)(theta)
    }

    pub fn random_point(&self, rng: &mut ChaCha8Rng) -> DesignPoint {
        DesignPoint::new(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect(),
        )
    }
}

/// How constraint violations enter the annealing acceptance rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ConstraintMode {
    /// Reject convergence and individual-rationality violations outright;
    /// fold minimum-revenue shortfalls into the objective with weight 1.
    KindDefaults,
    /// Every violated constraint rejects the candidate.
    Reject,
    /// Every violation is penalized by `weight × shortfall`.
    Penalty(f64),
}

enum Handling {
    Reject,
    Penalty(f64),
}

fn handling(mode: ConstraintMode, kind: &ConstraintKind) -> Handling {
    match mode {
        ConstraintMode::Reject => Handling::Reject,
        ConstraintMode::Penalty(w) => Handling::Penalty(w),
        ConstraintMode::KindDefaults => match kind {
            ConstraintKind::MinRevenue { .. } => Handling::Penalty(1.0),
            _ => Handling::Reject,
        },
    }
}

/// Annealing schedule and bookkeeping parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealConfig {
    pub steps: usize,
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    /// Per-parameter proposal standard deviation; a single entry is
    /// broadcast across all coordinates.
    pub proposal_stddev: Vec<f64>,
    pub restarts: usize,
    pub constraint_mode: ConstraintMode,
    /// Hold the objective's profile sample fixed across candidate designs
    /// so that objective differences are less noisy.
    pub common_random_numbers: bool,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            initial_temperature: 0.1,
            cooling_rate: 0.99,
            proposal_stddev: vec![0.05],
            restarts: 5,
            constraint_mode: ConstraintMode::KindDefaults,
            common_random_numbers: true,
            seed: 0,
        }
    }
}

impl AnnealConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self, dim: usize) {
        assert!(self.steps >= 1, "steps must be at least 1");
        assert!(self.initial_temperature > 0.0, "initial temperature must be positive");
        assert!(
            self.cooling_rate > 0.0 && self.cooling_rate < 1.0,
            "cooling rate must be in (0,1)"
        );
        assert!(self.restarts >= 1, "restarts must be at least 1");
        assert!(
            self.proposal_stddev.len() == 1 || self.proposal_stddev.len() == dim,
            "proposal stddev must be scalar or one per parameter"
        );
        assert!(self.proposal_stddev.iter().all(|s| *s > 0.0), "proposal stddev must be positive");
    }

    fn stddev(&self, i: usize) -> f64 {
        if self.proposal_stddev.len() == 1 {
            self.proposal_stddev[0]
        } else {
            self.proposal_stddev[i]
        }
    }
}

/// One annealing step as recorded in the optimization trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub chain: usize,
    pub step: usize,
    pub theta: Vec<f64>,
    /// Raw objective estimate; absent when the candidate could not be
    /// evaluated (factory or solver failure).
    pub objective: Option<f64>,
    pub accepted: bool,
}

/// Where a chain starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// One chain per restart, each from an independent uniform draw.
    Random,
    /// A single chain from this point.
    Fixed(DesignPoint),
}

#[derive(Debug, thiserror::Error)]
pub enum AnnealError {
    #[error("no visited design satisfied the constraints")]
    AllInfeasible { best_attempt: Option<Box<EvalReport>>, trace: Vec<TraceEntry> },
}

/// Result of an optimization run.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub best_theta: DesignPoint,
    pub best_report: EvalReport,
    pub trace: Vec<TraceEntry>,
    pub restarts_used: usize,
}

/// Evaluation plumbing shared by every candidate in a run.
#[derive(Debug, Clone, Default)]
pub struct EvalOptions {
    pub solver: SolverConfig,
}

/// Solve the induced game at θ and evaluate the objective and every
/// constraint. The convergence constraint reads the solver's final two
/// iterates; an unconverged solve fails it.
pub fn evaluate_candidate(
    space: &DesignSpace,
    theta: &DesignPoint,
    objective: &ObjectiveSpec,
    constraints: &[ConstraintSpec],
    opts: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let mech = space.build(theta)?;
    let init = LinearStrategy::truthful(&mech.game);
    let eqres = solve_equilibrium(&mech.game, init, &opts.solver)?;
    let eq = eqres.strategy;

    let mut verdicts = Vec::with_capacity(constraints.len());
    for c in constraints {
        let verdict = match c.kind {
            ConstraintKind::Convergence { tol, p } => check_convergence_constraint(&eqres, tol, p),
            ConstraintKind::ExInterimIr { tol, p, opportunity_cost } => {
                // Domain-provided opportunity costs take precedence over
                // the constraint's constant.
                let cost = match mech.opportunity_cost {
                    OpportunityCost::Zero => opportunity_cost,
                    OpportunityCost::Constant(c) => c,
                };
                check_ex_interim_ir(
                    &mech.game,
                    &eq,
                    |_| cost,
                    tol,
                    p,
                    c.alpha,
                    c.samples,
                    objective.seed ^ IR_SEED_SALT,
                )?
            }
            ConstraintKind::MinRevenue { floor } => {
                let sampler =
                    TypeSampler::for_game(&mech.game, objective.seed ^ REVENUE_SEED_SALT);
                check_min_revenue(&mech, &eq, &sampler, c.resolved_samples(), floor, false)?
            }
        };
        verdicts.push(verdict);
    }

    let est = evaluate_objective(objective, &mech, &eq)?;
    Ok(EvalReport {
        objective_estimate: est.value,
        objective_stderr: est.stderr,
        constraint_verdicts: verdicts,
        equilibrium: eqres,
        theta: theta.clone(),
        seed: objective.seed,
    })
}

/// Internal scoring of one candidate.
struct Scored {
    /// Penalized maximization score; `None` means the candidate can never
    /// be accepted (hard constraint violation or evaluation failure).
    score: Option<f64>,
    /// Coarse ordering among inadmissible candidates: solvable designs
    /// with small violations rank above solver failures, which gives a
    /// lost chain a gradient back toward admissible ground.
    lost_rank: f64,
    objective: Option<f64>,
    feasible: bool,
    report: Option<EvalReport>,
}

struct Best {
    key: f64,
    theta: DesignPoint,
    report: Option<EvalReport>,
}

struct EngineOutcome {
    trace: Vec<TraceEntry>,
    best_feasible: Option<Best>,
    best_attempt: Option<Best>,
    chains_run: usize,
}

fn consider(slot: &mut Option<Best>, key: f64, theta: &DesignPoint, report: Option<&EvalReport>) {
    let better = match slot {
        Some(b) => key > b.key,
        None => true,
    };
    if better {
        *slot = Some(Best { key, theta: theta.clone(), report: report.cloned() });
    }
}

fn run_annealing(
    lower: &[f64],
    upper: &[f64],
    config: &AnnealConfig,
    chains: usize,
    fixed_start: Option<&DesignPoint>,
    eval: &mut dyn FnMut(usize, usize, &DesignPoint) -> Scored,
) -> EngineOutcome {
    let mut trace = Vec::new();
    let mut best_feasible: Option<Best> = None;
    let mut best_attempt: Option<Best> = None;

    for chain in 0..chains {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(chain as u64 + 1);

        let mut theta = match fixed_start {
            Some(p) => p.clone(),
            None => DesignPoint::new(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                    .collect(),
            ),
        };
        let mut current = eval(chain, 0, &theta);
        record(&mut trace, chain, 0, &theta, &current, current.score.is_some());
        track(&mut best_feasible, &mut best_attempt, &theta, &current);

        let mut temperature = config.initial_temperature;
        for step in 1..=config.steps {
            let proposal = DesignPoint::new(
                theta
                    .values()
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        let noise =
                            Normal::new(0.0, config.stddev(i)).unwrap().sample(&mut rng);
                        (v + noise).clamp(lower[i], upper[i])
                    })
                    .collect(),
            );
            let candidate = eval(chain, step, &proposal);
            let accepted = match (current.score, candidate.score) {
                (Some(cur), Some(new)) => {
                    new >= cur || rng.gen::<f64>() < ((new - cur) / temperature).exp()
                }
                // Inadmissible proposals never displace an admissible state.
                (Some(_), None) => false,
                (None, Some(_)) => true,
                // Both inadmissible: drift along the lost-ranking until
                // the chain finds admissible ground.
                (None, None) => {
                    candidate.lost_rank >= current.lost_rank
                        || rng.gen::<f64>()
                            < ((candidate.lost_rank - current.lost_rank) / temperature).exp()
                }
            };
            record(&mut trace, chain, step, &proposal, &candidate, accepted);
            track(&mut best_feasible, &mut best_attempt, &proposal, &candidate);
            if accepted {
                theta = proposal;
                current = candidate;
            }
            temperature *= config.cooling_rate;
        }
    }

    EngineOutcome { trace, best_feasible, best_attempt, chains_run: chains }
}

fn record(
    trace: &mut Vec<TraceEntry>,
    chain: usize,
    step: usize,
    theta: &DesignPoint,
    scored: &Scored,
    accepted: bool,
) {
    trace.push(TraceEntry {
        chain,
        step,
        theta: theta.values().to_vec(),
        objective: scored.objective,
        accepted,
    });
}

fn track(
    best_feasible: &mut Option<Best>,
    best_attempt: &mut Option<Best>,
    theta: &DesignPoint,
    scored: &Scored,
) {
    if let Some(score) = scored.score {
        consider(best_attempt, score, theta, scored.report.as_ref());
        if scored.feasible {
            // Feasible candidates carry no penalty, so the score is the
            // direction-adjusted raw objective.
            consider(best_feasible, score, theta, scored.report.as_ref());
        }
    }
}

/// Search the design space for the best feasible mechanism.
///
/// A fixed start runs a single chain; a random start runs `restarts`
/// independent chains. Candidates whose solve fails count as infeasible
/// and never abort the run.
pub fn optimize(
    space: &DesignSpace,
    objective: &ObjectiveSpec,
    constraints: &[ConstraintSpec],
    config: &AnnealConfig,
    start: Start,
) -> Result<OptimizationResult, AnnealError> {
    config.validate(space.dim());
    let (chains, fixed) = match &start {
        Start::Fixed(p) => {
            assert!(space.contains(p), "start {p:?} must lie inside the design box");
            (1, Some(p.clone()))
        }
        Start::Random => (config.restarts, None),
    };

    let sign = match objective.kind.direction() {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let opts = EvalOptions::default();

    let mut eval = |chain: usize, step: usize, theta: &DesignPoint| -> Scored {
        let spec = if config.common_random_numbers {
            objective.clone()
        } else {
            objective.clone().with_seed(mix_seed(config.seed, chain as u64, step as u64))
        };
        match evaluate_candidate(space, theta, &spec, constraints, &opts) {
            Ok(report) => {
                let mut score = sign * report.objective_estimate;
                let mut rejected = false;
                let mut hard_violation = 0.0;
                for v in &report.constraint_verdicts {
                    if v.pass {
                        continue;
                    }
                    let kind = constraints
                        .iter()
                        .find(|c| c.kind_name() == v.kind)
                        .map(|c| &c.kind);
                    match kind.map(|k| handling(config.constraint_mode, k)) {
                        Some(Handling::Penalty(w)) => score -= w * (-v.margin).max(0.0),
                        _ => {
                            rejected = true;
                            hard_violation += (-v.margin).max(0.0);
                        }
                    }
                }
                Scored {
                    score: if rejected { None } else { Some(score) },
                    lost_rank: -1.0 - hard_violation / (1.0 + hard_violation),
                    objective: Some(report.objective_estimate),
                    feasible: report.feasible(),
                    report: Some(report),
                }
            }
            Err(_) => Scored {
                score: None,
                lost_rank: -3.0,
                objective: None,
                feasible: false,
                report: None,
            },
        }
    };

    let outcome = run_annealing(
        space.lower(),
        space.upper(),
        config,
        chains,
        fixed.as_ref(),
        &mut eval,
    );

    match outcome.best_feasible {
        Some(best) => Ok(OptimizationResult {
            best_theta: best.theta,
            best_report: best.report.expect("feasible best always carries a report"),
            trace: outcome.trace,
            restarts_used: outcome.chains_run,
        }),
        None => Err(AnnealError::AllInfeasible {
            best_attempt: outcome.best_attempt.and_then(|b| b.report).map(Box::new),
            trace: outcome.trace,
        }),
    }
}

fn mix_seed(seed: u64, chain: u64, step: u64) -> u64 {
    // splitmix64 over the packed run coordinates
    let mut z = seed ^ chain.rotate_left(32) ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of annealing a plain function over a box.
#[derive(Debug, Clone)]
pub struct BoxAnnealResult {
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<TraceEntry>,
}

/// Maximize an arbitrary function over a box with the same engine the
/// mechanism search uses. Handy for calibrating schedules on known
/// landscapes.
pub fn anneal_box(
    lower: &[f64],
    upper: &[f64],
    mut f: impl FnMut(&[f64]) -> f64,
    config: &AnnealConfig,
    start: Option<Vec<f64>>,
) -> BoxAnnealResult {
    assert_eq!(lower.len(), upper.len());
    config.validate(lower.len());
    let fixed = start.map(DesignPoint::new);
    let chains = if fixed.is_some() { 1 } else { config.restarts };
    let mut eval = |_chain: usize, _step: usize, theta: &DesignPoint| -> Scored {
        let v = f(theta.values());
        Scored { score: Some(v), lost_rank: 0.0, objective: Some(v), feasible: true, report: None }
    };
    let outcome = run_annealing(lower, upper, config, chains, fixed.as_ref(), &mut eval);
    let best = outcome.best_feasible.expect("function annealing always has a best");
    BoxAnnealResult { best_x: best.theta.values().to_vec(), best_value: best.key, trace: outcome.trace }
}
