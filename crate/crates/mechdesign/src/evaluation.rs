//! Objective estimation by sample mean, probabilistic constraint
//! verification with the uniform-prior sample bound, and the constant
//! rebate that restores individual rationality without moving incentives.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annealer::{DesignPoint, DesignSpace};
use crate::domains::{DomainError, Mechanism, RevenueRule};
use crate::equilibrium::{
    expected_utility_with, interior_quadratic, violation_measure, EquilibriumResult, SolveError,
};
use crate::game::{sample_type_profiles, LinearStrategy, SampleError, TypeSampler, WinnerTakeGame};

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error("the mechanism does not expose an allocation parameter q")]
    MissingAllocation,
    #[error("the domain has no constant-payment parameters to shift")]
    MissingConstantPayments,
    #[error("weighted objectives cannot nest another weighted objective")]
    NestedWeighted,
}

/// Minimum number of samples needed to conclude, with confidence `1 − alpha`
/// and a uniform prior on the violation mass, that a constraint holds except
/// on a type set of probability at most `p`:
///
/// ```text
///   n ≥ log(alpha) / log(1 − p) − 1
/// ```
pub fn samples_required(alpha: f64, p: f64) -> usize {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
    assert!(p > 0.0 && p < 1.0, "p must be in (0,1)");
    let bound = alpha.ln() / (1.0 - p).ln() - 1.0;
    bound.ceil().max(0.0) as usize
}

/// A sample-mean estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn mean_and_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return Estimate { value: mean, stderr: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Estimate { value: mean, stderr: (var / n).sqrt() }
}

/// One realized play of the symmetric equilibrium on a sampled type profile.
#[derive(Debug, Clone, Copy)]
struct ProfileOutcome {
    winner_payoff: f64,
    loser_payoff: f64,
    winner_type: f64,
    loser_type: f64,
    revenue: f64,
}

fn play_profiles(
    game: &WinnerTakeGame,
    revenue: &RevenueRule,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Vec<ProfileOutcome>, SampleError> {
    let profiles = sample_type_profiles(sampler, n)?;
    Ok(profiles
        .into_iter()
        .map(|(t, tp)| {
            let (a, ap) = (eq.bid(t), eq.bid(tp));
            if a > ap {
                ProfileOutcome {
                    winner_payoff: game.payoff(t, a, tp, ap),
                    loser_payoff: game.payoff(tp, ap, t, a),
                    winner_type: t,
                    loser_type: tp,
                    revenue: revenue.revenue(a, ap),
                }
            } else if a < ap {
                ProfileOutcome {
                    winner_payoff: game.payoff(tp, ap, t, a),
                    loser_payoff: game.payoff(t, a, tp, ap),
                    winner_type: tp,
                    loser_type: t,
                    revenue: revenue.revenue(ap, a),
                }
            } else {
                // Coin-flip tie: both roles collect the branch average and
                // the role assignment averages out.
                let v = game.payoff(t, a, tp, ap);
                let mid = 0.5 * (t + tp);
                ProfileOutcome {
                    winner_payoff: v,
                    loser_payoff: v,
                    winner_type: mid,
                    loser_type: mid,
                    revenue: revenue.revenue(a, ap),
                }
            }
        })
        .collect())
}

/// |E[winner payoff] − E[loser payoff]|, absolute value outside the mean.
pub fn fairness_gap(
    game: &WinnerTakeGame,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Estimate, SampleError> {
    let out = play_profiles(game, &RevenueRule::None, eq, sampler, n)?;
    let diffs: Vec<f64> = out.iter().map(|o| o.winner_payoff - o.loser_payoff).collect();
    let est = mean_and_stderr(&diffs);
    Ok(Estimate { value: est.value.abs(), stderr: est.stderr })
}

/// E[|winner payoff − loser payoff|], absolute value inside the mean.
pub fn exante_gap(
    game: &WinnerTakeGame,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Estimate, SampleError> {
    let out = play_profiles(game, &RevenueRule::None, eq, sampler, n)?;
    let diffs: Vec<f64> =
        out.iter().map(|o| (o.winner_payoff - o.loser_payoff).abs()).collect();
    Ok(mean_and_stderr(&diffs))
}

/// Mean realized payoff of the winning role.
pub fn winner_utility(
    game: &WinnerTakeGame,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Estimate, SampleError> {
    let out = play_profiles(game, &RevenueRule::None, eq, sampler, n)?;
    let xs: Vec<f64> = out.iter().map(|o| o.winner_payoff).collect();
    Ok(mean_and_stderr(&xs))
}

/// Mean per-profile payment to the designer.
pub fn revenue(
    mech: &Mechanism,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Estimate, SampleError> {
    let out = play_profiles(&mech.game, &mech.revenue, eq, sampler, n)?;
    let xs: Vec<f64> = out.iter().map(|o| o.revenue).collect();
    Ok(mean_and_stderr(&xs))
}

/// Allocation-value welfare: `q·(type of the higher bidder) + (1−q)·(type
/// of the lower bidder)` per profile.
pub fn welfare(
    mech: &Mechanism,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Estimate, EvalError> {
    let q = mech.allocation_q.ok_or(EvalError::MissingAllocation)?;
    let out = play_profiles(&mech.game, &mech.revenue, eq, sampler, n)?;
    let xs: Vec<f64> = out.iter().map(|o| q * o.winner_type + (1.0 - q) * o.loser_type).collect();
    Ok(mean_and_stderr(&xs))
}

/// Alternative welfare notion: sum of realized utilities plus designer
/// revenue. Kept alongside the allocation-value default because spiteful
/// utilities make "welfare" ambiguous.
pub fn welfare_surplus(
    mech: &Mechanism,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
) -> Result<Estimate, SampleError> {
    let out = play_profiles(&mech.game, &mech.revenue, eq, sampler, n)?;
    let xs: Vec<f64> = out.iter().map(|o| o.winner_payoff + o.loser_payoff + o.revenue).collect();
    Ok(mean_and_stderr(&xs))
}

/// Whether larger objective values are better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// A single estimator usable inside a weighted objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseObjective {
    FairnessGap,
    ExanteGap,
    WinnerUtility,
    Revenue,
    Welfare,
}

impl BaseObjective {
    fn name(&self) -> &'static str {
        match self {
            BaseObjective::FairnessGap => "fairness_gap",
            BaseObjective::ExanteGap => "exante_gap",
            BaseObjective::WinnerUtility => "winner_utility",
            BaseObjective::Revenue => "revenue",
            BaseObjective::Welfare => "welfare",
        }
    }
}

impl FromStr for BaseObjective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fairness_gap" => Ok(BaseObjective::FairnessGap),
            "exante_gap" => Ok(BaseObjective::ExanteGap),
            "winner_utility" => Ok(BaseObjective::WinnerUtility),
            "revenue" => Ok(BaseObjective::Revenue),
            "welfare" => Ok(BaseObjective::Welfare),
            other => Err(format!("unknown objective '{other}'")),
        }
    }
}

/// What the designer measures.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveKind {
    FairnessGap,
    ExanteGap,
    WinnerUtility,
    Revenue,
    Welfare,
    /// Weighted sum of base objectives, always maximized; use negative
    /// weights to penalize a quantity.
    Weighted(Vec<(BaseObjective, f64)>),
}

impl ObjectiveKind {
    pub fn direction(&self) -> Direction {
        match self {
            ObjectiveKind::FairnessGap | ObjectiveKind::ExanteGap => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveKind::FairnessGap => write!(f, "fairness_gap"),
            ObjectiveKind::ExanteGap => write!(f, "exante_gap"),
            ObjectiveKind::WinnerUtility => write!(f, "winner_utility"),
            ObjectiveKind::Revenue => write!(f, "revenue"),
            ObjectiveKind::Welfare => write!(f, "welfare"),
            ObjectiveKind::Weighted(terms) => {
                write!(f, "weighted:")?;
                for (i, (kind, w)) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}={}", kind.name(), w)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("weighted:") {
            let mut terms = Vec::new();
            for part in rest.split(',') {
                let (name, w) = part
                    .split_once('=')
                    .ok_or_else(|| format!("weighted term '{part}' is not name=weight"))?;
                let weight: f64 =
                    w.parse().map_err(|_| format!("bad weight '{w}' in '{part}'"))?;
                terms.push((name.parse::<BaseObjective>()?, weight));
            }
            if terms.is_empty() {
                return Err("weighted objective needs at least one term".into());
            }
            return Ok(ObjectiveKind::Weighted(terms));
        }
        Ok(match s.parse::<BaseObjective>()? {
            BaseObjective::FairnessGap => ObjectiveKind::FairnessGap,
            BaseObjective::ExanteGap => ObjectiveKind::ExanteGap,
            BaseObjective::WinnerUtility => ObjectiveKind::WinnerUtility,
            BaseObjective::Revenue => ObjectiveKind::Revenue,
            BaseObjective::Welfare => ObjectiveKind::Welfare,
        })
    }
}

/// Objective estimator configuration. The seed doubles as the common
/// random numbers anchor: reusing one spec across candidate designs holds
/// the sampled profiles fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub samples: usize,
    pub seed: u64,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind) -> Self {
        Self { kind, samples: 10_000, seed: 0 }
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn component_estimate(
    kind: BaseObjective,
    out: &[ProfileOutcome],
    allocation_q: Option<f64>,
) -> Result<Estimate, EvalError> {
    let est = match kind {
        BaseObjective::FairnessGap => {
            let xs: Vec<f64> = out.iter().map(|o| o.winner_payoff - o.loser_payoff).collect();
            let e = mean_and_stderr(&xs);
            Estimate { value: e.value.abs(), stderr: e.stderr }
        }
        BaseObjective::ExanteGap => {
            let xs: Vec<f64> =
                out.iter().map(|o| (o.winner_payoff - o.loser_payoff).abs()).collect();
            mean_and_stderr(&xs)
        }
        BaseObjective::WinnerUtility => {
            let xs: Vec<f64> = out.iter().map(|o| o.winner_payoff).collect();
            mean_and_stderr(&xs)
        }
        BaseObjective::Revenue => {
            let xs: Vec<f64> = out.iter().map(|o| o.revenue).collect();
            mean_and_stderr(&xs)
        }
        BaseObjective::Welfare => {
            let q = allocation_q.ok_or(EvalError::MissingAllocation)?;
            let xs: Vec<f64> =
                out.iter().map(|o| q * o.winner_type + (1.0 - q) * o.loser_type).collect();
            mean_and_stderr(&xs)
        }
    };
    Ok(est)
}

/// Estimate the configured objective at an equilibrium. All components of
/// a weighted objective share one sampled profile set; the combined
/// standard error ignores cross-component correlation.
pub fn evaluate_objective(
    spec: &ObjectiveSpec,
    mech: &Mechanism,
    eq: &LinearStrategy,
) -> Result<Estimate, EvalError> {
    let sampler = TypeSampler::for_game(&mech.game, spec.seed);
    let out = play_profiles(&mech.game, &mech.revenue, eq, &sampler, spec.samples)?;
    match &spec.kind {
        ObjectiveKind::FairnessGap => {
            component_estimate(BaseObjective::FairnessGap, &out, mech.allocation_q)
        }
        ObjectiveKind::ExanteGap => {
            component_estimate(BaseObjective::ExanteGap, &out, mech.allocation_q)
        }
        ObjectiveKind::WinnerUtility => {
            component_estimate(BaseObjective::WinnerUtility, &out, mech.allocation_q)
        }
        ObjectiveKind::Revenue => {
            component_estimate(BaseObjective::Revenue, &out, mech.allocation_q)
        }
        ObjectiveKind::Welfare => {
            component_estimate(BaseObjective::Welfare, &out, mech.allocation_q)
        }
        ObjectiveKind::Weighted(terms) => {
            let mut value = 0.0;
            let mut var = 0.0;
            for &(kind, w) in terms {
                let e = component_estimate(kind, &out, mech.allocation_q)?;
                value += w * e.value;
                var += w * w * e.stderr * e.stderr;
            }
            Ok(Estimate { value, stderr: var.sqrt() })
        }
    }
}

/// Probabilistic constraints attached to a design problem.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintKind {
    /// Last two solver iterates differ by less than `tol` except on a type
    /// set of measure at most `p`.
    Convergence { tol: f64, p: f64 },
    /// Every sampled type's exact interim utility clears its opportunity
    /// cost minus `tol`.
    ExInterimIr { tol: f64, p: f64, opportunity_cost: f64 },
    /// Expected designer revenue of at least `floor`.
    MinRevenue { floor: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub kind: ConstraintKind,
    /// Confidence parameter 1 − alpha for the sample-count bound.
    pub alpha: f64,
    /// Override for the sample count; derived from `samples_required` when
    /// absent (never resolved below the bound).
    pub samples: Option<usize>,
}

/// Sample count floor used across the experiments.
pub const DEFAULT_CONSTRAINT_SAMPLES: usize = 50;

impl ConstraintSpec {
    pub fn convergence() -> Self {
        Self { kind: ConstraintKind::Convergence { tol: 1e-3, p: 0.06 }, alpha: 0.05, samples: None }
    }

    pub fn ex_interim_ir() -> Self {
        Self {
            kind: ConstraintKind::ExInterimIr { tol: 0.01, p: 0.06, opportunity_cost: 0.0 },
            alpha: 0.05,
            samples: None,
        }
    }

    pub fn min_revenue(floor: f64) -> Self {
        Self { kind: ConstraintKind::MinRevenue { floor }, alpha: 0.05, samples: None }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ConstraintKind::Convergence { .. } => "convergence",
            ConstraintKind::ExInterimIr { .. } => "ex_interim_ir",
            ConstraintKind::MinRevenue { .. } => "min_revenue",
        }
    }

    /// Samples this constraint will actually draw.
    pub fn resolved_samples(&self) -> usize {
        match self.kind {
            ConstraintKind::Convergence { .. } => 0,
            ConstraintKind::ExInterimIr { p, .. } => {
                let required = samples_required(self.alpha, p);
                match self.samples {
                    Some(n) => n.max(required),
                    None => required.max(DEFAULT_CONSTRAINT_SAMPLES),
                }
            }
            ConstraintKind::MinRevenue { .. } => self.samples.unwrap_or(10_000),
        }
    }
}

/// Outcome of one constraint check. `margin` is the slack toward the
/// pass/fail boundary (nonnegative iff pass): measure slack for
/// convergence, worst sampled interim margin for IR, estimate minus floor
/// for minimum revenue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintVerdict {
    pub kind: String,
    pub pass: bool,
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub worst_type: Option<f64>,
}

/// Check the (1−p)-strong convergence constraint on the solver's final two
/// iterates. Exact for linear strategies; no sampling involved.
pub fn check_convergence_constraint(
    eq: &EquilibriumResult,
    tol: f64,
    p: f64,
) -> ConstraintVerdict {
    let n = eq.history.len();
    let measure = if n >= 2 {
        violation_measure(&eq.history[n - 2], &eq.history[n - 1], tol)
    } else {
        0.0
    };
    let mut margin = p - measure;
    let pass = eq.converged && measure <= p;
    if !eq.converged {
        margin = margin.min(0.0);
    }
    ConstraintVerdict { kind: "convergence".into(), pass, margin, worst_type: None }
}

/// Check (1−p)-strong ex-interim individual rationality at a symmetric
/// equilibrium. Interim utilities are exact closed forms, so the only
/// sampling is over own types; the count honors the Theorem-1 bound.
#[allow(clippy::too_many_arguments)]
pub fn check_ex_interim_ir<C: Fn(f64) -> f64>(
    game: &WinnerTakeGame,
    eq: &LinearStrategy,
    opportunity_cost: C,
    tol: f64,
    p: f64,
    alpha: f64,
    samples: Option<usize>,
    seed: u64,
) -> Result<ConstraintVerdict, SolveError> {
    let required = samples_required(alpha, p);
    let n = match samples {
        Some(s) => s.max(required),
        None => required.max(DEFAULT_CONSTRAINT_SAMPLES),
    };
    let quad = interior_quadratic(game, eq)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut worst_type = game.type_low;
    for _ in 0..n.max(1) {
        let t = rng.gen_range(game.type_low..=game.type_high);
        let eu = expected_utility_with(game, eq, &quad, t, eq.bid(t));
        let margin = eu - (opportunity_cost(t) - tol);
        if margin < worst {
            worst = margin;
            worst_type = t;
        }
    }
    Ok(ConstraintVerdict {
        kind: "ex_interim_ir".into(),
        pass: worst >= 0.0,
        margin: worst,
        worst_type: Some(worst_type),
    })
}

/// Check the minimum-revenue constraint by sample mean. With
/// `stderr_guard` the estimate must clear the floor by one standard error.
pub fn check_min_revenue(
    mech: &Mechanism,
    eq: &LinearStrategy,
    sampler: &TypeSampler,
    n: usize,
    floor: f64,
    stderr_guard: bool,
) -> Result<ConstraintVerdict, SampleError> {
    let est = revenue(mech, eq, sampler, n)?;
    let guard = if stderr_guard { est.stderr } else { 0.0 };
    let margin = est.value - guard - floor;
    Ok(ConstraintVerdict {
        kind: "min_revenue".into(),
        pass: margin >= 0.0,
        margin,
        worst_type: None,
    })
}

/// Result of the individual-rationality repair.
#[derive(Debug, Clone)]
pub struct IrRepair {
    pub adjusted: DesignPoint,
    /// Constant payment made to each agent (zero when already rational).
    pub rebate: f64,
    pub min_margin_before: f64,
}

/// Pay each agent the expected shortfall of the least fortunate type by
/// lowering both constant payments. Constant transfers leave the
/// equilibrium untouched, so `eq` remains valid for the adjusted design.
pub fn ir_repair<C: Fn(f64) -> f64>(
    space: &DesignSpace,
    theta: &DesignPoint,
    eq: &LinearStrategy,
    opportunity_cost: C,
    grid: usize,
) -> Result<IrRepair, EvalError> {
    let indices: Vec<usize> = space
        .constant_payment_params()
        .iter()
        .filter_map(|name| space.param_index(name))
        .collect();
    if indices.is_empty() {
        return Err(EvalError::MissingConstantPayments);
    }
    let mech = space.build(theta)?;
    let min_margin = min_interim_margin(&mech.game, eq, &opportunity_cost, grid)?;
    let rebate = (-min_margin).max(0.0);
    let mut values = theta.values().to_vec();
    for &i in &indices {
        values[i] -= rebate;
    }
    Ok(IrRepair { adjusted: DesignPoint::new(values), rebate, min_margin_before: min_margin })
}

/// Minimum of `EU(t, eq(t)) − C(t)` over an evenly spaced type grid.
pub fn min_interim_margin<C: Fn(f64) -> f64>(
    game: &WinnerTakeGame,
    eq: &LinearStrategy,
    opportunity_cost: &C,
    grid: usize,
) -> Result<f64, SolveError> {
    assert!(grid >= 2, "grid needs at least two points");
    let quad = interior_quadratic(game, eq)?;
    let mut min_margin = f64::INFINITY;
    for i in 0..grid {
        let t = game.type_low + game.type_range() * i as f64 / (grid - 1) as f64;
        let eu = expected_utility_with(game, eq, &quad, t, eq.bid(t));
        min_margin = min_margin.min(eu - opportunity_cost(t));
    }
    Ok(min_margin)
}

/// Everything known about one evaluated candidate design.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub objective_estimate: f64,
    pub objective_stderr: f64,
    pub constraint_verdicts: Vec<ConstraintVerdict>,
    pub equilibrium: EquilibriumResult,
    pub theta: DesignPoint,
    /// Seed of the profile sample behind the objective estimate.
    pub seed: u64,
}

impl EvalReport {
    /// A report with any failed constraint is infeasible.
    pub fn feasible(&self) -> bool {
        self.constraint_verdicts.iter().all(|v| v.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{
        myerson_game, sga_equilibrium_oracle, sga_game, sga_objective_oracles, sga_space,
        vicious_game, vicious_vickrey, MyersonParams, SgaParams, VICIOUS_SPITE,
    };
    use crate::equilibrium::{solve_equilibrium, SolverConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sga_at_equilibrium(h: f64, k: f64) -> (Mechanism, LinearStrategy) {
        let mech = sga_game(&SgaParams { h, k });
        let eq = sga_equilibrium_oracle(h, k, 0.0, 1.0).unwrap();
        (mech, eq)
    }

    #[test]
    fn theorem_one_sample_counts() {
        assert_eq!(samples_required(0.05, 0.06), 48);
        assert_eq!(samples_required(0.05, 0.5), 4);
        assert_eq!(samples_required(0.999_999_9, 0.3), 0);
    }

    #[test]
    fn sample_bound_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let alpha = rng.gen_range(0.001..0.5);
            let p = rng.gen_range(0.001..0.9);
            let n = samples_required(alpha, p);
            // Nonincreasing in p, nondecreasing as alpha decreases.
            assert!(samples_required(alpha, (p + 0.05).min(0.95)) <= n);
            assert!(samples_required(alpha * 0.5, p) >= n);
        }
    }

    #[test]
    fn fairness_gap_matches_the_closed_forms() {
        let sampler = TypeSampler::uniform(0.0, 1.0, 21);
        let (mech, eq) = sga_at_equilibrium(0.5, 0.0);
        let est = fairness_gap(&mech.game, &eq, &sampler, 100_000).unwrap();
        assert!((est.value - 2.0 / 9.0).abs() < 0.01, "{}", est.value);

        let (mech, eq) = sga_at_equilibrium(0.0, 1.0);
        let est = fairness_gap(&mech.game, &eq, &sampler, 100_000).unwrap();
        assert!((est.value - 1.0 / 9.0).abs() < 0.01, "{}", est.value);

        // Truthful mechanism evaluated at the truthful strategy.
        let mech = sga_game(&SgaParams { h: 1.0 / 3.0, k: 0.0 });
        let eq = LinearStrategy::truthful(&mech.game);
        let est = fairness_gap(&mech.game, &eq, &sampler, 100_000).unwrap();
        assert!((est.value - 2.0 / 9.0).abs() < 0.01, "{}", est.value);
    }

    #[test]
    fn exante_gap_reproduces_reported_values() {
        let sampler = TypeSampler::uniform(0.0, 1.0, 22);
        let (mech, eq) = sga_at_equilibrium(0.49, 1.0);
        let est = exante_gap(&mech.game, &eq, &sampler, 200_000).unwrap();
        assert!((est.value - 0.176).abs() < 0.005, "{}", est.value);

        let mech = sga_game(&SgaParams { h: 1.0 / 3.0, k: 0.0 });
        let eq = LinearStrategy::truthful(&mech.game);
        let est = exante_gap(&mech.game, &eq, &sampler, 200_000).unwrap();
        assert!((est.value - 2.0 / 9.0).abs() < 0.005, "{}", est.value);
    }

    #[test]
    fn exante_gap_vanishes_when_branches_coincide() {
        use crate::game::AffineBranch;
        // Identical branches that also weigh both players' types and bids
        // equally, so the winner and loser realize the same payoff.
        let branch = AffineBranch::new(0.5, -0.2, 0.5, -0.2, 0.3);
        let game = WinnerTakeGame::new(branch, branch, 0.0, 1.0);
        let eq = LinearStrategy::truthful(&game);
        let sampler = TypeSampler::uniform(0.0, 1.0, 23);
        let est = exante_gap(&game, &eq, &sampler, 1000).unwrap();
        assert!(est.value < 1e-12, "{}", est.value);
        let fair = fairness_gap(&game, &eq, &sampler, 1000).unwrap();
        assert!(fair.value < 1e-12, "{}", fair.value);
    }

    #[test]
    fn winner_utility_matches_the_closed_forms() {
        let sampler = TypeSampler::uniform(0.0, 1.0, 24);
        for &(h, k) in &[(0.5, 0.0), (0.91, 0.03), (0.5, 0.5)] {
            let (mech, eq) = sga_at_equilibrium(h, k);
            let est = winner_utility(&mech.game, &eq, &sampler, 100_000).unwrap();
            let (_, oracle) = sga_objective_oracles(h, k).unwrap();
            assert!((est.value - oracle).abs() < 0.005, "SGA({h},{k}): {} vs {oracle}", est.value);
        }
    }

    #[test]
    fn revenue_examples() {
        let sampler = TypeSampler::uniform(0.0, 1.0, 25);
        // Truthful revenue-optimal design collects 1/3.
        let mech = myerson_game(&MyersonParams {
            q: 1.0,
            k1: 0.5,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        let eq = LinearStrategy::truthful(&mech.game);
        let est = revenue(&mech, &eq, &sampler, 100_000).unwrap();
        assert!((est.value - 1.0 / 3.0).abs() < 0.01, "{}", est.value);

        // Shared-good auctions never pay the designer.
        let (mech, eq) = sga_at_equilibrium(0.4, 0.4);
        let est = revenue(&mech, &eq, &sampler, 1000).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn welfare_examples() {
        let sampler = TypeSampler::uniform(0.0, 1.0, 26);
        let mech = myerson_game(&MyersonParams {
            q: 1.0,
            k1: 1.0,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        let eq = LinearStrategy::new(0.5, 0.0, 0.0, 1.0);
        let est = welfare(&mech, &eq, &sampler, 100_000).unwrap();
        assert!((est.value - 2.0 / 3.0).abs() < 0.01, "{}", est.value);

        // q = 0 with an increasing strategy allocates to the lower type.
        let mech = myerson_game(&MyersonParams {
            q: 0.0,
            k1: 1.0,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        let eq = LinearStrategy::truthful(&mech.game);
        let est = welfare(&mech, &eq, &sampler, 100_000).unwrap();
        assert!((est.value - 1.0 / 3.0).abs() < 0.01, "{}", est.value);

        // Interpolation: (1+q)/3 at any strictly increasing equilibrium.
        for &q in &[0.25, 0.5, 0.8] {
            let mech = myerson_game(&MyersonParams {
                q,
                k1: 1.0,
                k2: 0.0,
                big_k1: 0.0,
                k3: 0.0,
                k4: 0.0,
                big_k2: 0.0,
            });
            let eq = LinearStrategy::truthful(&mech.game);
            let est = welfare(&mech, &eq, &sampler, 100_000).unwrap();
            assert!(
                (est.value - (1.0 + q) / 3.0).abs() < 0.01,
                "q={q}: {}",
                est.value
            );
        }
    }

    #[test]
    fn jensen_ordering_on_shared_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        for _ in 0..20 {
            let h = rng.gen_range(0.0..=1.0);
            let k = rng.gen_range(0.0..=1.0);
            if h + k < 0.05 {
                continue;
            }
            let (mech, eq) = sga_at_equilibrium(h, k);
            let sampler = TypeSampler::uniform(0.0, 1.0, rng.gen());
            let fair = fairness_gap(&mech.game, &eq, &sampler, 2000).unwrap();
            let exante = exante_gap(&mech.game, &eq, &sampler, 2000).unwrap();
            assert!(
                exante.value >= fair.value - 1e-12,
                "SGA({h},{k}): {} < {}",
                exante.value,
                fair.value
            );
        }
    }

    #[test]
    fn interim_ir_passes_for_the_shared_good_auction() {
        let (mech, eq) = sga_at_equilibrium(0.5, 0.0);
        let verdict =
            check_ex_interim_ir(&mech.game, &eq, |_| 0.0, 0.01, 0.06, 0.05, None, 31).unwrap();
        assert!(verdict.pass, "margin {}", verdict.margin);
        assert!(verdict.worst_type.is_some());
    }

    #[test]
    fn interim_ir_fails_for_the_vicious_second_price_auction() {
        let mech = vicious_game(&vicious_vickrey(VICIOUS_SPITE));
        let res = solve_equilibrium(
            &mech.game,
            LinearStrategy::truthful(&mech.game),
            &SolverConfig::default(),
        )
        .unwrap();
        let verdict =
            check_ex_interim_ir(&mech.game, &res.strategy, |_| 0.0, 0.01, 0.06, 0.05, None, 32)
                .unwrap();
        assert!(!verdict.pass);
        // Worst margin approaches (2/7)(2/9 − 1/2) + tol ≈ −0.069.
        assert!(verdict.margin < -0.05, "margin {}", verdict.margin);
    }

    #[test]
    fn min_revenue_verdicts() {
        let sampler = TypeSampler::uniform(0.0, 1.0, 33);
        let (mech, eq) = sga_at_equilibrium(0.5, 0.5);
        let pass = check_min_revenue(&mech, &eq, &sampler, 1000, 0.0, false).unwrap();
        assert!(pass.pass);
        let fail = check_min_revenue(&mech, &eq, &sampler, 1000, 0.01, false).unwrap();
        assert!(!fail.pass);
    }

    #[test]
    fn ir_repair_leaves_rational_designs_alone() {
        let space = crate::domains::myerson_space();
        let theta = DesignPoint::new(vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mech = space.build(&theta).unwrap();
        let eq = LinearStrategy::truthful(&mech.game);
        let repair = ir_repair(&space, &theta, &eq, |_| 0.0, 201).unwrap();
        assert_eq!(repair.rebate, 0.0);
        assert_eq!(repair.adjusted.values(), theta.values());
    }

    #[test]
    fn ir_repair_restores_rationality_without_moving_the_equilibrium() {
        let space = crate::domains::vicious_space(VICIOUS_SPITE);
        let theta = DesignPoint::new(vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let mech = space.build(&theta).unwrap();
        let res = solve_equilibrium(
            &mech.game,
            LinearStrategy::truthful(&mech.game),
            &SolverConfig::default(),
        )
        .unwrap();
        let repair = ir_repair(&space, &theta, &res.strategy, |_| 0.0, 201).unwrap();
        assert!(repair.rebate > 0.0);

        // Fresh grid on the adjusted design clears the bar.
        let adjusted_mech = space.build(&repair.adjusted).unwrap();
        let margin =
            min_interim_margin(&adjusted_mech.game, &res.strategy, &|_: f64| 0.0, 401).unwrap();
        assert!(margin >= -1e-9, "post-repair margin {margin}");

        // Constant transfers leave the best response unchanged.
        let res_after = solve_equilibrium(
            &adjusted_mech.game,
            LinearStrategy::truthful(&adjusted_mech.game),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(res.strategy.m, res_after.strategy.m, epsilon = 1e-9);
        assert_relative_eq!(res.strategy.b, res_after.strategy.b, epsilon = 1e-9);
    }

    #[test]
    fn ir_repair_requires_constant_payment_parameters() {
        let space = sga_space();
        let theta = DesignPoint::new(vec![0.5, 0.0]);
        let mech = space.build(&theta).unwrap();
        let eq = sga_equilibrium_oracle(0.5, 0.0, 0.0, 1.0).unwrap();
        let _ = mech;
        assert!(matches!(
            ir_repair(&space, &theta, &eq, |_| 0.0, 101),
            Err(EvalError::MissingConstantPayments)
        ));
    }

    #[test]
    fn objective_kind_strings_round_trip() {
        for s in [
            "fairness_gap",
            "exante_gap",
            "winner_utility",
            "revenue",
            "welfare",
            "weighted:revenue=0.5,welfare=0.5",
        ] {
            let kind: ObjectiveKind = s.parse().unwrap();
            assert_eq!(kind.to_string(), s);
        }
        assert!("spite".parse::<ObjectiveKind>().is_err());
    }

    #[test]
    fn weighted_objective_combines_components() {
        let mech = myerson_game(&MyersonParams {
            q: 1.0,
            k1: 0.5,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        let eq = LinearStrategy::truthful(&mech.game);
        let spec = ObjectiveSpec::new(ObjectiveKind::Weighted(vec![
            (BaseObjective::Revenue, 0.5),
            (BaseObjective::Welfare, 0.5),
        ]))
        .with_samples(100_000)
        .with_seed(34);
        let est = evaluate_objective(&spec, &mech, &eq).unwrap();
        // 0.5·(1/3) + 0.5·(2/3) = 0.5.
        assert!((est.value - 0.5).abs() < 0.01, "{}", est.value);
    }
}
