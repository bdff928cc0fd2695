//! Constrained automated mechanism design for two-player infinite games
//! of incomplete information.
//!
//! The pipeline has three layers:
//!
//! 1. [`equilibrium`] solves the game induced by a candidate mechanism for
//!    a symmetric Bayes-Nash equilibrium by iterating an exact closed-form
//!    best response (quadratic maximization against a linear opponent
//!    under uniform types).
//! 2. [`evaluation`] estimates designer objectives by Monte Carlo on
//!    seeded type samples and verifies probabilistic constraints with the
//!    uniform-prior sample-count bound.
//! 3. [`annealer`] searches a box of mechanism parameters by simulated
//!    annealing over those noisy evaluations, with restarts and
//!    per-constraint reject/penalty handling.
//!
//! [`domains`] provides the shipped mechanism families (shared-good,
//! winner-pay/loser-pay with designer revenue, and its spiteful variant)
//! plus their closed-form oracles; [`cli`] drives end-to-end experiments
//! and emits JSONL records. See the crate examples for runnable tours of
//! each capability.

pub mod annealer;
pub mod cli;
pub mod domains;
pub mod equilibrium;
pub mod evaluation;
pub mod game;

pub use annealer::{
    anneal_box, evaluate_candidate, optimize, AnnealConfig, AnnealError, ConstraintMode,
    DesignPoint, DesignSpace, EvalOptions, OptimizationResult, Start, TraceEntry,
};
pub use domains::{
    design_space, myerson_game, myerson_space, sga_equilibrium_oracle, sga_game,
    sga_objective_oracles, sga_space, vicious_game, vicious_space, vicious_vickrey, DomainError,
    Mechanism, MyersonParams, OpportunityCost, RevenueRule, SgaParams, ViciousParams,
    VICIOUS_SPITE,
};
pub use equilibrium::{
    best_response, check_convergence, expected_utility, is_bnic, solve_equilibrium, BestResponse,
    EquilibriumResult, SolveError, SolverConfig,
};
pub use evaluation::{
    check_ex_interim_ir, check_min_revenue, evaluate_objective, exante_gap, fairness_gap,
    ir_repair, revenue, samples_required, welfare, welfare_surplus, winner_utility,
    BaseObjective, ConstraintKind, ConstraintSpec, ConstraintVerdict, Direction, Estimate,
    EvalError, EvalReport, IrRepair, ObjectiveKind, ObjectiveSpec,
};
pub use game::{
    payoff, sample_type_profiles, AffineBranch, LinearStrategy, SampleError, SamplerKind,
    TypeSampler, WinnerTakeGame,
};
