//! Pinned-seed reproduction experiments with achieved-vs-target reporting.
//!
//! Each experiment runs the full pipeline (solve, evaluate, anneal) with
//! fixed seeds and compares what it achieves against the published values
//! at the documented tolerances. Smoke runs can shrink the Monte Carlo
//! counts via the sample override, at the cost of the tolerances.

use crate::annealer::{
    evaluate_candidate, optimize, AnnealConfig, DesignPoint, EvalOptions, OptimizationResult,
    Start,
};
use crate::cli::records::{summary_from_report, ComparisonRecord, Record};
use crate::domains::{
    myerson_space, sga_objective_oracles, sga_space, vicious_game, vicious_space,
    vicious_vickrey, MyersonParams, ViciousParams, VICIOUS_SPITE,
};
use crate::equilibrium::{solve_equilibrium, SolverConfig};
use crate::evaluation::{
    min_interim_margin, revenue, ConstraintSpec, EvalError, ObjectiveKind, ObjectiveSpec,
};
use crate::game::{LinearStrategy, TypeSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Names accepted by [`run_experiments`].
pub const EXPERIMENTS: [&str; 6] =
    ["table1", "table2", "table3", "myerson_revenue", "myerson_welfare", "vicious"];

#[derive(Debug, thiserror::Error)]
pub enum ReproduceError {
    #[error("unknown experiment '{0}' (table1|table2|table3|myerson_revenue|myerson_welfare|vicious|all)")]
    UnknownExperiment(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

const TABLE1_SEED: u64 = 41;
const TABLE2_SEED: u64 = 42;
const TABLE3_SEED: u64 = 43;
const MYERSON_REVENUE_SEED: u64 = 51;
const MYERSON_WELFARE_SEED: u64 = 52;
const VICIOUS_SEED: u64 = 53;

/// Revenue floor used by the welfare experiment. The published experiment
/// used an unreported floor; this one is part of the pinned configuration.
pub const WELFARE_REVENUE_FLOOR: f64 = 0.05;

/// Comparisons and auxiliary records from one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub name: String,
    pub comparisons: Vec<ComparisonRecord>,
    pub records: Vec<Record>,
}

impl ExperimentOutcome {
    pub fn all_pass(&self) -> bool {
        self.comparisons.iter().all(|c| c.pass)
    }
}

fn objective_spec(kind: ObjectiveKind, samples: usize, master: u64) -> ObjectiveSpec {
    ObjectiveSpec::new(kind)
        .with_samples(samples)
        .with_seed(master.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1))
}

struct Counts {
    search: usize,
    check: usize,
}

fn counts(samples: Option<usize>) -> Counts {
    match samples {
        Some(n) => Counts { search: n.max(10), check: n.saturating_mul(10).max(100) },
        None => Counts { search: 10_000, check: 100_000 },
    }
}

/// Fairness-gap minimization over the shared-good box, from the published
/// fixed start and from random restarts.
pub fn table1(samples: Option<usize>) -> ExperimentOutcome {
    let n = counts(samples);
    let space = sga_space();
    let objective = objective_spec(ObjectiveKind::FairnessGap, n.search, TABLE1_SEED);
    let constraints = vec![ConstraintSpec::convergence()];
    let config = AnnealConfig::default().with_seed(TABLE1_SEED);

    let mut comparisons = Vec::new();
    let mut records = Vec::new();
    let runs = [
        ("fixed_start", Start::Fixed(DesignPoint::new(vec![0.5, 0.0]))),
        ("restarts", Start::Random),
    ];
    for (label, start) in runs {
        match optimize(&space, &objective, &constraints, &config, start) {
            Ok(res) => {
                comparisons.push(ComparisonRecord::le(
                    "table1",
                    &format!("{label}_objective"),
                    res.best_report.objective_estimate,
                    0.12,
                ));
                comparisons.push(ComparisonRecord::le(
                    "table1",
                    &format!("{label}_final_h"),
                    res.best_theta.values()[0],
                    0.05,
                ));
                records.push(Record::Summary(summary_from_report(
                    "sga",
                    &res.best_report,
                    &objective.kind.to_string(),
                )));
            }
            Err(_) => comparisons.push(ComparisonRecord::le(
                "table1",
                &format!("{label}_objective"),
                f64::MAX,
                0.12,
            )),
        }
    }
    ExperimentOutcome { name: "table1".into(), comparisons, records }
}

/// Ex-ante gap minimization plus the truthful-mechanism benchmark.
pub fn table2(samples: Option<usize>) -> ExperimentOutcome {
    let n = counts(samples);
    let space = sga_space();
    let constraints = vec![ConstraintSpec::convergence()];

    let mut comparisons = Vec::new();
    let mut records = Vec::new();

    // Benchmark: the unique truthful design, evaluated at its equilibrium.
    let truthful_objective = objective_spec(ObjectiveKind::ExanteGap, n.check, TABLE2_SEED);
    match evaluate_candidate(
        &space,
        &DesignPoint::new(vec![1.0 / 3.0, 0.0]),
        &truthful_objective,
        &constraints,
        &EvalOptions::default(),
    ) {
        Ok(report) => {
            comparisons.push(ComparisonRecord::within(
                "table2",
                "truthful_objective",
                report.objective_estimate,
                0.22,
                0.01,
            ));
            records.push(Record::Report(summary_from_report("sga", &report, "exante_gap")));
        }
        Err(err) => panic!("truthful SGA evaluation cannot fail: {err}"),
    }

    let objective = objective_spec(ObjectiveKind::ExanteGap, n.search, TABLE2_SEED);
    let config = AnnealConfig::default().with_seed(TABLE2_SEED);
    let runs = [
        ("fixed_start", Start::Fixed(DesignPoint::new(vec![0.5, 0.0]))),
        ("restarts", Start::Random),
    ];
    for (label, start) in runs {
        match optimize(&space, &objective, &constraints, &config, start) {
            Ok(res) => {
                comparisons.push(ComparisonRecord::le(
                    "table2",
                    &format!("{label}_objective"),
                    res.best_report.objective_estimate,
                    0.185,
                ));
                records.push(Record::Summary(summary_from_report(
                    "sga",
                    &res.best_report,
                    &objective.kind.to_string(),
                )));
            }
            Err(_) => comparisons.push(ComparisonRecord::le(
                "table2",
                &format!("{label}_objective"),
                f64::MAX,
                0.185,
            )),
        }
    }
    ExperimentOutcome { name: "table2".into(), comparisons, records }
}

/// Winner-utility maximization over the shared-good box.
pub fn table3(samples: Option<usize>) -> ExperimentOutcome {
    let n = counts(samples);
    let space = sga_space();
    let objective = objective_spec(ObjectiveKind::WinnerUtility, n.search, TABLE3_SEED);
    let constraints = vec![ConstraintSpec::convergence()];
    let config = AnnealConfig::default().with_seed(TABLE3_SEED);

    let mut comparisons = Vec::new();
    let mut records = Vec::new();
    let runs = [
        ("fixed_start", Start::Fixed(DesignPoint::new(vec![0.5, 0.0]))),
        ("restarts", Start::Random),
    ];
    for (label, start) in runs {
        match optimize(&space, &objective, &constraints, &config, start) {
            Ok(res) => {
                let achieved = res.best_report.objective_estimate;
                comparisons.push(ComparisonRecord::ge(
                    "table3",
                    &format!("{label}_objective"),
                    achieved,
                    0.43,
                ));
                // Either the transfer stays winner-funded (k at zero) or
                // the estimate agrees with the closed form at the design.
                let (h, k) = (res.best_theta.values()[0], res.best_theta.values()[1]);
                if k <= 0.05 {
                    comparisons.push(ComparisonRecord::le(
                        "table3",
                        &format!("{label}_final_k"),
                        k,
                        0.05,
                    ));
                } else {
                    let (_, oracle) = sga_objective_oracles(h, k).expect("h + k > 0 at optimum");
                    comparisons.push(ComparisonRecord::within(
                        "table3",
                        &format!("{label}_closed_form_gap"),
                        achieved,
                        oracle,
                        0.015,
                    ));
                }
                records.push(Record::Summary(summary_from_report(
                    "sga",
                    &res.best_report,
                    &objective.kind.to_string(),
                )));
            }
            Err(_) => comparisons.push(ComparisonRecord::ge(
                "table3",
                &format!("{label}_objective"),
                -1.0,
                0.43,
            )),
        }
    }
    ExperimentOutcome { name: "table3".into(), comparisons, records }
}

fn truthful_revenue_design() -> DesignPoint {
    // q = 1, k1 = 0.5: the truthful member of the revenue-optimal family.
    DesignPoint::new(vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0])
}

/// Revenue maximization over the seven-parameter box, with the truthful
/// 1/3-revenue benchmark and a polish run chained from the restart best.
pub fn myerson_revenue(samples: Option<usize>) -> ExperimentOutcome {
    let n = counts(samples);
    let space = myerson_space();
    let constraints = vec![ConstraintSpec::convergence(), ConstraintSpec::ex_interim_ir()];

    let mut comparisons = Vec::new();
    let mut records = Vec::new();

    let benchmark = objective_spec(ObjectiveKind::Revenue, n.check, MYERSON_REVENUE_SEED);
    match evaluate_candidate(
        &space,
        &truthful_revenue_design(),
        &benchmark,
        &constraints,
        &EvalOptions::default(),
    ) {
        Ok(report) => {
            comparisons.push(ComparisonRecord::within(
                "myerson_revenue",
                "truthful_revenue",
                report.objective_estimate,
                1.0 / 3.0,
                0.01,
            ));
            records.push(Record::Report(summary_from_report("myerson", &report, "revenue")));
        }
        Err(err) => panic!("truthful revenue design cannot fail: {err}"),
    }

    let objective = objective_spec(ObjectiveKind::Revenue, n.search, MYERSON_REVENUE_SEED);
    let config = AnnealConfig::default().with_seed(MYERSON_REVENUE_SEED);
    let restarts = optimize(&space, &objective, &constraints, &config, Start::Random);
    // Rerun from the best restart design before reading off the result.
    let polished = restarts.as_ref().ok().and_then(|res| {
        let polish_config = AnnealConfig::default().with_seed(MYERSON_REVENUE_SEED + 1);
        optimize(
            &space,
            &objective,
            &constraints,
            &polish_config,
            Start::Fixed(res.best_theta.clone()),
        )
        .ok()
    });

    let best: Option<OptimizationResult> = match (restarts.ok(), polished) {
        (Some(a), Some(b)) => Some(
            if b.best_report.objective_estimate >= a.best_report.objective_estimate {
                b
            } else {
                a
            },
        ),
        (Some(a), None) => Some(a),
        (None, b) => b,
    };
    match best {
        Some(res) => {
            comparisons.push(ComparisonRecord::ge(
                "myerson_revenue",
                "annealed_revenue",
                res.best_report.objective_estimate,
                0.28,
            ));
            records.push(Record::Summary(summary_from_report(
                "myerson",
                &res.best_report,
                "revenue",
            )));
        }
        None => comparisons.push(ComparisonRecord::ge(
            "myerson_revenue",
            "annealed_revenue",
            -1.0,
            0.28,
        )),
    }
    ExperimentOutcome { name: "myerson_revenue".into(), comparisons, records }
}

/// Welfare maximization with a revenue floor folded into the objective.
pub fn myerson_welfare(samples: Option<usize>) -> ExperimentOutcome {
    let n = counts(samples);
    let space = myerson_space();

    let mut comparisons = Vec::new();
    let mut records = Vec::new();

    // The second-price design allocates to the higher bidder; its welfare
    // is the expected maximum type.
    let second_price = DesignPoint::new(vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let benchmark = objective_spec(ObjectiveKind::Welfare, n.check, MYERSON_WELFARE_SEED);
    match evaluate_candidate(
        &space,
        &second_price,
        &benchmark,
        &[ConstraintSpec::convergence()],
        &EvalOptions::default(),
    ) {
        Ok(report) => {
            comparisons.push(ComparisonRecord::within(
                "myerson_welfare",
                "second_price_welfare",
                report.objective_estimate,
                2.0 / 3.0,
                0.01,
            ));
            records.push(Record::Report(summary_from_report("myerson", &report, "welfare")));
        }
        Err(err) => panic!("second-price welfare evaluation cannot fail: {err}"),
    }

    let objective = objective_spec(ObjectiveKind::Welfare, n.search, MYERSON_WELFARE_SEED);
    let constraints = vec![
        ConstraintSpec::convergence(),
        ConstraintSpec::ex_interim_ir(),
        ConstraintSpec::min_revenue(WELFARE_REVENUE_FLOOR),
    ];
    let config = AnnealConfig::default().with_seed(MYERSON_WELFARE_SEED);
    match optimize(&space, &objective, &constraints, &config, Start::Random) {
        Ok(res) => {
            comparisons.push(ComparisonRecord::ge(
                "myerson_welfare",
                "final_q",
                res.best_theta.values()[0],
                0.95,
            ));
            comparisons.push(ComparisonRecord::ge(
                "myerson_welfare",
                "equilibrium_slope",
                res.best_report.equilibrium.strategy.m,
                1e-6,
            ));
            records.push(Record::Summary(summary_from_report(
                "myerson",
                &res.best_report,
                "welfare",
            )));
        }
        Err(_) => comparisons.push(ComparisonRecord::ge("myerson_welfare", "final_q", -1.0, 0.95)),
    }
    ExperimentOutcome { name: "myerson_welfare".into(), comparisons, records }
}

/// Spiteful auctions: the known second-price equilibrium and revenue, the
/// zero-spite reduction, revenue search, and the rationality repair.
pub fn vicious(samples: Option<usize>) -> Result<ExperimentOutcome, EvalError> {
    let n = counts(samples);
    let mut comparisons = Vec::new();
    let mut records = Vec::new();

    // Known equilibrium of the vicious second-price auction.
    let mech = vicious_game(&vicious_vickrey(VICIOUS_SPITE));
    let eqres = solve_equilibrium(
        &mech.game,
        LinearStrategy::truthful(&mech.game),
        &SolverConfig::default(),
    )?;
    comparisons.push(ComparisonRecord::within(
        "vicious",
        "vickrey_slope",
        eqres.strategy.m,
        7.0 / 9.0,
        1e-3,
    ));
    comparisons.push(ComparisonRecord::within(
        "vicious",
        "vickrey_intercept",
        eqres.strategy.b,
        2.0 / 9.0,
        1e-3,
    ));

    let sampler = TypeSampler::for_game(&mech.game, VICIOUS_SEED);
    let rev = revenue(&mech, &eqres.strategy, &sampler, n.check)?;
    comparisons.push(ComparisonRecord::within(
        "vicious",
        "vickrey_revenue",
        rev.value,
        0.48,
        0.01,
    ));

    // Zero spite collapses to the plain family, coefficient by coefficient.
    let mut max_diff = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(VICIOUS_SEED ^ 0x4C30);
    for _ in 0..100 {
        let base = MyersonParams {
            q: rng.gen_range(0.0..=1.0),
            k1: rng.gen_range(0.0..=1.0),
            k2: rng.gen_range(0.0..=1.0),
            big_k1: rng.gen_range(0.0..=1.0),
            k3: rng.gen_range(0.0..=1.0),
            k4: rng.gen_range(0.0..=1.0),
            big_k2: rng.gen_range(0.0..=1.0),
        };
        let plain = crate::domains::myerson_game(&base);
        let vic = vicious_game(&ViciousParams { base, spite: 0.0 });
        for (a, b) in [
            (plain.game.win, vic.game.win),
            (plain.game.lose, vic.game.lose),
        ] {
            max_diff = max_diff
                .max((a.c_t - b.c_t).abs())
                .max((a.c_a - b.c_a).abs())
                .max((a.c_tp - b.c_tp).abs())
                .max((a.c_ap - b.c_ap).abs())
                .max((a.c_0 - b.c_0).abs());
        }
    }
    comparisons.push(ComparisonRecord::le("vicious", "zero_spite_reduction", max_diff, 0.0));

    // Revenue search over the spiteful box. Its feasible set fragments
    // into pockets separated by designs whose best-response iteration
    // diverges, so the search runs three restart batches with a wider
    // proposal step and a hotter start, then polishes the overall best.
    let space = vicious_space(VICIOUS_SPITE);
    let objective = objective_spec(ObjectiveKind::Revenue, n.search, VICIOUS_SEED);
    let constraints = vec![ConstraintSpec::convergence(), ConstraintSpec::ex_interim_ir()];
    let vicious_config = |seed: u64| {
        AnnealConfig {
            proposal_stddev: vec![0.15],
            initial_temperature: 0.3,
            ..AnnealConfig::default()
        }
        .with_seed(seed)
    };
    let mut best: Option<OptimizationResult> = None;
    for batch in 0..3 {
        if let Ok(res) = optimize(
            &space,
            &objective,
            &constraints,
            &vicious_config(VICIOUS_SEED + batch),
            Start::Random,
        ) {
            let better = match &best {
                Some(b) => res.best_report.objective_estimate > b.best_report.objective_estimate,
                None => true,
            };
            if better {
                best = Some(res);
            }
        }
    }
    if let Some(res) = &best {
        if let Ok(polished) = optimize(
            &space,
            &objective,
            &constraints,
            &vicious_config(VICIOUS_SEED + 100),
            Start::Fixed(res.best_theta.clone()),
        ) {
            if polished.best_report.objective_estimate > res.best_report.objective_estimate {
                best = Some(polished);
            }
        }
    }
    match best {
        Some(res) => {
            comparisons.push(ComparisonRecord::ge(
                "vicious",
                "annealed_revenue",
                res.best_report.objective_estimate,
                0.42,
            ));
            records.push(Record::Summary(summary_from_report(
                "vicious",
                &res.best_report,
                "revenue",
            )));
        }
        None => comparisons.push(ComparisonRecord::ge("vicious", "annealed_revenue", -1.0, 0.42)),
    }

    // The vicious second-price auction is not rational for low types; a
    // constant rebate must repair it without moving the equilibrium.
    let vickrey_theta = DesignPoint::new(vec![1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let repair =
        crate::evaluation::ir_repair(&space, &vickrey_theta, &eqres.strategy, |_| 0.0, 201)?;
    comparisons.push(ComparisonRecord::ge(
        "vicious",
        "vickrey_ir_shortfall",
        -repair.min_margin_before,
        1e-3,
    ));
    let repaired = space.build(&repair.adjusted)?;
    let post_margin = min_interim_margin(&repaired.game, &eqres.strategy, &|_: f64| 0.0, 401)?;
    comparisons.push(ComparisonRecord::ge(
        "vicious",
        "post_repair_margin",
        post_margin,
        -1e-9,
    ));

    Ok(ExperimentOutcome { name: "vicious".into(), comparisons, records })
}

/// Run one named experiment, or all of them.
pub fn run_experiments(
    which: &str,
    samples: Option<usize>,
) -> Result<Vec<ExperimentOutcome>, ReproduceError> {
    let outcome = match which {
        "table1" => vec![table1(samples)],
        "table2" => vec![table2(samples)],
        "table3" => vec![table3(samples)],
        "myerson_revenue" => vec![myerson_revenue(samples)],
        "myerson_welfare" => vec![myerson_welfare(samples)],
        "vicious" => vec![vicious(samples)?],
        "all" => vec![
            table1(samples),
            table2(samples),
            table3(samples),
            myerson_revenue(samples),
            myerson_welfare(samples),
            vicious(samples)?,
        ],
        other => return Err(ReproduceError::UnknownExperiment(other.to_string())),
    };
    Ok(outcome)
}
