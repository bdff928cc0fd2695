//! The three mechanism families searched in this crate, their revenue
//! rules, and closed-form oracles used for testing and reproduction.

use serde::{Deserialize, Serialize};

use crate::annealer::{DesignPoint, DesignSpace};
use crate::game::{AffineBranch, LinearStrategy, WinnerTakeGame};

#[derive(Debug, Clone, thiserror::Error)]
pub enum DomainError {
    #[error("shared-good auction requires h + k > 0 (got h = {h}, k = {k})")]
    DegenerateSga { h: f64, k: f64 },
    #[error("design point has {got} coordinates, the domain expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("unknown domain '{0}' (registered: sga, myerson, vicious)")]
    UnknownDomain(String),
}

/// Designer revenue as a function of the realized winning and losing bids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RevenueRule {
    /// No payment reaches the designer (transfers stay between players).
    None,
    /// `winner_bid·a_w + loser_bid·a_l + constant` per profile.
    BidLinear { winner_bid: f64, loser_bid: f64, constant: f64 },
}

impl RevenueRule {
    pub fn revenue(&self, winning_bid: f64, losing_bid: f64) -> f64 {
        match *self {
            RevenueRule::None => 0.0,
            RevenueRule::BidLinear { winner_bid, loser_bid, constant } => {
                winner_bid * winning_bid + loser_bid * losing_bid + constant
            }
        }
    }
}

/// Opportunity cost of participating, per type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OpportunityCost {
    Zero,
    Constant(f64),
}

impl OpportunityCost {
    pub fn eval(&self, _t: f64) -> f64 {
        match *self {
            OpportunityCost::Zero => 0.0,
            OpportunityCost::Constant(c) => c,
        }
    }
}

/// A candidate mechanism: the induced game plus the designer-facing pieces
/// (revenue rule, allocation parameter, opportunity cost of participation).
#[derive(Debug, Clone)]
pub struct Mechanism {
    pub game: WinnerTakeGame,
    pub revenue: RevenueRule,
    /// Probability that the higher bidder receives the good.
    pub allocation_q: Option<f64>,
    pub opportunity_cost: OpportunityCost,
}

/// Shared-good auction parameters: the winner pays `h·(own bid) +
/// k·(other bid)` to the loser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgaParams {
    pub h: f64,
    pub k: f64,
}

/// Winner-pay / loser-pay auction family with allocation parameter `q` and
/// transfers linear in bids: the winner's utility is
/// `q·t − k1·a − k2·a' − K1`, the loser's `(1−q)·t − k3·a − k4·a' − K2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MyersonParams {
    pub q: f64,
    pub k1: f64,
    pub k2: f64,
    pub big_k1: f64,
    pub k3: f64,
    pub k4: f64,
    pub big_k2: f64,
}

/// The same seven parameters plus a spite level `l in [0, 1)`: each agent
/// derives disutility from the opponent's utility. `l = 0` recovers the
/// plain family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViciousParams {
    pub base: MyersonParams,
    pub spite: f64,
}

/// Budget-balanced shared-good auction on U[0,1] types.
pub fn sga_game(p: &SgaParams) -> Mechanism {
    let win = AffineBranch::new(1.0, -p.h, 0.0, -p.k, 0.0);
    // The loser receives f(a', a) = h·a' + k·a, a being its own bid.
    let lose = AffineBranch::new(0.0, p.k, 0.0, p.h, 0.0);
    Mechanism {
        game: WinnerTakeGame::new(win, lose, 0.0, 1.0),
        revenue: RevenueRule::None,
        allocation_q: Some(1.0),
        opportunity_cost: OpportunityCost::Zero,
    }
}

/// Parametric auction with designer revenue: the winner pays
/// `k1·a_w + k2·a_l + K1`, the loser pays `k3·a_l + k4·a_w + K2`.
pub fn myerson_game(p: &MyersonParams) -> Mechanism {
    let win = AffineBranch::new(p.q, -p.k1, 0.0, -p.k2, -p.big_k1);
    let lose = AffineBranch::new(1.0 - p.q, -p.k3, 0.0, -p.k4, -p.big_k2);
    Mechanism {
        game: WinnerTakeGame::new(win, lose, 0.0, 1.0),
        revenue: RevenueRule::BidLinear {
            winner_bid: p.k1 + p.k4,
            loser_bid: p.k2 + p.k3,
            constant: p.big_k1 + p.big_k2,
        },
        allocation_q: Some(p.q),
        opportunity_cost: OpportunityCost::Zero,
    }
}

/// Spiteful variant: payments to the designer are identical to the plain
/// family's, but utilities are distorted by the spite level.
pub fn vicious_game(p: &ViciousParams) -> Mechanism {
    let b = &p.base;
    let (q, l) = (b.q, p.spite);
    let win_scale = q * (1.0 - l) + (1.0 - q);
    let lose_scale = (1.0 - q) * (1.0 - l) + q;
    let win = AffineBranch::new(
        q * (1.0 - l),
        -(b.k1 * win_scale - (1.0 - q) * l),
        -(1.0 - q) * l,
        -b.k2 * win_scale,
        -b.big_k1,
    );
    let lose = AffineBranch::new(
        (1.0 - q) * (1.0 - l),
        -(b.k3 * lose_scale - q * l),
        -q * l,
        -b.k4 * lose_scale,
        -b.big_k2,
    );
    Mechanism {
        game: WinnerTakeGame::new(win, lose, 0.0, 1.0),
        revenue: RevenueRule::BidLinear {
            winner_bid: b.k1 + b.k4,
            loser_bid: b.k2 + b.k3,
            constant: b.big_k1 + b.big_k2,
        },
        allocation_q: Some(q),
        opportunity_cost: OpportunityCost::Zero,
    }
}

/// Closed-form symmetric equilibrium of the shared-good auction on
/// U[type_low, type_high] types:
///
/// ```text
///   s(t) = t / (3(h+k)) + (h·A + k·B) / (6(h+k)²)
/// ```
pub fn sga_equilibrium_oracle(
    h: f64,
    k: f64,
    type_low: f64,
    type_high: f64,
) -> Result<LinearStrategy, DomainError> {
    if h + k <= 0.0 {
        return Err(DomainError::DegenerateSga { h, k });
    }
    let s = h + k;
    Ok(LinearStrategy::new(
        1.0 / (3.0 * s),
        (h * type_low + k * type_high) / (6.0 * s * s),
        type_low,
        type_high,
    ))
}

/// Closed-form objective values at the shared-good auction equilibrium:
/// fairness gap `(2h+k)/(9(h+k))` and winner utility `4/9 − k/(18(h+k))`.
pub fn sga_objective_oracles(h: f64, k: f64) -> Result<(f64, f64), DomainError> {
    if h + k <= 0.0 {
        return Err(DomainError::DegenerateSga { h, k });
    }
    let s = h + k;
    Ok(((2.0 * h + k) / (9.0 * s), 4.0 / 9.0 - k / (18.0 * s)))
}

fn point_as_sga(theta: &DesignPoint) -> Result<SgaParams, DomainError> {
    let v = theta.values();
    if v.len() != 2 {
        return Err(DomainError::DimensionMismatch { got: v.len(), expected: 2 });
    }
    Ok(SgaParams { h: v[0], k: v[1] })
}

fn point_as_myerson(theta: &DesignPoint) -> Result<MyersonParams, DomainError> {
    let v = theta.values();
    if v.len() != 7 {
        return Err(DomainError::DimensionMismatch { got: v.len(), expected: 7 });
    }
    Ok(MyersonParams {
        q: v[0],
        k1: v[1],
        k2: v[2],
        big_k1: v[3],
        k3: v[4],
        k4: v[5],
        big_k2: v[6],
    })
}

/// `[0,1]²` box over (h, k).
pub fn sga_space() -> DesignSpace {
    DesignSpace::new(
        &["h", "k"],
        vec![0.0; 2],
        vec![1.0; 2],
        |theta| Ok(sga_game(&point_as_sga(theta)?)),
    )
}

const MYERSON_NAMES: [&str; 7] = ["q", "k1", "k2", "K1", "k3", "k4", "K2"];

/// `[0,1]⁷` box over (q, k1, k2, K1, k3, k4, K2).
pub fn myerson_space() -> DesignSpace {
    DesignSpace::new(&MYERSON_NAMES, vec![0.0; 7], vec![1.0; 7], |theta| {
        Ok(myerson_game(&point_as_myerson(theta)?))
    })
    .with_constant_payment_params(&["K1", "K2"])
}

/// The plain seven-parameter box with the spite level fixed.
pub fn vicious_space(spite: f64) -> DesignSpace {
    DesignSpace::new(&MYERSON_NAMES, vec![0.0; 7], vec![1.0; 7], move |theta| {
        Ok(vicious_game(&ViciousParams { base: point_as_myerson(theta)?, spite }))
    })
    .with_constant_payment_params(&["K1", "K2"])
}

/// Look up a registered domain by name. `spite` only affects "vicious".
pub fn design_space(name: &str, spite: f64) -> Result<DesignSpace, DomainError> {
    match name {
        "sga" => Ok(sga_space()),
        "myerson" => Ok(myerson_space()),
        "vicious" => Ok(vicious_space(spite)),
        other => Err(DomainError::UnknownDomain(other.to_string())),
    }
}

/// Spite level used throughout the vicious-auction experiments.
pub const VICIOUS_SPITE: f64 = 2.0 / 7.0;

/// The vicious second-price auction: q = 1, k2 = 1, all other parameters 0.
pub fn vicious_vickrey(spite: f64) -> ViciousParams {
    ViciousParams {
        base: MyersonParams {
            q: 1.0,
            k1: 0.0,
            k2: 1.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        },
        spite,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{is_bnic, solve_equilibrium, SolverConfig};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sga_win_payoff_footnote_value() {
        let m = sga_game(&SgaParams { h: 0.5, k: 0.0 });
        assert_relative_eq!(m.game.payoff(1.0, 0.6, 0.4, 0.1), 0.7);
    }

    #[test]
    fn sga_is_budget_balanced_with_zero_revenue() {
        let m = sga_game(&SgaParams { h: 0.3, k: 0.6 });
        assert_eq!(m.revenue.revenue(0.8, 0.2), 0.0);
    }

    #[test]
    fn first_and_second_price_coefficients() {
        let fp = myerson_game(&MyersonParams {
            q: 1.0,
            k1: 1.0,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        // Winner utility t − a, loser 0.
        assert_relative_eq!(fp.game.payoff(0.9, 0.5, 0.2, 0.1), 0.4);
        assert_relative_eq!(fp.game.payoff(0.2, 0.1, 0.9, 0.5), 0.0);

        let sp = myerson_game(&MyersonParams {
            q: 1.0,
            k1: 0.0,
            k2: 1.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        // Winner utility t − a', loser 0; the design is truthful.
        assert_relative_eq!(sp.game.payoff(0.9, 0.5, 0.2, 0.1), 0.8);
        assert!(is_bnic(&sp.game, 1e-2).unwrap());
    }

    #[test]
    fn vicious_at_zero_spite_equals_the_plain_family() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let base = MyersonParams {
                q: rng.gen_range(0.0..=1.0),
                k1: rng.gen_range(0.0..=1.0),
                k2: rng.gen_range(0.0..=1.0),
                big_k1: rng.gen_range(0.0..=1.0),
                k3: rng.gen_range(0.0..=1.0),
                k4: rng.gen_range(0.0..=1.0),
                big_k2: rng.gen_range(0.0..=1.0),
            };
            let plain = myerson_game(&base);
            let vic = vicious_game(&ViciousParams { base, spite: 0.0 });
            assert_eq!(plain.game.win, vic.game.win);
            assert_eq!(plain.game.lose, vic.game.lose);
            assert_eq!(plain.revenue, vic.revenue);
        }
    }

    #[test]
    fn vicious_coefficients_are_continuous_in_the_spite_level() {
        let base = MyersonParams {
            q: 0.7,
            k1: 0.4,
            k2: 0.9,
            big_k1: 0.2,
            k3: 0.1,
            k4: 0.5,
            big_k2: 0.8,
        };
        let at_zero = vicious_game(&ViciousParams { base, spite: 0.0 });
        let near_zero = vicious_game(&ViciousParams { base, spite: 1e-9 });
        let diff = |x: &AffineBranch, y: &AffineBranch| {
            (x.c_t - y.c_t)
                .abs()
                .max((x.c_a - y.c_a).abs())
                .max((x.c_tp - y.c_tp).abs())
                .max((x.c_ap - y.c_ap).abs())
                .max((x.c_0 - y.c_0).abs())
        };
        assert!(diff(&at_zero.game.win, &near_zero.game.win) <= 1e-8);
        assert!(diff(&at_zero.game.lose, &near_zero.game.lose) <= 1e-8);
    }

    #[test]
    fn vicious_vickrey_equilibrium_from_the_literature() {
        let mech = vicious_game(&vicious_vickrey(VICIOUS_SPITE));
        let res = solve_equilibrium(
            &mech.game,
            LinearStrategy::truthful(&mech.game),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_relative_eq!(res.strategy.m, 7.0 / 9.0, epsilon = 1e-3);
        assert_relative_eq!(res.strategy.b, 2.0 / 9.0, epsilon = 1e-3);
    }

    #[test]
    fn equilibrium_oracle_substitutions() {
        let s = sga_equilibrium_oracle(0.5, 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.m, 2.0 / 3.0);
        assert_relative_eq!(s.b, 0.0);

        let s = sga_equilibrium_oracle(1.0 / 3.0, 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.m, 1.0);
        assert_relative_eq!(s.b, 0.0);

        let s = sga_equilibrium_oracle(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(s.m, 1.0 / 3.0);
        assert_relative_eq!(s.b, 1.0 / 6.0);

        assert!(sga_equilibrium_oracle(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn objective_oracle_substitutions() {
        let (fair, wu) = sga_objective_oracles(0.5, 0.0).unwrap();
        assert_relative_eq!(fair, 2.0 / 9.0);
        assert_relative_eq!(wu, 4.0 / 9.0);

        let (fair, _) = sga_objective_oracles(0.0, 1.0).unwrap();
        assert_relative_eq!(fair, 1.0 / 9.0);

        let (_, wu) = sga_objective_oracles(0.91, 0.03).unwrap();
        assert!((wu - 0.443).abs() < 1e-3, "winner utility {wu}");
    }

    #[test]
    fn registry_knows_the_three_domains() {
        for name in ["sga", "myerson", "vicious"] {
            assert!(design_space(name, VICIOUS_SPITE).is_ok());
        }
        assert!(design_space("bazaar", 0.0).is_err());
        assert_eq!(design_space("sga", 0.0).unwrap().dim(), 2);
        assert_eq!(design_space("myerson", 0.0).unwrap().dim(), 7);
    }
}
