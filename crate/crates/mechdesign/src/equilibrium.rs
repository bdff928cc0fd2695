//! Symmetric Bayes-Nash equilibria by iterated closed-form best response.
//!
//! Against a linear opponent strategy with uniform types, the expected
//! utility of bidding `a` is an exact quadratic in `a` on the interior bid
//! region (between the opponent's lowest and highest possible bids) and
//! affine on either tail. Best responses therefore come from quadratic
//! maximization, and equilibria from iterating the best-response map.

use serde::{Deserialize, Serialize};

use crate::game::{AffineBranch, LinearStrategy, WinnerTakeGame};

/// Opponent slopes with magnitude below this floor make the win
/// probability a step function; no closed form applies.
pub const SLOPE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SolveError {
    #[error("degenerate opponent: |slope| = {slope:e} is below the floor {floor:e}")]
    DegenerateOpponent { slope: f64, floor: f64 },
    #[error("degenerate game: payoffs do not depend on either bid, so best responses are unconstrained")]
    DegenerateGame,
    #[error("strategy domain [{strategy_low}, {strategy_high}] does not match the game's type interval [{game_low}, {game_high}]")]
    DomainMismatch {
        strategy_low: f64,
        strategy_high: f64,
        game_low: f64,
        game_high: f64,
    },
}

/// Exact quadratic `EU(t, a) = q2·a² + (q1_t·t + q1_0)·a + q0_t·t + q0_0`
/// valid while `a` lies inside the opponent's bid range.
#[derive(Debug, Clone, Copy)]
pub struct InteriorQuadratic {
    pub q2: f64,
    pub q1_t: f64,
    pub q1_0: f64,
    pub q0_t: f64,
    pub q0_0: f64,
    pub bid_lo: f64,
    pub bid_hi: f64,
}

impl InteriorQuadratic {
    pub fn eval(&self, t: f64, a: f64) -> f64 {
        self.q2 * a * a + (self.q1_t * t + self.q1_0) * a + self.q0_t * t + self.q0_0
    }

    /// Unconstrained maximizer of the quadratic in `a` for a fixed type.
    /// Only meaningful when `q2 < 0`.
    pub fn vertex(&self, t: f64) -> f64 {
        -(self.q1_t * t + self.q1_0) / (2.0 * self.q2)
    }

    /// The vertex as an affine function of the type: `(slope, intercept)`.
    pub fn vertex_line(&self) -> (f64, f64) {
        (-self.q1_t / (2.0 * self.q2), -self.q1_0 / (2.0 * self.q2))
    }
}

fn check_opponent(game: &WinnerTakeGame, opp: &LinearStrategy) -> Result<(), SolveError> {
    if !opp.matches_game(game) {
        return Err(SolveError::DomainMismatch {
            strategy_low: opp.type_low,
            strategy_high: opp.type_high,
            game_low: game.type_low,
            game_high: game.type_high,
        });
    }
    if opp.m.abs() < SLOPE_FLOOR {
        return Err(SolveError::DegenerateOpponent { slope: opp.m, floor: SLOPE_FLOOR });
    }
    if game.win.c_a == 0.0
        && game.win.c_ap == 0.0
        && game.lose.c_a == 0.0
        && game.lose.c_ap == 0.0
    {
        return Err(SolveError::DegenerateGame);
    }
    Ok(())
}

/// Expected payoff over the whole opponent type interval with a single
/// branch applying (the always-win / always-lose tails).
fn branch_expectation(
    branch: &AffineBranch,
    opp: &LinearStrategy,
    game: &WinnerTakeGame,
    t: f64,
    a: f64,
) -> f64 {
    let mid = 0.5 * (game.type_low + game.type_high);
    branch.eval(t, a, 0.0, 0.0) + (branch.c_tp + branch.c_ap * opp.m) * mid + branch.c_ap * opp.b
}

/// Derive the interior quadratic by expanding
/// `∫ win` over the opponent types that bid below `a` plus `∫ lose` over
/// the rest, with the crossing type `τ(a) = (a − b)/m` affine in `a`.
pub fn interior_quadratic(
    game: &WinnerTakeGame,
    opp: &LinearStrategy,
) -> Result<InteriorQuadratic, SolveError> {
    check_opponent(game, opp)?;
    let (a_low, a_high) = (game.type_low, game.type_high);
    let d = game.type_range();
    let (m, b) = (opp.m, opp.b);

    // With m > 0 the win branch applies below the crossing type; with
    // m < 0 the branches swap sides.
    let (p, n) = if m > 0.0 { (&game.win, &game.lose) } else { (&game.lose, &game.win) };

    let g = 1.0 / m;
    let e = -b / m;

    let dt = p.c_t - n.c_t;
    let da = p.c_a - n.c_a;
    let kk = (p.c_ap - n.c_ap) * b + (p.c_0 - n.c_0);
    let beta_p = p.c_tp + p.c_ap * m;
    let beta_n = n.c_tp + n.c_ap * m;
    let dbeta = beta_p - beta_n;

    let t_t = n.c_t * a_high - p.c_t * a_low;
    let t_a = n.c_a * a_high - p.c_a * a_low;
    let t_0 = (n.c_ap * a_high - p.c_ap * a_low) * b + (n.c_0 * a_high - p.c_0 * a_low)
        + beta_n * a_high * a_high / 2.0
        - beta_p * a_low * a_low / 2.0;

    let (lo, hi) = opp.bid_range();
    Ok(InteriorQuadratic {
        q2: (da * g + dbeta * g * g / 2.0) / d,
        q1_t: dt * g / d,
        q1_0: (da * e + kk * g + dbeta * g * e + t_a) / d,
        q0_t: (dt * e + t_t) / d,
        q0_0: (kk * e + dbeta * e * e / 2.0 + t_0) / d,
        bid_lo: lo,
        bid_hi: hi,
    })
}

/// Exact expectation over the opponent type of the payoff of bidding `a`
/// with type `t`, when the opponent bids `s'(t') = m·t' + b` and types are
/// uniform on the game's interval.
pub fn expected_utility(
    game: &WinnerTakeGame,
    opp: &LinearStrategy,
    t: f64,
    a: f64,
) -> Result<f64, SolveError> {
    let quad = interior_quadratic(game, opp)?;
    Ok(expected_utility_with(game, opp, &quad, t, a))
}

/// As `expected_utility`, reusing a precomputed interior quadratic.
pub fn expected_utility_with(
    game: &WinnerTakeGame,
    opp: &LinearStrategy,
    quad: &InteriorQuadratic,
    t: f64,
    a: f64,
) -> f64 {
    if a < quad.bid_lo {
        branch_expectation(&game.lose, opp, game, t, a)
    } else if a > quad.bid_hi {
        branch_expectation(&game.win, opp, game, t, a)
    } else {
        quad.eval(t, a)
    }
}

/// Outcome of a single best-response computation.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub strategy: LinearStrategy,
    /// True when the interior vertex was affine and in-region for the
    /// whole type interval, so the result is exact.
    pub exact_vertex: bool,
    /// True when the interior quadratic was not strictly concave.
    pub non_concave: bool,
    /// Largest deviation of the affine fit from the per-type maximizer
    /// (zero on the exact path).
    pub fit_error: f64,
}

const TYPE_GRID: usize = 33;
const REGION_EPS: f64 = 1e-9;

/// Best response to a linear opponent under uniform types.
///
/// When the interior quadratic is strictly concave and its vertex stays in
/// the interior bid region at both ends of the type interval, the vertex
/// line is returned exactly. Otherwise the per-type maximizer (interior
/// vertex clamped to the region, plus the suprema of the always-lose and
/// always-win tails over a window padded by one bid-range width) is
/// computed on a type grid and fitted by least squares.
pub fn best_response(
    game: &WinnerTakeGame,
    opp: &LinearStrategy,
) -> Result<BestResponse, SolveError> {
    let quad = interior_quadratic(game, opp)?;
    let concave = quad.q2 < 0.0;

    if concave {
        let (mv, bv) = quad.vertex_line();
        let va = mv * game.type_low + bv;
        let vb = mv * game.type_high + bv;
        let eps = REGION_EPS * (1.0 + (quad.bid_hi - quad.bid_lo).abs());
        let in_region =
            |x: f64| x >= quad.bid_lo - eps && x <= quad.bid_hi + eps;
        if in_region(va) && in_region(vb) {
            return Ok(BestResponse {
                strategy: LinearStrategy::new(mv, bv, game.type_low, game.type_high),
                exact_vertex: true,
                non_concave: false,
                fit_error: 0.0,
            });
        }
    }

    // Grid fallback: exact per-type maximum over the padded bid window,
    // then an affine least-squares fit.
    let pad = quad.bid_hi - quad.bid_lo;
    let mut ts = Vec::with_capacity(TYPE_GRID);
    let mut ys = Vec::with_capacity(TYPE_GRID);
    for i in 0..TYPE_GRID {
        let t = game.type_low + game.type_range() * i as f64 / (TYPE_GRID - 1) as f64;
        let mut cands = vec![
            quad.bid_lo - pad,
            quad.bid_lo,
            quad.bid_hi,
            quad.bid_hi + pad,
        ];
        if concave {
            cands.push(quad.vertex(t).clamp(quad.bid_lo, quad.bid_hi));
        }
        cands.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut best_a = cands[0];
        let mut best_v = expected_utility_with(game, opp, &quad, t, best_a);
        for &a in &cands[1..] {
            let v = expected_utility_with(game, opp, &quad, t, a);
            if v > best_v {
                best_v = v;
                best_a = a;
            }
        }
        ts.push(t);
        ys.push(best_a);
    }

    let (m_fit, b_fit) = least_squares_line(&ts, &ys);
    let fit_error = ts
        .iter()
        .zip(&ys)
        .map(|(&t, &y)| (m_fit * t + b_fit - y).abs())
        .fold(0.0f64, f64::max);

    Ok(BestResponse {
        strategy: LinearStrategy::new(m_fit, b_fit, game.type_low, game.type_high),
        exact_vertex: false,
        non_concave: !concave,
        fit_error,
    })
}

fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    let m = (n * sxy - sx * sy) / denom;
    let b = (sy - m * sx) / n;
    (m, b)
}

/// Exact probability mass of types where the two strategies differ by at
/// least `tol`. The difference of two affine bid functions is affine, so
/// the sub-tolerance set is an interval and the measure needs no sampling.
pub fn violation_measure(prev: &LinearStrategy, curr: &LinearStrategy, tol: f64) -> f64 {
    let dm = curr.m - prev.m;
    let db = curr.b - prev.b;
    let (lo, hi) = (prev.type_low, prev.type_high);
    let d = hi - lo;
    if dm.abs() == 0.0 {
        return if db.abs() < tol { 0.0 } else { 1.0 };
    }
    let x1 = (-tol - db) / dm;
    let x2 = (tol - db) / dm;
    let (ok_lo, ok_hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    let ok_len = (ok_hi.min(hi) - ok_lo.max(lo)).max(0.0);
    1.0 - ok_len / d
}

/// The (1−p)-strong convergence check: true iff `|curr(t) − prev(t)| < tol`
/// holds on a type set of probability at least `1 − p`.
pub fn check_convergence(
    prev: &LinearStrategy,
    curr: &LinearStrategy,
    tol: f64,
    p: f64,
) -> Result<bool, SolveError> {
    if !prev.same_domain(curr) {
        return Err(SolveError::DomainMismatch {
            strategy_low: curr.type_low,
            strategy_high: curr.type_high,
            game_low: prev.type_low,
            game_high: prev.type_high,
        });
    }
    Ok(violation_measure(prev, curr, tol) <= p)
}

/// Solver parameters for iterated best response.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Convergence tolerance δ on the strategy change per iteration.
    pub tol: f64,
    /// Measure slack p of the (1−p)-strong convergence check.
    pub conv_p: f64,
    /// Confidence parameter reserved for sampled convergence checks with
    /// black-box type distributions; the exact uniform check ignores it.
    pub conv_alpha: f64,
    /// Weight on the new best response when forming the next iterate;
    /// 1.0 is the undamped update.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 200, tol: 1e-3, conv_p: 0.06, conv_alpha: 0.05, damping: 1.0 }
    }
}

impl SolverConfig {
    fn validate(&self) {
        assert!(self.max_iters >= 1, "max_iters must be at least 1");
        assert!(self.tol > 0.0, "tol must be positive");
        assert!(self.conv_p > 0.0 && self.conv_p < 1.0, "conv_p must be in (0,1)");
        assert!(self.conv_alpha > 0.0 && self.conv_alpha < 1.0, "conv_alpha must be in (0,1)");
        assert!(self.damping > 0.0 && self.damping <= 1.0, "damping must be in (0,1]");
    }
}

/// Result of an equilibrium solve.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub strategy: LinearStrategy,
    pub iterations: usize,
    pub converged: bool,
    /// Max strategy change over the final iteration (attained at an
    /// endpoint of the type interval).
    pub residual: f64,
    pub history: Vec<LinearStrategy>,
}

fn endpoint_residual(prev: &LinearStrategy, curr: &LinearStrategy) -> f64 {
    let d = |t: f64| ((curr.m - prev.m) * t + (curr.b - prev.b)).abs();
    d(prev.type_low).max(d(prev.type_high))
}

/// A converged strategy must be a genuine interior stationary point of
/// its own expected utility: strictly concave in the bid, with the
/// unconstrained maximizer inside the opponent-bid region up to a slack
/// proportional to the region. Near-degenerate games can otherwise stall
/// the clamped iteration at flat strategies that satisfy the step-size
/// check without being equilibria.
fn is_interior_fixed_point(game: &WinnerTakeGame, s: &LinearStrategy) -> bool {
    match interior_quadratic(game, s) {
        Ok(quad) if quad.q2 < 0.0 => {
            let slack = 0.05 * (1.0 + (quad.bid_hi - quad.bid_lo).abs());
            let inside = |x: f64| x >= quad.bid_lo - slack && x <= quad.bid_hi + slack;
            let (mv, bv) = quad.vertex_line();
            inside(mv * game.type_low + bv) && inside(mv * game.type_high + bv)
        }
        _ => false,
    }
}

/// Iterate symmetric best response from `init` until the (1−p)-strong
/// convergence check passes or `max_iters` is exhausted. The history
/// records every iterate, including the initial strategy.
pub fn solve_equilibrium(
    game: &WinnerTakeGame,
    init: LinearStrategy,
    config: &SolverConfig,
) -> Result<EquilibriumResult, SolveError> {
    config.validate();
    if !init.matches_game(game) {
        return Err(SolveError::DomainMismatch {
            strategy_low: init.type_low,
            strategy_high: init.type_high,
            game_low: game.type_low,
            game_high: game.type_high,
        });
    }

    let mut history = vec![init];
    let mut prev = init;
    let mut residual = f64::INFINITY;
    for iter in 1..=config.max_iters {
        let br = best_response(game, &prev)?;
        let w = config.damping;
        let next = LinearStrategy::new(
            w * br.strategy.m + (1.0 - w) * prev.m,
            w * br.strategy.b + (1.0 - w) * prev.b,
            game.type_low,
            game.type_high,
        );
        residual = endpoint_residual(&prev, &next);
        let converged = check_convergence(&prev, &next, config.tol, config.conv_p)?;
        history.push(next);
        if converged {
            let valid = is_interior_fixed_point(game, &next);
            return Ok(EquilibriumResult {
                strategy: next,
                iterations: iter,
                converged: valid,
                residual,
                history,
            });
        }
        prev = next;
    }
    Ok(EquilibriumResult {
        strategy: prev,
        iterations: config.max_iters,
        converged: false,
        residual,
        history,
    })
}

/// Bayes-Nash incentive compatibility probe: true iff the best response to
/// the truthful strategy is itself within `tol` of truthful, coefficientwise.
pub fn is_bnic(game: &WinnerTakeGame, tol: f64) -> Result<bool, SolveError> {
    let br = best_response(game, &LinearStrategy::truthful(game))?;
    Ok((br.strategy.m - 1.0).abs() <= tol && br.strategy.b.abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{sga_equilibrium_oracle, sga_game, MyersonParams, SgaParams};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sga(h: f64, k: f64) -> WinnerTakeGame {
        sga_game(&SgaParams { h, k }).game
    }

    /// Independent oracle: split the opponent-type integral at the crossing
    /// type and integrate each affine piece exactly by the trapezoid rule.
    fn exact_integral_eu(game: &WinnerTakeGame, opp: &LinearStrategy, t: f64, a: f64) -> f64 {
        let (lo, hi) = (game.type_low, game.type_high);
        let tau = ((a - opp.b) / opp.m).clamp(lo, hi);
        let piece = |branch: &AffineBranch, from: f64, to: f64| {
            let f = |u: f64| branch.eval(t, a, u, opp.bid(u));
            (to - from) * 0.5 * (f(from) + f(to))
        };
        let total = if opp.m > 0.0 {
            piece(&game.win, lo, tau) + piece(&game.lose, tau, hi)
        } else {
            piece(&game.lose, lo, tau) + piece(&game.win, tau, hi)
        };
        total / (hi - lo)
    }

    #[test]
    fn closed_form_matches_exact_integration_on_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..200 {
            let game = WinnerTakeGame::new(
                AffineBranch::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
                AffineBranch::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ),
                0.0,
                1.0,
            );
            let m = if rng.gen_bool(0.5) {
                rng.gen_range(0.1..2.0)
            } else {
                rng.gen_range(-2.0..-0.1)
            };
            let opp = LinearStrategy::new(m, rng.gen_range(-1.0..1.0), 0.0, 1.0);
            let t = rng.gen_range(0.0..1.0);
            let (blo, bhi) = opp.bid_range();
            let a = rng.gen_range(blo - 0.5..bhi + 0.5);
            let got = expected_utility(&game, &opp, t, a).unwrap();
            let want = exact_integral_eu(&game, &opp, t, a);
            assert_relative_eq!(got, want, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn expected_utility_meets_spec_hand_values() {
        let game = sga(0.5, 0.0);
        let opp = LinearStrategy::new(2.0 / 3.0, 0.0, 0.0, 1.0);
        // Top bid always wins: 1 − 0.5·(2/3).
        assert_relative_eq!(
            expected_utility(&game, &opp, 1.0, 2.0 / 3.0).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        // Zero bid always loses and collects half the opponent's mean bid.
        for &t in &[0.0, 0.25, 0.9] {
            assert_relative_eq!(
                expected_utility(&game, &opp, t, 0.0).unwrap(),
                1.0 / 6.0,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn monte_carlo_cross_check_within_three_standard_errors() {
        let game = sga(0.5, 0.0);
        let opp = LinearStrategy::new(0.55, 0.1, 0.0, 1.0);
        let (t, a) = (0.7, 0.35);
        let closed = expected_utility(&game, &opp, t, a).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let tp: f64 = rng.gen_range(0.0..=1.0);
            let v = game.payoff(t, a, tp, opp.bid(tp));
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean).max(0.0);
        let se = (var / n as f64).sqrt();
        assert!(
            (closed - mean).abs() <= 3.0 * se,
            "closed {closed} vs mc {mean} (se {se})"
        );
    }

    #[test]
    fn interior_is_a_true_quadratic() {
        // Three interior points determine the quadratic; it must then
        // reproduce the value at a fourth point, and second differences on
        // evenly spaced bids must be constant.
        let game = sga(0.4, 0.3);
        let opp = LinearStrategy::new(0.8, 0.05, 0.0, 1.0);
        let quad = interior_quadratic(&game, &opp).unwrap();
        let t = 0.6;
        let (lo, hi) = (quad.bid_lo, quad.bid_hi);
        let xs = [lo, 0.5 * (lo + hi), hi];
        let f = |a: f64| expected_utility(&game, &opp, t, a).unwrap();
        // Lagrange interpolation through three points.
        let interp = |a: f64| {
            let mut acc = 0.0;
            for i in 0..3 {
                let mut w = f(xs[i]);
                for j in 0..3 {
                    if i != j {
                        w *= (a - xs[j]) / (xs[i] - xs[j]);
                    }
                }
                acc += w;
            }
            acc
        };
        let probe = lo + 0.37 * (hi - lo);
        assert_relative_eq!(interp(probe), f(probe), epsilon = 1e-12);

        let h = (hi - lo) / 7.0;
        let mut second = Vec::new();
        for i in 0..5 {
            let a0 = lo + i as f64 * h;
            second.push(f(a0) - 2.0 * f(a0 + h) + f(a0 + 2.0 * h));
        }
        for w in second.windows(2) {
            assert_relative_eq!(w[0], w[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn continuity_at_the_region_boundaries() {
        let game = sga(0.6, 0.2);
        let opp = LinearStrategy::new(-0.7, 0.9, 0.0, 1.0);
        let quad = interior_quadratic(&game, &opp).unwrap();
        for &t in &[0.0, 0.5, 1.0] {
            let inner_lo = expected_utility(&game, &opp, t, quad.bid_lo).unwrap();
            let tail_lo = expected_utility(&game, &opp, t, quad.bid_lo - 1e-12).unwrap();
            assert_relative_eq!(inner_lo, tail_lo, epsilon = 1e-9);
            let inner_hi = expected_utility(&game, &opp, t, quad.bid_hi).unwrap();
            let tail_hi = expected_utility(&game, &opp, t, quad.bid_hi + 1e-12).unwrap();
            assert_relative_eq!(inner_hi, tail_hi, epsilon = 1e-9);
        }
    }

    #[test]
    fn best_response_fixed_points_from_theorems() {
        // SGA(1/2, 0): (2/3)·t reproduces itself.
        let br = best_response(&sga(0.5, 0.0), &LinearStrategy::new(2.0 / 3.0, 0.0, 0.0, 1.0))
            .unwrap();
        assert!(br.exact_vertex);
        assert_relative_eq!(br.strategy.m, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(br.strategy.b, 0.0, epsilon = 1e-12);

        // SGA(1/3, 0): truthful is a fixed point.
        let br = best_response(&sga(1.0 / 3.0, 0.0), &LinearStrategy::new(1.0, 0.0, 0.0, 1.0))
            .unwrap();
        assert_relative_eq!(br.strategy.m, 1.0, epsilon = 1e-12);
        assert_relative_eq!(br.strategy.b, 0.0, epsilon = 1e-12);

        // SGA(0, 1): t/3 + 1/6 reproduces itself.
        let br = best_response(
            &sga(0.0, 1.0),
            &LinearStrategy::new(1.0 / 3.0, 1.0 / 6.0, 0.0, 1.0),
        )
        .unwrap();
        assert_relative_eq!(br.strategy.m, 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(br.strategy.b, 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn best_response_matches_dense_grid_search() {
        let game = sga(0.5, 0.2);
        let opp = LinearStrategy::new(0.9, 0.1, 0.0, 1.0);
        let br = best_response(&game, &opp).unwrap();
        let (blo, bhi) = opp.bid_range();
        let pad = bhi - blo;
        for i in 0..20 {
            let t = i as f64 / 19.0;
            let mut best = f64::NEG_INFINITY;
            let mut a = blo - pad;
            while a <= bhi + pad {
                best = best.max(expected_utility(&game, &opp, t, a).unwrap());
                a += 1e-4;
            }
            let achieved = expected_utility(&game, &opp, t, br.strategy.bid(t)).unwrap();
            assert!(achieved >= best - 1e-4, "t={t}: {achieved} vs {best}");
        }
    }

    #[test]
    fn degenerate_opponent_is_rejected() {
        let game = sga(0.5, 0.0);
        let opp = LinearStrategy::new(1e-9, 0.3, 0.0, 1.0);
        assert!(matches!(
            expected_utility(&game, &opp, 0.5, 0.3),
            Err(SolveError::DegenerateOpponent { .. })
        ));
        assert!(best_response(&game, &opp).is_err());
    }

    #[test]
    fn domain_mismatch_is_rejected() {
        let game = sga(0.5, 0.0);
        let opp = LinearStrategy::new(1.0, 0.0, 0.0, 2.0);
        assert!(matches!(
            best_response(&game, &opp),
            Err(SolveError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn negative_slope_opponents_are_supported() {
        // Allocation to the low bidder with a first-price-style payment
        // has the strictly decreasing equilibrium s(t) = -t - 1. Iteration
        // needs a decreasing initial strategy: against the truthful one,
        // losing dominates at every bid and the best response is flat.
        let mech = crate::domains::myerson_game(&MyersonParams {
            q: 0.0,
            k1: 0.5,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        let res = solve_equilibrium(
            &mech.game,
            LinearStrategy::new(-1.0, 0.0, 0.0, 1.0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert_relative_eq!(res.strategy.m, -1.0, epsilon = 1e-3);
        assert_relative_eq!(res.strategy.b, -1.0, epsilon = 1e-3);

        // At the fixed point the vertex is exact and the win-direction
        // flip for negative slopes is exercised directly.
        let eq = LinearStrategy::new(-1.0, -1.0, 0.0, 1.0);
        let br = best_response(&mech.game, &eq).unwrap();
        assert!(br.exact_vertex);
        assert_relative_eq!(br.strategy.m, -1.0, epsilon = 1e-12);
        assert_relative_eq!(br.strategy.b, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_recovers_paper_equilibria() {
        let res = solve_equilibrium(
            &sga(0.5, 0.0),
            LinearStrategy::new(1.0, 0.0, 0.0, 1.0),
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.strategy.m - 2.0 / 3.0).abs() < 1e-3);
        assert!(res.strategy.b.abs() < 1e-3);
        assert_eq!(res.history.len(), res.iterations + 1);
    }

    #[test]
    fn first_price_equilibrium_matches_iterated_grid_oracle() {
        // Classic first-price result s(t) = t/2, recovered both by the
        // closed-form solver and by an iterated grid-search best response.
        let mech = crate::domains::myerson_game(&MyersonParams {
            q: 1.0,
            k1: 1.0,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        let game = &mech.game;
        let res =
            solve_equilibrium(game, LinearStrategy::truthful(game), &SolverConfig::default())
                .unwrap();
        assert!(res.converged);
        assert_relative_eq!(res.strategy.m, 0.5, epsilon = 1e-3);
        assert_relative_eq!(res.strategy.b, 0.0, epsilon = 1e-3);

        // Grid oracle: pick the best bid on a fine grid for 9 types, fit a
        // line, iterate.
        let mut strat = LinearStrategy::truthful(game);
        for _ in 0..60 {
            let (blo, bhi) = strat.bid_range();
            let pad = (bhi - blo).max(0.1);
            let mut ts = Vec::new();
            let mut ys = Vec::new();
            for i in 0..9 {
                let t = i as f64 / 8.0;
                let mut best = f64::NEG_INFINITY;
                let mut best_a = blo - pad;
                let steps = 4000;
                for j in 0..=steps {
                    let a = blo - pad + (bhi - blo + 2.0 * pad) * j as f64 / steps as f64;
                    let v = expected_utility(game, &strat, t, a).unwrap();
                    // >= so flat stretches resolve to their upper edge
                    if v >= best {
                        best = v;
                        best_a = a;
                    }
                }
                ts.push(t);
                ys.push(best_a);
            }
            let (m, b) = least_squares_line(&ts, &ys);
            strat = LinearStrategy::new(m, b, 0.0, 1.0);
        }
        assert!((strat.m - 0.5).abs() < 5e-3, "oracle slope {}", strat.m);
        assert!(strat.b.abs() < 5e-3, "oracle intercept {}", strat.b);
    }

    #[test]
    fn damped_iteration_still_converges() {
        let cfg = SolverConfig { damping: 0.5, ..SolverConfig::default() };
        let res = solve_equilibrium(&sga(0.5, 0.0), LinearStrategy::new(1.0, 0.0, 0.0, 1.0), &cfg)
            .unwrap();
        assert!(res.converged);
        assert!((res.strategy.m - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn fixed_point_property_holds_across_the_sga_grid() {
        for i in 0..5 {
            for j in 0..5 {
                let h = i as f64 / 4.0;
                let k = j as f64 / 4.0;
                if h + k < 0.05 {
                    continue;
                }
                let oracle = sga_equilibrium_oracle(h, k, 0.0, 1.0).unwrap();
                let br = best_response(&sga(h, k), &oracle).unwrap();
                assert!(
                    (br.strategy.m - oracle.m).abs() < 1e-3
                        && (br.strategy.b - oracle.b).abs() < 1e-3,
                    "SGA({h},{k})"
                );
            }
        }
    }

    #[test]
    fn convergence_check_examples() {
        let id = LinearStrategy::new(1.0, 0.0, 0.0, 1.0);
        assert!(check_convergence(&id, &id, 1e-9, 0.05).unwrap());

        let shifted = LinearStrategy::new(1.0, 0.5, 0.0, 1.0);
        assert!(!check_convergence(&id, &shifted, 0.1, 0.05).unwrap());

        // |0.05·t| >= 0.04 only for t > 0.8: violation measure 0.2.
        let steep = LinearStrategy::new(1.05, 0.0, 0.0, 1.0);
        assert!(check_convergence(&id, &steep, 0.04, 0.25).unwrap());
        assert!(!check_convergence(&id, &steep, 0.04, 0.15).unwrap());
        assert_relative_eq!(violation_measure(&id, &steep, 0.04), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn bnic_probe_matches_the_uniqueness_theorem() {
        assert!(is_bnic(&sga(1.0 / 3.0, 0.0), 1e-2).unwrap());
        assert!(!is_bnic(&sga(0.5, 0.0), 1e-2).unwrap());
        assert!(!is_bnic(&sga(0.0, 1.0), 1e-2).unwrap());
        assert!(!is_bnic(&sga(0.4, 0.1), 1e-2).unwrap());

        // Revenue-optimal truthful family member.
        let mech = crate::domains::myerson_game(&MyersonParams {
            q: 1.0,
            k1: 0.5,
            k2: 0.0,
            big_k1: 0.0,
            k3: 0.0,
            k4: 0.0,
            big_k2: 0.0,
        });
        assert!(is_bnic(&mech.game, 1e-2).unwrap());
    }

    #[test]
    fn constant_payment_shift_leaves_best_response_unchanged() {
        let mech = crate::domains::myerson_game(&MyersonParams {
            q: 1.0,
            k1: 0.6,
            k2: 0.2,
            big_k1: 0.4,
            k3: 0.1,
            k4: 0.0,
            big_k2: 0.2,
        });
        let opp = LinearStrategy::new(0.8, -0.1, 0.0, 1.0);
        let before = best_response(&mech.game, &opp).unwrap();
        let mut shifted = mech.game;
        shifted.win.c_0 += 0.37;
        shifted.lose.c_0 += 0.37;
        let after = best_response(&shifted, &opp).unwrap();
        assert_relative_eq!(before.strategy.m, after.strategy.m, epsilon = 1e-12);
        assert_relative_eq!(before.strategy.b, after.strategy.b, epsilon = 1e-12);
    }
}
