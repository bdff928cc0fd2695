//! Payoff representation shared by every auction family in this crate.
//!
//! A game is two affine payoff branches (win / lose) over a shared uniform
//! type interval. The tie payoff is never stored: it is the average of the
//! two branches, i.e. the winner is chosen by a coin flip.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A payoff that is affine in own type `t`, own bid `a`, opponent type `t'`
/// and opponent bid `a'`:
///
/// ```text
///   u = c_t·t + c_a·a + c_tp·t' + c_ap·a' + c_0
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineBranch {
    pub c_t: f64,
    pub c_a: f64,
    pub c_tp: f64,
    pub c_ap: f64,
    pub c_0: f64,
}

impl AffineBranch {
    pub fn new(c_t: f64, c_a: f64, c_tp: f64, c_ap: f64, c_0: f64) -> Self {
        let branch = Self { c_t, c_a, c_tp, c_ap, c_0 };
        debug_assert!(branch.is_finite(), "branch coefficients must be finite");
        branch
    }

    /// Zero payoff regardless of types and bids.
    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        [self.c_t, self.c_a, self.c_tp, self.c_ap, self.c_0]
            .iter()
            .all(|c| c.is_finite())
    }

    /// Evaluate the branch at a realized profile.
    pub fn eval(&self, t: f64, a: f64, tp: f64, ap: f64) -> f64 {
        self.c_t * t + self.c_a * a + self.c_tp * tp + self.c_ap * ap + self.c_0
    }
}

/// Two-branch winner-take game: the higher bid wins, the lower bid loses,
/// and an exact tie pays the average of the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinnerTakeGame {
    pub win: AffineBranch,
    pub lose: AffineBranch,
    pub type_low: f64,
    pub type_high: f64,
}

impl WinnerTakeGame {
    pub fn new(win: AffineBranch, lose: AffineBranch, type_low: f64, type_high: f64) -> Self {
        assert!(
            type_low < type_high,
            "type interval must be nondegenerate: [{type_low}, {type_high}]"
        );
        Self { win, lose, type_low, type_high }
    }

    /// Realized payoff of a player with type `t` bidding `a` against an
    /// opponent with type `tp` bidding `ap`.
    pub fn payoff(&self, t: f64, a: f64, tp: f64, ap: f64) -> f64 {
        if a > ap {
            self.win.eval(t, a, tp, ap)
        } else if a < ap {
            self.lose.eval(t, a, tp, ap)
        } else {
            0.5 * (self.win.eval(t, a, tp, ap) + self.lose.eval(t, a, tp, ap))
        }
    }

    pub fn type_range(&self) -> f64 {
        self.type_high - self.type_low
    }
}

/// Deterministic payoff of one realized profile: returns the pair
/// (winner payoff, loser payoff) along with the winning side's index.
pub fn payoff(game: &WinnerTakeGame, t: f64, a: f64, tp: f64, ap: f64) -> f64 {
    game.payoff(t, a, tp, ap)
}

/// A bid function `s(t) = m·t + b` on a type interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearStrategy {
    pub m: f64,
    pub b: f64,
    pub type_low: f64,
    pub type_high: f64,
}

impl LinearStrategy {
    pub fn new(m: f64, b: f64, type_low: f64, type_high: f64) -> Self {
        Self { m, b, type_low, type_high }
    }

    /// The truthful strategy `s(t) = t` on the game's type interval.
    pub fn truthful(game: &WinnerTakeGame) -> Self {
        Self::new(1.0, 0.0, game.type_low, game.type_high)
    }

    pub fn bid(&self, t: f64) -> f64 {
        self.m * t + self.b
    }

    /// Bids reachable over the strategy's type interval, as (low, high).
    pub fn bid_range(&self) -> (f64, f64) {
        let at_low = self.bid(self.type_low);
        let at_high = self.bid(self.type_high);
        if at_low <= at_high {
            (at_low, at_high)
        } else {
            (at_high, at_low)
        }
    }

    pub fn same_domain(&self, other: &LinearStrategy) -> bool {
        self.type_low == other.type_low && self.type_high == other.type_high
    }

    pub fn matches_game(&self, game: &WinnerTakeGame) -> bool {
        self.type_low == game.type_low && self.type_high == game.type_high
    }
}

impl fmt::Display for LinearStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b < 0.0 {
            write!(f, "s(t) = {:.6}*t - {:.6}", self.m, -self.b)
        } else {
            write!(f, "s(t) = {:.6}*t + {:.6}", self.m, self.b)
        }
    }
}

/// Error surfaced by an external type sampler.
#[derive(Debug, Clone, thiserror::Error)]
#[error("type sampling failed: {0}")]
pub struct SampleError(pub String);

/// Marginal type distribution treated as a black box.
#[derive(Clone)]
pub enum SamplerKind {
    /// Uniform on `[low, high]`.
    Uniform { low: f64, high: f64 },
    /// Caller-supplied sampler; draws one type given the stream RNG.
    External(Arc<dyn Fn(&mut ChaCha8Rng) -> Result<f64, SampleError> + Send + Sync>),
}

impl fmt::Debug for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerKind::Uniform { low, high } => write!(f, "Uniform({low}, {high})"),
            SamplerKind::External(_) => write!(f, "External(..)"),
        }
    }
}

/// Seeded type sampler. Identical seed and kind yield identical streams.
#[derive(Debug, Clone)]
pub struct TypeSampler {
    pub kind: SamplerKind,
    pub seed: u64,
}

impl TypeSampler {
    pub fn uniform(low: f64, high: f64, seed: u64) -> Self {
        Self { kind: SamplerKind::Uniform { low, high }, seed }
    }

    /// Uniform sampler matching the game's type interval.
    pub fn for_game(game: &WinnerTakeGame, seed: u64) -> Self {
        Self::uniform(game.type_low, game.type_high, seed)
    }

    pub fn external(
        f: impl Fn(&mut ChaCha8Rng) -> Result<f64, SampleError> + Send + Sync + 'static,
        seed: u64,
    ) -> Self {
        Self { kind: SamplerKind::External(Arc::new(f)), seed }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<f64, SampleError> {
        match &self.kind {
            SamplerKind::Uniform { low, high } => Ok(rng.gen_range(*low..=*high)),
            SamplerKind::External(f) => f(rng),
        }
    }
}

/// Draw `n` independent joint type profiles `(t, t')`, both coordinates
/// i.i.d. from the sampler's marginal.
pub fn sample_type_profiles(
    sampler: &TypeSampler,
    n: usize,
) -> Result<Vec<(f64, f64)>, SampleError> {
    assert!(n >= 1, "need at least one profile");
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let mut profiles = Vec::with_capacity(n);
    for _ in 0..n {
        let t = sampler.draw(&mut rng)?;
        let tp = sampler.draw(&mut rng)?;
        profiles.push((t, tp));
    }
    Ok(profiles)
}
