//! Per-agent decision making.
//!
//! Strategy 1 reads the agent's trust neighborhood through its psychological
//! profile; strategy 2 is the momentum signal. The two are merged either by
//! the pairwise comparison rule ([`combine_compare`]) or by the single-score
//! rule ([`combine_index`]).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::network::TrustNetwork;
use crate::signal::{Action, ProbTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Imitator,
    AntiImitator,
    RandomTrader,
}

impl Profile {
    pub const ALL: [Profile; 3] = [Profile::Imitator, Profile::AntiImitator, Profile::RandomTrader];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Imitator -> AntiImitator -> RandomTrader -> Imitator.
    pub fn rotated(self) -> Profile {
        match self {
            Profile::Imitator => Profile::AntiImitator,
            Profile::AntiImitator => Profile::RandomTrader,
            Profile::RandomTrader => Profile::Imitator,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::Imitator => "imitator",
            Profile::AntiImitator => "anti_imitator",
            Profile::RandomTrader => "random_trader",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "imitator" | "imit" => Ok(Profile::Imitator),
            "anti_imitator" | "anti" | "antiimitator" => Ok(Profile::AntiImitator),
            "random_trader" | "random" | "randomtrader" => Ok(Profile::RandomTrader),
            other => Err(format!("unknown profile {other:?}")),
        }
    }
}

/// How strategies 1 and 2 are merged after warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Compare,
    CombinedIndex,
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "compare" => Ok(Algorithm::Compare),
            "combined_index" | "combined" | "index" => Ok(Algorithm::CombinedIndex),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Compare => "compare",
            Algorithm::CombinedIndex => "combined_index",
        })
    }
}

/// How many neighbors are in each state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NeighborhoodTally {
    pub buy: u32,
    pub hold: u32,
    pub sell: u32,
}

impl NeighborhoodTally {
    pub fn new(buy: u32, hold: u32, sell: u32) -> Self {
        Self { buy, hold, sell }
    }

    pub fn of(neighbors: &[u32], states: &[Action]) -> Self {
        let mut t = Self::default();
        for &j in neighbors {
            match states[j as usize] {
                Action::Buy => t.buy += 1,
                Action::Hold => t.hold += 1,
                Action::Sell => t.sell += 1,
            }
        }
        t
    }

    pub fn degree(&self) -> u32 {
        self.buy + self.hold + self.sell
    }

    fn counts(&self) -> [(Action, u32); 3] {
        [
            (Action::Buy, self.buy),
            (Action::Hold, self.hold),
            (Action::Sell, self.sell),
        ]
    }
}

fn pick_uniform<R: Rng + ?Sized>(options: &[Action], rng: &mut R) -> Action {
    if options.len() == 1 {
        options[0]
    } else {
        options[rng.random_range(0..options.len())]
    }
}

fn extreme_count<R: Rng + ?Sized>(tally: &NeighborhoodTally, want_max: bool, rng: &mut R) -> Action {
    let counts = tally.counts();
    let target = if want_max {
        counts.iter().map(|c| c.1).max()
    } else {
        counts.iter().map(|c| c.1).min()
    }
    .unwrap_or(0);
    let mut tied = [Action::Hold; 3];
    let mut k = 0;
    for (a, c) in counts {
        if c == target {
            tied[k] = a;
            k += 1;
        }
    }
    pick_uniform(&tied[..k], rng)
}

/// Strategy 1: the neighborhood decision filtered through the profile.
///
/// Imitators take the majority action, anti-imitators the minority one,
/// random traders a uniform action. Ties are split uniformly. Agents without
/// neighbors keep `prev_state`.
pub fn strategy1<R: Rng + ?Sized>(
    profile: Profile,
    tally: &NeighborhoodTally,
    prev_state: Action,
    rng: &mut R,
) -> Action {
    if tally.degree() == 0 {
        return prev_state;
    }
    match profile {
        Profile::Imitator => extreme_count(tally, true, rng),
        Profile::AntiImitator => extreme_count(tally, false, rng),
        Profile::RandomTrader => pick_uniform(&Action::ALL, rng),
    }
}

/// The anti-imitator's reaction to a (strategy 1, strategy 2) pair.
pub fn anti_momentum<R: Rng + ?Sized>(d1: Action, d2: Action, rng: &mut R) -> Action {
    use Action::*;
    match (d1, d2) {
        (Buy, Buy) => Sell,
        (Sell, Sell) => Buy,
        (Hold, Hold) => pick_uniform(&[Buy, Sell], rng),
        (Buy, Sell) => Buy,
        (Sell, Buy) => Sell,
        (Buy, Hold) | (Sell, Hold) => pick_uniform(&[Buy, Sell], rng),
        (Hold, Buy) => pick_uniform(&[Hold, Sell], rng),
        (Hold, Sell) => pick_uniform(&[Hold, Buy], rng),
    }
}

/// Pairwise combination. With probability `p` the momentum channel is
/// engaged: imitators and random traders switch to `d2`, anti-imitators
/// apply [`anti_momentum`]. Otherwise `d1` stands.
pub fn combine_compare<R: Rng + ?Sized>(
    profile: Profile,
    d1: Action,
    d2: Action,
    p: f64,
    rng: &mut R,
) -> Action {
    let engage = rng.random::<f64>() < p;
    match profile {
        Profile::Imitator | Profile::RandomTrader => {
            if engage {
                d2
            } else {
                d1
            }
        }
        Profile::AntiImitator => {
            if engage {
                anti_momentum(d1, d2, rng)
            } else {
                d1
            }
        }
    }
}

/// Single-score combination score `s` before thresholding.
///
/// `w1 = (buy - sell) / degree` (0 for isolated agents), `w2 = p_buy - p_sell`.
/// Random traders replace `w1` with a uniform draw in `[-1, 1]` when
/// `random_neighborhood` is set, or with 0 otherwise.
pub fn combined_score<R: Rng + ?Sized>(
    profile: Profile,
    tally: &NeighborhoodTally,
    probs: &ProbTriple,
    random_neighborhood: bool,
    rng: &mut R,
) -> f64 {
    let degree = tally.degree();
    let w1 = if degree == 0 {
        0.0
    } else {
        (f64::from(tally.buy) - f64::from(tally.sell)) / f64::from(degree)
    };
    let w2 = probs.buy - probs.sell;
    match profile {
        Profile::Imitator => w1 + w2,
        Profile::AntiImitator => -(w1 + w2),
        Profile::RandomTrader => {
            let u = if random_neighborhood {
                rng.random_range(-1.0..=1.0)
            } else {
                0.0
            };
            u + w2
        }
    }
}

/// Turns a score into an action: beyond +-1 the sign decides, inside the
/// band the agent trades in the sign's direction with probability `|s|`.
pub fn threshold_score<R: Rng + ?Sized>(s: f64, rng: &mut R) -> Action {
    if s >= 1.0 {
        Action::Buy
    } else if s <= -1.0 {
        Action::Sell
    } else if s == 0.0 {
        Action::Hold
    } else if rng.random::<f64>() < s.abs() {
        if s > 0.0 {
            Action::Buy
        } else {
            Action::Sell
        }
    } else {
        Action::Hold
    }
}

pub fn combine_index<R: Rng + ?Sized>(
    profile: Profile,
    tally: &NeighborhoodTally,
    probs: &ProbTriple,
    random_neighborhood: bool,
    rng: &mut R,
) -> Action {
    let s = combined_score(profile, tally, probs, random_neighborhood, rng);
    threshold_score(s, rng)
}

/// Parameters of the decision stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionConfig {
    pub follow_probability: f64,
    pub algorithm: Algorithm,
    /// Random traders draw their neighborhood term under `CombinedIndex`.
    pub random_neighborhood: bool,
    /// Random traders take part in the momentum channel under `Compare`.
    pub random_follows_momentum: bool,
}

/// Momentum input for one step: the same table row applies to everyone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSignal {
    pub probs: ProbTriple,
}

/// Decides every agent's next action from the previous step's states.
///
/// `signal` is `None` during warm-up, in which case only strategy 1 is used.
/// Each agent draws only from its own stream in `rngs`, so the result does
/// not depend on evaluation order.
pub fn decide_all<R: Rng>(
    profiles: &[Profile],
    states: &[Action],
    network: &TrustNetwork,
    signal: Option<&MomentumSignal>,
    config: &DecisionConfig,
    rngs: &mut [R],
    out: &mut Vec<Action>,
) {
    debug_assert_eq!(profiles.len(), states.len());
    debug_assert_eq!(rngs.len(), states.len());
    out.clear();
    out.extend(
        profiles
            .iter()
            .zip(states)
            .zip(rngs.iter_mut())
            .enumerate()
            .map(|(i, ((&profile, &prev), rng))| {
                let tally = NeighborhoodTally::of(network.neighbors(i), states);
                decide_one(profile, &tally, prev, signal, config, rng)
            }),
    );
}

/// One agent's decision; see [`decide_all`].
pub fn decide_one<R: Rng + ?Sized>(
    profile: Profile,
    tally: &NeighborhoodTally,
    prev: Action,
    signal: Option<&MomentumSignal>,
    config: &DecisionConfig,
    rng: &mut R,
) -> Action {
    match (signal, config.algorithm) {
        (None, _) => strategy1(profile, tally, prev, rng),
        (Some(_), Algorithm::Compare)
            if profile == Profile::RandomTrader && !config.random_follows_momentum =>
        {
            strategy1(profile, tally, prev, rng)
        }
        (Some(sig), Algorithm::Compare) => {
            let d1 = strategy1(profile, tally, prev, rng);
            let d2 = sig.probs.pick(rng.random::<f64>());
            combine_compare(profile, d1, d2, config.follow_probability, rng)
        }
        (Some(sig), Algorithm::CombinedIndex) => {
            combine_index(profile, tally, &sig.probs, config.random_neighborhood, rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn imitator_follows_majority() {
        let t = NeighborhoodTally::new(12, 1, 7);
        assert_eq!(strategy1(Profile::Imitator, &t, Action::Sell, &mut rng(1)), Action::Buy);
    }

    #[test]
    fn anti_imitator_follows_minority() {
        let t = NeighborhoodTally::new(12, 1, 7);
        assert_eq!(strategy1(Profile::AntiImitator, &t, Action::Buy, &mut rng(1)), Action::Hold);
    }

    #[test]
    fn isolated_agents_are_stubborn() {
        let t = NeighborhoodTally::default();
        for profile in Profile::ALL {
            for prev in Action::ALL {
                assert_eq!(strategy1(profile, &t, prev, &mut rng(3)), prev);
            }
        }
    }

    #[test]
    fn ties_split_uniformly() {
        let t = NeighborhoodTally::new(5, 0, 5);
        let mut r = rng(4);
        let n = 20_000;
        let buys = (0..n)
            .filter(|_| strategy1(Profile::Imitator, &t, Action::Hold, &mut r) == Action::Buy)
            .count();
        let f = buys as f64 / n as f64;
        assert!((f - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt() + 1e-12, "{f}");
        // hold is the unique minimum here
        assert_eq!(strategy1(Profile::AntiImitator, &t, Action::Buy, &mut r), Action::Hold);
    }

    #[test]
    fn random_trader_is_uniform() {
        let t = NeighborhoodTally::new(10, 0, 0);
        let mut r = rng(5);
        let mut counts = [0usize; 3];
        let n = 30_000;
        for _ in 0..n {
            let a = strategy1(Profile::RandomTrader, &t, Action::Hold, &mut r);
            counts[(1 - a.value()) as usize] += 1;
        }
        for c in counts {
            let f = c as f64 / n as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.015, "{counts:?}");
        }
    }

    #[test]
    fn anti_imitator_examples() {
        let mut r = rng(6);
        assert_eq!(
            combine_compare(Profile::AntiImitator, Action::Buy, Action::Sell, 1.0, &mut r),
            Action::Buy
        );
        assert_eq!(
            combine_compare(Profile::AntiImitator, Action::Buy, Action::Buy, 1.0, &mut r),
            Action::Sell
        );
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(
                combine_compare(Profile::Imitator, Action::Buy, Action::Buy, p, &mut r),
                Action::Buy
            );
        }
    }

    #[test]
    fn zero_follow_probability_is_pure_strategy1() {
        let mut r = rng(7);
        for profile in Profile::ALL {
            for d1 in Action::ALL {
                for d2 in Action::ALL {
                    assert_eq!(combine_compare(profile, d1, d2, 0.0, &mut r), d1);
                }
            }
        }
    }

    #[test]
    fn imitator_switch_frequency() {
        let mut r = rng(8);
        let n = 100_000;
        let sells = (0..n)
            .filter(|_| {
                combine_compare(Profile::Imitator, Action::Buy, Action::Sell, 0.99, &mut r)
                    == Action::Sell
            })
            .count();
        let f = sells as f64 / n as f64;
        assert!((f - 0.99).abs() < 0.005, "{f}");
    }

    #[test]
    fn combined_index_worked_example() {
        let t = NeighborhoodTally::new(6, 3, 1);
        let probs = ProbTriple::new(0.8, 0.1, 0.1);
        let mut r = rng(9);
        let s = combined_score(Profile::Imitator, &t, &probs, true, &mut r);
        assert!((s - 1.2).abs() < 1e-12);
        assert_eq!(combine_index(Profile::Imitator, &t, &probs, true, &mut r), Action::Buy);
        let s = combined_score(Profile::AntiImitator, &t, &probs, true, &mut r);
        assert!((s + 1.2).abs() < 1e-12);
        assert_eq!(combine_index(Profile::AntiImitator, &t, &probs, true, &mut r), Action::Sell);
    }

    #[test]
    fn combined_index_zero_score_holds() {
        let t = NeighborhoodTally::new(2, 0, 2);
        let probs = ProbTriple::new(0.3, 0.4, 0.3);
        let mut r = rng(10);
        for _ in 0..100 {
            assert_eq!(combine_index(Profile::Imitator, &t, &probs, true, &mut r), Action::Hold);
            assert_eq!(
                combine_index(Profile::RandomTrader, &t, &probs, false, &mut r),
                Action::Hold
            );
        }
    }

    #[test]
    fn isolated_agent_uses_momentum_term_only() {
        let t = NeighborhoodTally::default();
        let probs = ProbTriple::new(1.0, 0.0, 0.0);
        let s = combined_score(Profile::Imitator, &t, &probs, true, &mut rng(11));
        assert_eq!(s, 1.0);
    }

    #[test]
    fn decide_all_warmup_matches_strategy1() {
        let mut net_rng = rng(12);
        let net = TrustNetwork::generate_ba(60, 3, &mut net_rng).unwrap();
        let profiles: Vec<Profile> = (0..60).map(|i| Profile::ALL[i % 3]).collect();
        let states: Vec<Action> = (0..60).map(|i| Action::ALL[(i * 7) % 3]).collect();
        let config = DecisionConfig {
            follow_probability: 0.99,
            algorithm: Algorithm::Compare,
            random_neighborhood: true,
            random_follows_momentum: true,
        };
        let mut rngs: Vec<ChaCha8Rng> = (0..60).map(|i| rng(100 + i)).collect();
        let mut out = Vec::new();
        decide_all(&profiles, &states, &net, None, &config, &mut rngs, &mut out);
        for i in 0..60 {
            let tally = NeighborhoodTally::of(net.neighbors(i), &states);
            let expect = strategy1(profiles[i], &tally, states[i], &mut rng(100 + i as u64));
            assert_eq!(out[i], expect);
        }
    }
}
