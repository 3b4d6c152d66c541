//! Reference rule tables and small helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trustnet_market::Action;

/// Trend table: row, then the five predicates
/// (m1>m5, m5>m10, m1>0, m5>0, m10>0).
pub const TREND_TABLE: &str = "
A 0 0 1 1 1
B 1 1 1 1 1
C 0 1 1 1 1
D 1 0 1 1 1
E 0 1 1 1 0
F 1 0 1 0 1
G 1 1 1 1 0
H 1 1 0 0 0
I 1 1 1 0 0
J 0 1 0 1 0
K 1 0 1 0 0
L 0 0 0 0 1
M 0 1 0 1 1
N 1 0 0 0 0
O 1 0 0 0 1
P 0 0 0 0 0
Q 0 0 0 1 1
R 0 1 0 0 0
";

/// Probability table: row, then buy/hold/sell for cases 1, 2 and 3.
pub const PROB_TABLE: &str = "
A 0.8 0.1 0.1 0.1 0.1 0.8 0.6 0.3 0.1
B 1.0 0.0 0.0 0.0 0.0 1.0 0.7 0.3 0.0
C 0.8 0.1 0.1 0.1 0.1 0.8 0.6 0.3 0.1
D 1.0 0.0 0.0 0.0 0.0 1.0 0.7 0.3 0.0
E 0.6 0.2 0.2 0.2 0.2 0.6 0.4 0.4 0.2
F 0.6 0.2 0.2 0.2 0.2 0.6 0.4 0.4 0.2
G 0.6 0.2 0.2 0.2 0.2 0.6 0.4 0.4 0.2
H 0.1 0.1 0.8 0.8 0.1 0.1 0.1 0.3 0.6
I 1.0 0.0 0.0 0.0 0.0 1.0 0.7 0.3 0.0
J 0.2 0.2 0.6 0.6 0.2 0.2 0.2 0.4 0.4
K 1.0 0.0 0.0 0.0 0.0 1.0 0.7 0.3 0.0
L 0.2 0.2 0.6 0.6 0.2 0.2 0.2 0.4 0.4
M 0.0 0.0 1.0 1.0 0.0 0.0 0.0 0.3 0.7
N 0.1 0.1 0.8 0.8 0.1 0.1 0.1 0.3 0.6
O 0.2 0.2 0.6 0.6 0.2 0.2 0.2 0.4 0.4
P 0.0 0.0 1.0 1.0 0.0 0.0 0.0 0.3 0.7
Q 0.0 0.0 1.0 1.0 0.0 0.0 0.0 0.3 0.7
R 0.0 0.0 1.0 1.0 0.0 0.0 0.0 0.3 0.7
";

pub fn trend_oracle() -> HashMap<[bool; 5], char> {
    TREND_TABLE
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace();
            let label = it.next().unwrap().chars().next().unwrap();
            let bits: Vec<bool> = it.map(|b| b == "1").collect();
            (bits.try_into().unwrap(), label)
        })
        .collect()
}

pub fn prob_oracle() -> Vec<(char, [[f64; 3]; 3])> {
    PROB_TABLE
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split_whitespace();
            let label = it.next().unwrap().chars().next().unwrap();
            let v: Vec<f64> = it.map(|x| x.parse().unwrap()).collect();
            (label, [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|f - p| <= 3 sigma` for a binomial frequency over `n` trials.
pub fn within_3_sigma(hits: usize, n: usize, p: f64) -> bool {
    let f = hits as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (f - p).abs() <= 3.0 * sigma + 1e-12
}

/// Outcome distribution of the anti-imitator mapping, written from the rule
/// list: opposite on agreement, keep own on full disagreement, coin flips on
/// the hold combinations.
pub fn anti_oracle(d1: Action, d2: Action) -> Vec<(Action, f64)> {
    use Action::*;
    match (d1, d2) {
        (Buy, Buy) => vec![(Sell, 1.0)],
        (Sell, Sell) => vec![(Buy, 1.0)],
        (Buy, Sell) => vec![(Buy, 1.0)],
        (Sell, Buy) => vec![(Sell, 1.0)],
        (Hold, Hold) | (Buy, Hold) | (Sell, Hold) => vec![(Buy, 0.5), (Sell, 0.5)],
        (Hold, Buy) => vec![(Hold, 0.5), (Sell, 0.5)],
        (Hold, Sell) => vec![(Hold, 0.5), (Buy, 0.5)],
    }
}

