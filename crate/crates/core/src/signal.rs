//! Momentum (MOM) technical-analysis signal.
//!
//! The pipeline is: index history -> [`MomentumTriple`] -> [`TrendRow`] ->
//! buy/hold/sell probabilities from a [`ProbabilityTable`] -> sampled
//! [`Action`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability-triple sums.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Number of past index values the momentum reads.
pub const MOMENTUM_LOOKBACK: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Buy,
    Hold,
    Sell,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Buy, Action::Hold, Action::Sell];

    /// +1 / 0 / -1
    pub fn value(self) -> i8 {
        match self {
            Action::Buy => 1,
            Action::Hold => 0,
            Action::Sell => -1,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Buy => "buy",
            Action::Hold => "hold",
            Action::Sell => "sell",
        })
    }
}

/// Index differences over the 1-, 5- and 10-step windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumTriple {
    pub m1: f64,
    pub m5: f64,
    pub m10: f64,
}

/// Momentum at step `t`, reading `series[t-1]` back to `series[t-11]`.
///
/// `m1 = I(t-1) - I(t-2)`, `m5 = I(t-2) - I(t-6)`, `m10 = I(t-6) - I(t-11)`.
pub fn compute_momentum(series: &[f64], t: usize) -> Result<MomentumTriple> {
    if t < MOMENTUM_LOOKBACK || series.len() < t {
        return Err(Error::HistoryTooShort {
            t,
            needed: MOMENTUM_LOOKBACK,
            available: t.min(series.len()),
        });
    }
    let at = |lag: usize| series[t - lag];
    Ok(MomentumTriple {
        m1: at(1) - at(2),
        m5: at(2) - at(6),
        m10: at(6) - at(11),
    })
}

/// The five strict predicates
/// `(m1 > m5, m5 > m10, m1 > 0, m5 > 0, m10 > 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TrendPattern(pub [bool; 5]);

impl TrendPattern {
    pub fn of(mom: &MomentumTriple) -> Self {
        TrendPattern([
            mom.m1 > mom.m5,
            mom.m5 > mom.m10,
            mom.m1 > 0.0,
            mom.m5 > 0.0,
            mom.m10 > 0.0,
        ])
    }

    /// Packs the predicates into 5 bits, first predicate most significant.
    pub fn bits(self) -> u8 {
        self.0.iter().fold(0u8, |acc, &b| (acc << 1) | u8::from(b))
    }

    pub fn from_bits(bits: u8) -> Self {
        let mut out = [false; 5];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = bits & (1 << (4 - k)) != 0;
        }
        TrendPattern(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrendRow {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
    L,
    M,
    N,
    O,
    P,
    Q,
    R,
}

impl TrendRow {
    pub const ALL: [TrendRow; 18] = [
        TrendRow::A,
        TrendRow::B,
        TrendRow::C,
        TrendRow::D,
        TrendRow::E,
        TrendRow::F,
        TrendRow::G,
        TrendRow::H,
        TrendRow::I,
        TrendRow::J,
        TrendRow::K,
        TrendRow::L,
        TrendRow::M,
        TrendRow::N,
        TrendRow::O,
        TrendRow::P,
        TrendRow::Q,
        TrendRow::R,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The predicate pattern that defines this row.
    pub fn pattern(self) -> TrendPattern {
        const T: bool = true;
        const F: bool = false;
        TrendPattern(match self {
            TrendRow::A => [F, F, T, T, T],
            TrendRow::B => [T, T, T, T, T],
            TrendRow::C => [F, T, T, T, T],
            TrendRow::D => [T, F, T, T, T],
            TrendRow::E => [F, T, T, T, F],
            TrendRow::F => [T, F, T, F, T],
            TrendRow::G => [T, T, T, T, F],
            TrendRow::H => [T, T, F, F, F],
            TrendRow::I => [T, T, T, F, F],
            TrendRow::J => [F, T, F, T, F],
            TrendRow::K => [T, F, T, F, F],
            TrendRow::L => [F, F, F, F, T],
            TrendRow::M => [F, T, F, T, T],
            TrendRow::N => [T, F, F, F, F],
            TrendRow::O => [T, F, F, F, T],
            TrendRow::P => [F, F, F, F, F],
            TrendRow::Q => [F, F, F, T, T],
            TrendRow::R => [F, T, F, F, F],
        })
    }

    pub fn label(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_label(c: char) -> Option<Self> {
        let c = c.to_ascii_uppercase();
        if ('A'..='R').contains(&c) {
            Some(Self::ALL[(c as u8 - b'A') as usize])
        } else {
            None
        }
    }
}

const fn build_row_lookup() -> [Option<TrendRow>; 32] {
    // bit patterns of rows A..R, first predicate most significant
    const BITS: [u8; 18] = [
        0b00111, 0b11111, 0b01111, 0b10111, 0b01110, 0b10101, 0b11110, 0b11000, 0b11100,
        0b01010, 0b10100, 0b00001, 0b01011, 0b10000, 0b10001, 0b00000, 0b00011, 0b01000,
    ];
    const ROWS: [TrendRow; 18] = TrendRow::ALL;
    let mut table = [None; 32];
    let mut k = 0;
    while k < 18 {
        table[BITS[k] as usize] = Some(ROWS[k]);
        k += 1;
    }
    table
}

const ROW_LOOKUP: [Option<TrendRow>; 32] = build_row_lookup();

/// Result of matching a momentum pattern against the trend table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrendClass {
    pub row: TrendRow,
    pub pattern: TrendPattern,
    /// `false` when the pattern is not one of the 18 tabulated rows and was
    /// mapped to the no-signal row P.
    pub listed: bool,
}

/// Classifies a momentum triple. Equality counts as `false` for every
/// predicate; unlisted patterns fall back to row P.
pub fn classify_trend(mom: &MomentumTriple) -> TrendClass {
    classify_pattern(TrendPattern::of(mom))
}

pub fn classify_pattern(pattern: TrendPattern) -> TrendClass {
    match ROW_LOOKUP[pattern.bits() as usize] {
        Some(row) => TrendClass {
            row,
            pattern,
            listed: true,
        },
        None => TrendClass {
            row: TrendRow::P,
            pattern,
            listed: false,
        },
    }
}

/// (P(buy), P(hold), P(sell)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbTriple {
    pub buy: f64,
    pub hold: f64,
    pub sell: f64,
}

impl ProbTriple {
    pub const fn new(buy: f64, hold: f64, sell: f64) -> Self {
        Self { buy, hold, sell }
    }

    pub fn sum(&self) -> f64 {
        self.buy + self.hold + self.sell
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.sell, self.hold, self.buy)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.buy, self.hold, self.sell];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::InvalidDistribution(format!(
                "entries must lie in [0, 1]: {self:?}"
            )));
        }
        if (self.sum() - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {} instead of 1",
                self.sum()
            )));
        }
        Ok(())
    }

    /// Maps one uniform draw `u` in `[0, 1)` onto buy, hold, sell in that order.
    pub fn pick(&self, u: f64) -> Action {
        if u < self.buy {
            Action::Buy
        } else if u < self.buy + self.hold {
            Action::Hold
        } else {
            Action::Sell
        }
    }
}

/// Draws an action from `probs` with a single uniform variate.
pub fn sample_decision<R: Rng + ?Sized>(probs: &ProbTriple, rng: &mut R) -> Result<Action> {
    probs.validate()?;
    Ok(probs.pick(rng.random::<f64>()))
}

/// Which built-in probability table to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum CaseId {
    /// Follow the index tendency.
    One = 1,
    /// Case 1 with buy and sell swapped.
    Two = 2,
    /// Balanced column sums.
    Three = 3,
    /// Case 3 with buy and sell swapped.
    Four = 4,
}

impl TryFrom<u8> for CaseId {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(CaseId::One),
            2 => Ok(CaseId::Two),
            3 => Ok(CaseId::Three),
            4 => Ok(CaseId::Four),
            other => Err(format!("case id must be 1..=4, got {other}")),
        }
    }
}

impl From<CaseId> for u8 {
    fn from(c: CaseId) -> u8 {
        c as u8
    }
}

impl FromStr for CaseId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.trim()
            .parse::<u8>()
            .map_err(|e| e.to_string())
            .and_then(CaseId::try_from)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

const fn p(buy: f64, hold: f64, sell: f64) -> ProbTriple {
    ProbTriple::new(buy, hold, sell)
}

/// Rows A..R.
const CASE1: [ProbTriple; 18] = [
    p(0.8, 0.1, 0.1),
    p(1.0, 0.0, 0.0),
    p(0.8, 0.1, 0.1),
    p(1.0, 0.0, 0.0),
    p(0.6, 0.2, 0.2),
    p(0.6, 0.2, 0.2),
    p(0.6, 0.2, 0.2),
    p(0.1, 0.1, 0.8),
    p(1.0, 0.0, 0.0),
    p(0.2, 0.2, 0.6),
    p(1.0, 0.0, 0.0),
    p(0.2, 0.2, 0.6),
    p(0.0, 0.0, 1.0),
    p(0.1, 0.1, 0.8),
    p(0.2, 0.2, 0.6),
    p(0.0, 0.0, 1.0),
    p(0.0, 0.0, 1.0),
    p(0.0, 0.0, 1.0),
];

const CASE2: [ProbTriple; 18] = [
    p(0.1, 0.1, 0.8),
    p(0.0, 0.0, 1.0),
    p(0.1, 0.1, 0.8),
    p(0.0, 0.0, 1.0),
    p(0.2, 0.2, 0.6),
    p(0.2, 0.2, 0.6),
    p(0.2, 0.2, 0.6),
    p(0.8, 0.1, 0.1),
    p(0.0, 0.0, 1.0),
    p(0.6, 0.2, 0.2),
    p(0.0, 0.0, 1.0),
    p(0.6, 0.2, 0.2),
    p(1.0, 0.0, 0.0),
    p(0.8, 0.1, 0.1),
    p(0.6, 0.2, 0.2),
    p(1.0, 0.0, 0.0),
    p(1.0, 0.0, 0.0),
    p(1.0, 0.0, 0.0),
];

const CASE3: [ProbTriple; 18] = [
    p(0.6, 0.3, 0.1),
    p(0.7, 0.3, 0.0),
    p(0.6, 0.3, 0.1),
    p(0.7, 0.3, 0.0),
    p(0.4, 0.4, 0.2),
    p(0.4, 0.4, 0.2),
    p(0.4, 0.4, 0.2),
    p(0.1, 0.3, 0.6),
    p(0.7, 0.3, 0.0),
    p(0.2, 0.4, 0.4),
    p(0.7, 0.3, 0.0),
    p(0.2, 0.4, 0.4),
    p(0.0, 0.3, 0.7),
    p(0.1, 0.3, 0.6),
    p(0.2, 0.4, 0.4),
    p(0.0, 0.3, 0.7),
    p(0.0, 0.3, 0.7),
    p(0.0, 0.3, 0.7),
];

/// Per-row buy/hold/sell probabilities for the 18 trend rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    /// 1..=4 for the built-in tables, 0 for a table loaded from a file.
    pub case_id: u8,
    rows: [Option<ProbTriple>; 18],
}

impl ProbabilityTable {
    pub fn builtin(case: CaseId) -> Self {
        let full = |rows: [ProbTriple; 18], case_id: u8| ProbabilityTable {
            case_id,
            rows: rows.map(Some),
        };
        match case {
            CaseId::One => full(CASE1, 1),
            CaseId::Two => full(CASE2, 2),
            CaseId::Three => full(CASE3, 3),
            CaseId::Four => derive_case4(&full(CASE3, 3)),
        }
    }

    pub fn get(&self, row: TrendRow) -> Option<ProbTriple> {
        self.rows[row.index()]
    }

    pub fn rows(&self) -> impl Iterator<Item = (TrendRow, ProbTriple)> + '_ {
        TrendRow::ALL
            .iter()
            .filter_map(move |&r| self.rows[r.index()].map(|p| (r, p)))
    }

    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(Option::is_some)
    }

    /// Column sums (buy, hold, sell) over the stored rows.
    pub fn column_sums(&self) -> ProbTriple {
        self.rows().fold(ProbTriple::new(0.0, 0.0, 0.0), |acc, (_, r)| {
            ProbTriple::new(acc.buy + r.buy, acc.hold + r.hold, acc.sell + r.sell)
        })
    }

    /// Parses `label p_buy p_hold p_sell` lines. Blank lines and `#` comments
    /// are skipped; every triple must be a valid distribution.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = [None; 18];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Parse(format!("line {}: {msg}: {raw:?}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(bad("expected `label p_buy p_hold p_sell`"));
            }
            let mut label = fields[0].chars();
            let row = match (label.next(), label.next()) {
                (Some(c), None) => TrendRow::from_label(c),
                _ => None,
            }
            .ok_or_else(|| bad("unknown row label"))?;
            let nums: Vec<f64> = fields[1..]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("non-numeric probability"))?;
            let triple = ProbTriple::new(nums[0], nums[1], nums[2]);
            triple.validate()?;
            if rows[row.index()].replace(triple).is_some() {
                return Err(bad("duplicate row"));
            }
        }
        Ok(ProbabilityTable { case_id: 0, rows })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (row, t) in self.rows() {
            out.push_str(&format!("{} {} {} {}\n", row.label(), t.buy, t.hold, t.sell));
        }
        out
    }
}

/// Stored probabilities for `row`.
pub fn lookup_probs(table: &ProbabilityTable, row: TrendRow) -> Result<ProbTriple> {
    table.get(row).ok_or(Error::TableMiss(row))
}

/// Case 4: buy and sell columns of `case3` swapped row by row.
pub fn derive_case4(case3: &ProbabilityTable) -> ProbabilityTable {
    ProbabilityTable {
        case_id: 4,
        rows: case3.rows.map(|r| r.map(|t| t.swapped())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn momentum_of_constant_series_is_zero() {
        let series = vec![100.0; 20];
        let m = compute_momentum(&series, 15).unwrap();
        assert_eq!(m, MomentumTriple { m1: 0.0, m5: 0.0, m10: 0.0 });
        assert_eq!(classify_trend(&m).row, TrendRow::P);
        assert!(classify_trend(&m).listed);
    }

    #[test]
    fn momentum_hand_example() {
        // I(t-11) .. I(t-1)
        let series = [100.0, 101.0, 103.0, 106.0, 110.0, 115.0, 121.0, 128.0, 136.0, 145.0, 155.0];
        let m = compute_momentum(&series, 11).unwrap();
        // 155-145, 145-115, 115-100
        assert_eq!(m, MomentumTriple { m1: 10.0, m5: 30.0, m10: 15.0 });
        let class = classify_trend(&m);
        assert_eq!(class.pattern, TrendPattern([false, true, true, true, true]));
        assert_eq!(class.row, TrendRow::C);
    }

    #[test]
    fn momentum_of_linear_series() {
        for &s in &[0.5, 2.0, -3.0] {
            let series: Vec<f64> = (0..30).map(|t| 100.0 + s * t as f64).collect();
            let m = compute_momentum(&series, 25).unwrap();
            assert!((m.m1 - s).abs() < 1e-9);
            assert!((m.m5 - 4.0 * s).abs() < 1e-9);
            assert!((m.m10 - 5.0 * s).abs() < 1e-9);
        }
        let up: Vec<f64> = (0..12).map(|t| t as f64).collect();
        let m = compute_momentum(&up, 12).unwrap();
        assert_eq!(TrendPattern::of(&m), TrendPattern([false, false, true, true, true]));
        assert_eq!(classify_trend(&m).row, TrendRow::A);
    }

    #[test]
    fn momentum_needs_eleven_values() {
        let series = vec![1.0; 10];
        assert!(matches!(
            compute_momentum(&series, 10),
            Err(Error::HistoryTooShort { .. })
        ));
        // t beyond the recorded history
        assert!(compute_momentum(&series, 12).is_err());
    }

    #[test]
    fn row_patterns_are_distinct_and_round_trip() {
        let mut seen = std::collections::HashSet::new();
        for row in TrendRow::ALL {
            assert!(seen.insert(row.pattern().bits()));
            let class = classify_pattern(row.pattern());
            assert_eq!(class.row, row);
            assert!(class.listed);
            assert_eq!(TrendPattern::from_bits(row.pattern().bits()), row.pattern());
            assert_eq!(TrendRow::from_label(row.label()), Some(row));
        }
    }

    #[test]
    fn unlisted_patterns_fall_back_to_p() {
        let mut unlisted = 0;
        for bits in 0u8..32 {
            let class = classify_pattern(TrendPattern::from_bits(bits));
            if !class.listed {
                unlisted += 1;
                assert_eq!(class.row, TrendRow::P);
            }
        }
        assert_eq!(unlisted, 14);
    }

    #[test]
    fn lookup_examples() {
        let t1 = ProbabilityTable::builtin(CaseId::One);
        let t2 = ProbabilityTable::builtin(CaseId::Two);
        let t3 = ProbabilityTable::builtin(CaseId::Three);
        assert_eq!(lookup_probs(&t1, TrendRow::B).unwrap(), p(1.0, 0.0, 0.0));
        assert_eq!(lookup_probs(&t3, TrendRow::P).unwrap(), p(0.0, 0.3, 0.7));
        assert_eq!(lookup_probs(&t2, TrendRow::H).unwrap(), p(0.8, 0.1, 0.1));
    }

    #[test]
    fn case4_swaps_case3() {
        let t3 = ProbabilityTable::builtin(CaseId::Three);
        let t4 = derive_case4(&t3);
        assert_eq!(t4.get(TrendRow::B).unwrap(), p(0.0, 0.3, 0.7));
        assert_eq!(t4.get(TrendRow::E).unwrap(), p(0.2, 0.4, 0.4));
        for (_, r) in t4.rows() {
            assert!((r.sum() - 1.0).abs() < PROB_TOLERANCE);
        }
        assert_eq!(t4, ProbabilityTable::builtin(CaseId::Four));
    }

    #[test]
    fn table_miss_on_partial_table() {
        let t = ProbabilityTable::parse("A 0.5 0.25 0.25\n").unwrap();
        assert!(matches!(lookup_probs(&t, TrendRow::B), Err(Error::TableMiss(TrendRow::B))));
        assert!(!t.is_complete());
    }

    #[test]
    fn table_text_round_trip() {
        for case in [CaseId::One, CaseId::Two, CaseId::Three, CaseId::Four] {
            let t = ProbabilityTable::builtin(case);
            let mut back = ProbabilityTable::parse(&t.to_text()).unwrap();
            back.case_id = t.case_id;
            assert_eq!(back, t);
        }
    }

    #[test]
    fn table_parse_rejects_garbage() {
        assert!(ProbabilityTable::parse("Z 1 0 0").is_err());
        assert!(ProbabilityTable::parse("A 1 0").is_err());
        assert!(ProbabilityTable::parse("A 0.5 0.5 0.5").is_err());
        assert!(ProbabilityTable::parse("A x 0 1").is_err());
        assert!(ProbabilityTable::parse("A 1 0 0\nA 1 0 0").is_err());
        let t = ProbabilityTable::parse("# header\n\nb 0 0 1  # trailing\n").unwrap();
        assert_eq!(t.get(TrendRow::B), Some(p(0.0, 0.0, 1.0)));
    }

    #[test]
    fn degenerate_rows_are_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            assert_eq!(sample_decision(&p(1.0, 0.0, 0.0), &mut rng).unwrap(), Action::Buy);
            assert_eq!(sample_decision(&p(0.0, 0.0, 1.0), &mut rng).unwrap(), Action::Sell);
            assert_eq!(sample_decision(&p(0.0, 1.0, 0.0), &mut rng).unwrap(), Action::Hold);
        }
    }

    #[test]
    fn sample_rejects_bad_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(matches!(
            sample_decision(&p(0.5, 0.5, 0.1), &mut rng),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(sample_decision(&p(1.2, -0.2, 0.0), &mut rng).is_err());
    }

    #[test]
    fn sample_frequency_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let buys = (0..n)
            .filter(|_| sample_decision(&p(0.8, 0.1, 0.1), &mut rng).unwrap() == Action::Buy)
            .count();
        let freq = buys as f64 / n as f64;
        assert!((freq - 0.8).abs() < 0.01, "buy frequency {freq}");
    }

    #[test]
    fn sampling_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..200)
                .map(|_| sample_decision(&p(0.3, 0.3, 0.4), &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }
}
