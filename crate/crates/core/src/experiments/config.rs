//! Simulation configuration: TOML file plus `key=value` overrides.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::decision::{Algorithm, Profile};
use crate::error::{Error, Result};
use crate::signal::CaseId;

/// Relative weights of the three profiles in the initial population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileMix {
    pub imitator: f64,
    pub anti_imitator: f64,
    pub random_trader: f64,
}

impl Default for ProfileMix {
    fn default() -> Self {
        Self {
            imitator: 1.0,
            anti_imitator: 1.0,
            random_trader: 1.0,
        }
    }
}

impl ProfileMix {
    pub fn weights(&self) -> [f64; 3] {
        [self.imitator, self.anti_imitator, self.random_trader]
    }

    /// Largest-remainder apportionment of `n` agents, ties resolved in
    /// profile order (imitator, anti-imitator, random trader).
    pub fn counts(&self, n: usize) -> [usize; 3] {
        let w = self.weights();
        let total: f64 = w.iter().sum();
        let exact = w.map(|x| x / total * n as f64);
        let mut counts = exact.map(|x| x.floor() as usize);
        let mut left = n - counts.iter().sum::<usize>();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &k in order.iter().cycle() {
            if left == 0 {
                break;
            }
            counts[k] += 1;
            left -= 1;
        }
        counts
    }
}

/// Every knob of a single simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub n_agents: usize,
    /// Links per new node in the Barabási–Albert generator.
    pub ba_m: usize,
    /// Fraction of nodes kept out of the network (degree 0).
    pub isolated_fraction: f64,
    /// Total number of steps, warm-up included.
    pub steps: usize,
    /// Strategy-1-only steps at the start of the run.
    pub warmup: usize,
    pub case_id: CaseId,
    /// Probability of engaging the momentum channel.
    pub follow_probability: f64,
    pub algorithm: Algorithm,
    /// Index sensitivity to the net order balance.
    pub index_k: f64,
    pub init_index: f64,
    pub init_cash: f64,
    pub init_shares: u64,
    pub seed: u64,
    pub hub_profile_override: Option<Profile>,
    pub profile_mix: ProfileMix,
    /// Random traders draw a uniform neighborhood term under `combined_index`.
    pub random_neighborhood: bool,
    /// Random traders switch to the momentum decision under `compare`.
    /// Off by default: random traders then keep their uniform strategy 1.
    pub random_follows_momentum: bool,
    /// Optional probability table replacing the built-in case table.
    pub table_file: Option<PathBuf>,
    /// Keep every `return_sample_stride`-th post-warm-up step of per-agent
    /// returns. Running statistics always use every step.
    pub return_sample_stride: usize,
    /// Store the full per-agent wealth series (n_agents x steps floats).
    pub record_wealth_history: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_agents: 3969,
            ba_m: 8,
            isolated_fraction: 0.0,
            steps: 10_100,
            warmup: 100,
            case_id: CaseId::One,
            follow_probability: 0.99,
            algorithm: Algorithm::Compare,
            index_k: 0.1,
            init_index: 100.0,
            init_cash: 10_000.0,
            init_shares: 100,
            seed: 0,
            hub_profile_override: None,
            profile_mix: ProfileMix::default(),
            random_neighborhood: true,
            random_follows_momentum: false,
            table_file: None,
            return_sample_stride: 10,
            record_wealth_history: false,
        }
    }
}

impl SimulationConfig {
    /// Parses a TOML document. Unknown keys are errors.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides before
    /// deserializing. Values are read as TOML literals, falling back to a
    /// plain string (`hub_profile_override=anti_imitator`).
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        for (key, raw) in overrides {
            let value = parse_override_value(raw);
            insert_dotted(&mut table, key, value)?;
        }
        let config: SimulationConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string()]))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every constraint and reports all offending keys at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.ba_m < 1 {
            bad.push(format!("ba_m: must be >= 1 (got {})", self.ba_m));
        }
        if self.n_agents <= self.ba_m {
            bad.push(format!(
                "n_agents: must exceed ba_m={} (got {})",
                self.ba_m, self.n_agents
            ));
        }
        if !(0.0..1.0).contains(&self.isolated_fraction) {
            bad.push(format!(
                "isolated_fraction: must lie in [0, 1) (got {})",
                self.isolated_fraction
            ));
        }
        if self.warmup < crate::signal::MOMENTUM_LOOKBACK {
            bad.push(format!("warmup: must be >= 11 (got {})", self.warmup));
        }
        if self.steps != 0 && self.steps <= self.warmup {
            bad.push(format!(
                "steps: must be 0 or exceed warmup={} (got {})",
                self.warmup, self.steps
            ));
        }
        if !(0.0..=1.0).contains(&self.follow_probability) {
            bad.push(format!(
                "follow_probability: must lie in [0, 1] (got {})",
                self.follow_probability
            ));
        }
        if !(self.index_k.is_finite() && self.index_k >= 0.0) {
            bad.push(format!("index_k: must be finite and >= 0 (got {})", self.index_k));
        }
        if !(self.init_index.is_finite() && self.init_index > 0.0) {
            bad.push(format!("init_index: must be positive (got {})", self.init_index));
        }
        if !(self.init_cash.is_finite() && self.init_cash >= 0.0) {
            bad.push(format!("init_cash: must be >= 0 (got {})", self.init_cash));
        }
        let w = self.profile_mix.weights();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            bad.push(format!(
                "profile_mix: weights must be non-negative with a positive sum (got {w:?})"
            ));
        }
        if self.return_sample_stride == 0 {
            bad.push("return_sample_stride: must be >= 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn insert_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| {
        Error::Config(vec![format!("{key}: empty override key")])
    })?;
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(vec![format!("{key}: {p} is not a table")]))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
