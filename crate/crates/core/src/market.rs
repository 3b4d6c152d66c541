//! Order execution, index dynamics and wealth accounting.
//!
//! The market is the counterparty for every trade: an agent buys or sells a
//! single share per step at the current index value, subject to its cash and
//! inventory. The index then moves with the net executed balance.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ProfileStats, RunningStats};
use crate::decision::{decide_all, DecisionConfig, MomentumSignal, Profile};
use crate::error::{Error, Result};
use crate::experiments::SimulationConfig;
use crate::network::TrustNetwork;
use crate::signal::{classify_trend, compute_momentum, lookup_probs, Action, ProbabilityTable, TrendRow};

/// Largest relative index move per step.
pub const MAX_INDEX_MOVE: f64 = 0.5;

const NETWORK_STREAM: u64 = 0;
const MARKET_STREAM: u64 = 1;
const AGENT_STREAM_BASE: u64 = 2;

/// Independent ChaCha stream `stream` of the master `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Per-agent generator, seeded from the agent's ChaCha stream. Small state
/// keeps thousands of them cache resident.
pub type AgentRng = Xoshiro256PlusPlus;

pub fn agent_rng(seed: u64, agent: usize) -> AgentRng {
    AgentRng::from_rng(&mut substream(seed, AGENT_STREAM_BASE + agent as u64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub profile: Profile,
    pub state: Action,
    pub cash: f64,
    pub shares: u64,
}

impl Agent {
    pub fn wealth(&self, index: f64) -> f64 {
        self.cash + self.shares as f64 * index
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub history: Vec<f64>,
}

impl MarketState {
    pub fn new(initial: f64) -> Self {
        Self {
            history: vec![initial],
        }
    }

    pub fn index(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }

    /// Number of completed steps.
    pub fn t(&self) -> usize {
        self.history.len() - 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub executed_buys: usize,
    pub executed_sells: usize,
    pub holds: usize,
    pub forced_holds: usize,
}

impl ExecutionReport {
    pub fn net(&self) -> i64 {
        self.executed_buys as i64 - self.executed_sells as i64
    }

    pub fn total(&self) -> usize {
        self.executed_buys + self.executed_sells + self.holds + self.forced_holds
    }
}

/// Applies one intended action per agent at price `index`. Orders that the
/// agent cannot fund or cover become forced holds. Each agent's state is set
/// to what it actually did.
pub fn execute(agents: &mut [Agent], actions: &[Action], index: f64) -> ExecutionReport {
    assert_eq!(agents.len(), actions.len(), "one action per agent");
    let mut report = ExecutionReport::default();
    for (agent, &action) in agents.iter_mut().zip(actions) {
        agent.state = match action {
            Action::Buy if agent.cash >= index => {
                agent.cash -= index;
                agent.shares += 1;
                report.executed_buys += 1;
                Action::Buy
            }
            Action::Sell if agent.shares >= 1 => {
                agent.cash += index;
                agent.shares -= 1;
                report.executed_sells += 1;
                Action::Sell
            }
            Action::Hold => {
                report.holds += 1;
                Action::Hold
            }
            Action::Buy | Action::Sell => {
                report.forced_holds += 1;
                Action::Hold
            }
        };
    }
    report
}

/// `index * (1 + clamp(k * net / n, -0.5, 0.5))`.
pub fn update_index(index: f64, net: i64, n: usize, k: f64) -> f64 {
    if n == 0 {
        return index;
    }
    let rel = (k * net as f64 / n as f64).clamp(-MAX_INDEX_MOVE, MAX_INDEX_MOVE);
    index * (1.0 + rel)
}

/// One post-warm-up per-agent wealth return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub step: u32,
    pub agent: u32,
    pub r: f32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Momentum patterns outside the 18 tabulated rows.
    pub unlisted_patterns: u64,
    pub executed_buys: u64,
    pub executed_sells: u64,
    pub forced_holds: u64,
    /// Broken bookkeeping checks; must stay 0.
    pub invariant_violations: u64,
    /// Trend row counts A..R over the momentum phase.
    pub row_counts: [u64; 18],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub id: usize,
    pub profile: Profile,
    pub degree: usize,
    pub cash: f64,
    pub shares: u64,
    pub wealth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub config: SimulationConfig,
    pub network_checksum: u64,
    pub hub: Option<usize>,
    pub index: Vec<f64>,
    pub agents: Vec<AgentSummary>,
    /// Per agent, wealth after each step (initial value first), when enabled.
    pub wealth_history: Option<Vec<Vec<f64>>>,
    /// Per profile (see [`Profile::index`]), every post-warm-up return.
    pub return_stats: [RunningStats; 3],
    /// Thinned post-warm-up returns, see `return_sample_stride`.
    pub return_samples: Vec<ReturnSample>,
    pub diagnostics: Diagnostics,
}

impl SimulationOutput {
    pub fn wealth_stats(&self) -> [Option<ProfileStats>; 3] {
        analysis::profile_wealth_stats(self.agents.iter().map(|a| (a.profile, a.wealth)))
    }

    pub fn mean_wealth(&self, profile: Profile) -> Option<f64> {
        self.wealth_stats()[profile.index()].map(|s| s.mean)
    }

    pub fn hub_wealth(&self) -> Option<f64> {
        self.hub.map(|h| self.agents[h].wealth)
    }

    /// Sampled returns of agents with `profile`.
    pub fn sampled_returns(&self, profile: Profile) -> Vec<f64> {
        self.return_samples
            .iter()
            .filter(|s| self.agents[s.agent as usize].profile == profile)
            .map(|s| f64::from(s.r))
            .collect()
    }
}

/// A running simulation: network, agents, market and random streams.
pub struct World {
    config: SimulationConfig,
    network: Arc<TrustNetwork>,
    table: ProbabilityTable,
    agents: Vec<Agent>,
    profiles: Vec<Profile>,
    market: MarketState,
    agent_rngs: Vec<AgentRng>,
    states: Vec<Action>,
    actions: Vec<Action>,
    prev_wealth: Vec<f64>,
    wealth_history: Option<Vec<Vec<f64>>>,
    return_stats: [RunningStats; 3],
    return_samples: Vec<ReturnSample>,
    diagnostics: Diagnostics,
}

impl World {
    /// Builds the network from the seed's network stream and sets up agents.
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let network = Arc::new(build_network(&config)?);
        Self::with_network(config, network)
    }

    /// Uses an existing network, which must have `config.n_agents` nodes.
    ///
    /// Profiles and initial states come from the seed's market stream, so two
    /// worlds with the same seed and population differ only in the knobs
    /// that do not touch setup (probability, case, hub override...).
    pub fn with_network(config: SimulationConfig, network: Arc<TrustNetwork>) -> Result<Self> {
        config.validate()?;
        if network.n() != config.n_agents {
            return Err(Error::Config(vec![format!(
                "n_agents: network has {} nodes, config says {}",
                network.n(),
                config.n_agents
            )]));
        }
        let table = match &config.table_file {
            Some(path) => {
                let t = ProbabilityTable::parse(&std::fs::read_to_string(path)?)?;
                if let Some(missing) = TrendRow::ALL.iter().find(|r| t.get(**r).is_none()) {
                    return Err(Error::TableMiss(*missing));
                }
                t
            }
            None => ProbabilityTable::builtin(config.case_id),
        };

        let n = config.n_agents;
        let mut setup = substream(config.seed, MARKET_STREAM);
        let counts = config.profile_mix.counts(n);
        let mut profiles: Vec<Profile> = Profile::ALL
            .iter()
            .zip(counts)
            .flat_map(|(&p, c)| std::iter::repeat_n(p, c))
            .collect();
        profiles.shuffle(&mut setup);
        let states: Vec<Action> = (0..n)
            .map(|_| Action::ALL[setup.random_range(0..3)])
            .collect();
        if let (Some(p), Some(hub)) = (config.hub_profile_override, network.hub()) {
            profiles[hub] = p;
        }

        let agents: Vec<Agent> = (0..n)
            .map(|id| Agent {
                id,
                profile: profiles[id],
                state: states[id],
                cash: config.init_cash,
                shares: config.init_shares,
            })
            .collect();
        let agent_rngs = (0..n).map(|i| agent_rng(config.seed, i)).collect();
        let market = MarketState::new(config.init_index);
        let prev_wealth: Vec<f64> = agents.iter().map(|a| a.wealth(market.index())).collect();
        let wealth_history = config.record_wealth_history.then(|| {
            prev_wealth
                .iter()
                .map(|&w| {
                    let mut v = Vec::with_capacity(config.steps + 1);
                    v.push(w);
                    v
                })
                .collect()
        });

        Ok(Self {
            config,
            network,
            table,
            agents,
            profiles,
            market,
            agent_rngs,
            states,
            actions: Vec::with_capacity(n),
            prev_wealth,
            wealth_history,
            return_stats: Default::default(),
            return_samples: Vec::new(),
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn network(&self) -> &Arc<TrustNetwork> {
        &self.network
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn market(&self) -> &MarketState {
        &self.market
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn set_profile(&mut self, id: usize, profile: Profile) {
        self.agents[id].profile = profile;
        self.profiles[id] = profile;
    }

    /// Rotates the profile of every listed agent one notch.
    pub fn rotate_profiles(&mut self, ids: &[usize]) {
        for &id in ids {
            let next = self.profiles[id].rotated();
            self.set_profile(id, next);
        }
    }

    pub fn is_finished(&self) -> bool {
        self.market.t() >= self.config.steps
    }

    /// Decide, execute, move the index, account wealth.
    pub fn step(&mut self) -> Result<ExecutionReport> {
        let t = self.market.t() + 1;
        let signal = if t > self.config.warmup {
            let mom = compute_momentum(&self.market.history, t)?;
            let class = classify_trend(&mom);
            if !class.listed {
                self.diagnostics.unlisted_patterns += 1;
            }
            self.diagnostics.row_counts[class.row.index()] += 1;
            Some(MomentumSignal {
                probs: lookup_probs(&self.table, class.row)?,
            })
        } else {
            None
        };

        let decision = DecisionConfig {
            follow_probability: self.config.follow_probability,
            algorithm: self.config.algorithm,
            random_neighborhood: self.config.random_neighborhood,
            random_follows_momentum: self.config.random_follows_momentum,
        };
        decide_all(
            &self.profiles,
            &self.states,
            &self.network,
            signal.as_ref(),
            &decision,
            &mut self.agent_rngs,
            &mut self.actions,
        );

        let price = self.market.index();
        let shares_before: u64 = self.agents.iter().map(|a| a.shares).sum();
        let report = execute(&mut self.agents, &self.actions, price);
        let shares_after: u64 = self.agents.iter().map(|a| a.shares).sum();
        if shares_after as i64 - shares_before as i64 != report.net()
            || report.total() != self.agents.len()
        {
            self.diagnostics.invariant_violations += 1;
        }
        for (slot, agent) in self.states.iter_mut().zip(&self.agents) {
            *slot = agent.state;
        }

        let next = update_index(price, report.net(), self.agents.len(), self.config.index_k);
        if !(next.is_finite() && next > 0.0) {
            self.diagnostics.invariant_violations += 1;
        }
        self.market.history.push(next);

        self.diagnostics.executed_buys += report.executed_buys as u64;
        self.diagnostics.executed_sells += report.executed_sells as u64;
        self.diagnostics.forced_holds += report.forced_holds as u64;

        let post_warmup = t > self.config.warmup;
        let sample = post_warmup && (t - self.config.warmup - 1) % self.config.return_sample_stride == 0;
        for (i, agent) in self.agents.iter().enumerate() {
            if !(agent.cash >= 0.0 && agent.cash.is_finite()) {
                self.diagnostics.invariant_violations += 1;
            }
            let w = agent.wealth(next);
            if let Some(hist) = &mut self.wealth_history {
                hist[i].push(w);
            }
            let prev = self.prev_wealth[i];
            if post_warmup && prev > 0.0 {
                let r = (w - prev) / prev;
                self.return_stats[agent.profile.index()].push(r);
                if sample {
                    self.return_samples.push(ReturnSample {
                        step: t as u32,
                        agent: i as u32,
                        r: r as f32,
                    });
                }
            }
            self.prev_wealth[i] = w;
        }
        Ok(report)
    }

    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    pub fn into_output(self) -> SimulationOutput {
        let index = self.market.index();
        let agents = self
            .agents
            .iter()
            .map(|a| AgentSummary {
                id: a.id,
                profile: a.profile,
                degree: self.network.degree(a.id),
                cash: a.cash,
                shares: a.shares,
                wealth: a.wealth(index),
            })
            .collect();
        SimulationOutput {
            network_checksum: self.network.checksum(),
            hub: self.network.hub(),
            config: self.config,
            index: self.market.history,
            agents,
            wealth_history: self.wealth_history,
            return_stats: self.return_stats,
            return_samples: self.return_samples,
            diagnostics: self.diagnostics,
        }
    }
}

/// The seed's network realization for `config`.
pub fn build_network(config: &SimulationConfig) -> Result<TrustNetwork> {
    let mut rng = substream(config.seed, NETWORK_STREAM);
    TrustNetwork::generate_ba_with_isolated(
        config.n_agents,
        config.ba_m,
        config.isolated_fraction,
        &mut rng,
    )
}

/// Builds a world from `config` and runs it to completion.
pub fn run(config: &SimulationConfig) -> Result<SimulationOutput> {
    let mut world = World::new(config.clone())?;
    world.run_to_end()?;
    Ok(world.into_output())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(cash: f64, shares: u64) -> Agent {
        Agent {
            id: 0,
            profile: Profile::Imitator,
            state: Action::Hold,
            cash,
            shares,
        }
    }

    #[test]
    fn buy_without_cash_is_forced_hold() {
        let mut a = [agent(50.0, 0)];
        let r = execute(&mut a, &[Action::Buy], 100.0);
        assert_eq!(r.forced_holds, 1);
        assert_eq!(a[0].cash, 50.0);
        assert_eq!(a[0].state, Action::Hold);
    }

    #[test]
    fn sell_without_shares_is_forced_hold() {
        let mut a = [agent(50.0, 0)];
        let r = execute(&mut a, &[Action::Sell], 100.0);
        assert_eq!(r.forced_holds, 1);
        assert_eq!(a[0].shares, 0);
    }

    #[test]
    fn sell_moves_one_share() {
        let mut a = [agent(10_000.0, 100)];
        let r = execute(&mut a, &[Action::Sell], 100.0);
        assert_eq!(r.executed_sells, 1);
        assert_eq!((a[0].cash, a[0].shares), (10_100.0, 99));
        assert_eq!(a[0].state, Action::Sell);
    }

    #[test]
    fn exact_cash_can_buy() {
        let mut a = [agent(100.0, 0)];
        execute(&mut a, &[Action::Buy], 100.0);
        assert_eq!((a[0].cash, a[0].shares), (0.0, 1));
    }

    #[test]
    fn index_update_rule() {
        assert_eq!(update_index(100.0, 0, 50, 0.1), 100.0);
        assert!((update_index(100.0, 50, 50, 0.1) - 110.0).abs() < 1e-12);
        assert!((update_index(100.0, -50, 50, 0.1) - 90.0).abs() < 1e-12);
        // clamp
        assert!((update_index(100.0, 50, 50, 10.0) - 150.0).abs() < 1e-12);
        assert!((update_index(100.0, -50, 50, 10.0) - 50.0).abs() < 1e-12);
        assert_eq!(update_index(100.0, 7, 50, 0.0), 100.0);
    }

    #[test]
    fn substreams_differ() {
        let a: u64 = substream(1, 2).random();
        let b: u64 = substream(1, 3).random();
        let c: u64 = substream(1, 2).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            n_agents: 300,
            ba_m: 4,
            steps: 400,
            warmup: 100,
            seed: 3,
            return_sample_stride: 1,
            record_wealth_history: true,
            ..Default::default()
        }
    }

    #[test]
    fn zero_steps_is_initial_state() {
        let out = run(&SimulationConfig { steps: 0, ..small_config() }).unwrap();
        assert_eq!(out.index, vec![100.0]);
        assert!(out.agents.iter().all(|a| a.wealth == 20_000.0));
        assert!(out.return_samples.is_empty());
    }

    #[test]
    fn bookkeeping_over_a_run() {
        let out = run(&small_config()).unwrap();
        assert_eq!(out.index.len(), 401);
        assert_eq!(out.diagnostics.invariant_violations, 0);
        let hist = out.wealth_history.as_ref().unwrap();
        for a in &out.agents {
            assert_eq!(hist[a.id].len(), 401);
            let w = a.cash + a.shares as f64 * out.index[400];
            assert_eq!(a.wealth, w);
            assert_eq!(hist[a.id][400], w);
        }
        let total_shares: u64 = out.agents.iter().map(|a| a.shares).sum();
        let flow = out.diagnostics.executed_buys as i64 - out.diagnostics.executed_sells as i64;
        assert_eq!(total_shares as i64, 300 * 100 + flow);
        assert!(out.index.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn same_seed_same_world() {
        let a = run(&small_config()).unwrap();
        let b = run(&small_config()).unwrap();
        assert_eq!(a, b);
        let c = run(&SimulationConfig { seed: 4, ..small_config() }).unwrap();
        assert_ne!(a.index, c.index);
    }

    #[test]
    fn zero_sensitivity_freezes_wealth() {
        let out = run(&SimulationConfig { index_k: 0.0, ..small_config() }).unwrap();
        assert!(out.index.iter().all(|&x| x == 100.0));
        assert!(out.agents.iter().all(|a| a.wealth == 20_000.0));
        assert!(out.return_samples.iter().all(|s| s.r == 0.0));
    }

    #[test]
    fn hub_override_changes_only_the_hub() {
        let base = World::new(small_config()).unwrap();
        let over = World::new(SimulationConfig {
            hub_profile_override: Some(Profile::AntiImitator),
            ..small_config()
        })
        .unwrap();
        let hub = base.network().hub().unwrap();
        for (a, b) in base.agents().iter().zip(over.agents()) {
            if a.id == hub {
                assert_eq!(b.profile, Profile::AntiImitator);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn all_hold_leaves_market_unchanged() {
        let mut agents = vec![agent(10.0, 3), agent(0.0, 0)];
        let r = execute(&mut agents, &[Action::Hold, Action::Hold], 100.0);
        assert_eq!(r.net(), 0);
        assert_eq!(update_index(100.0, r.net(), 2, 0.1), 100.0);
        assert_eq!(agents[0].wealth(100.0), 310.0);
    }
}
