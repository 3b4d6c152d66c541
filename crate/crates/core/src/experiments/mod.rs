//! Scenario orchestration: probability sweeps and profile-swap experiments.
//!
//! Every grid point of one seed reuses the same network realization and the
//! same profile/state assignment; only the overridden knobs differ. Runs are
//! independent and execute on the rayon pool, then get merged in grid order.

pub mod config;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::hurst_rs;
use crate::decision::Profile;
use crate::error::{Error, Result};
use crate::market::{build_network, SimulationOutput, World};
use crate::network::TrustNetwork;
use crate::signal::CaseId;

pub use config::{ProfileMix, SimulationConfig};

/// Outcome of one (seed, probability, hub profile) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub seed: u64,
    pub follow_probability: f64,
    pub case_id: CaseId,
    pub hub_profile: Option<Profile>,
    pub network_checksum: u64,
    pub hub: Option<usize>,
    /// Mean final wealth per profile, indexed by [`Profile::index`].
    pub mean_wealth: [Option<f64>; 3],
    pub hub_wealth: Option<f64>,
    pub hurst: Option<f64>,
    /// Set when the run failed; the other fields are then empty.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    pub fn failures(&self) -> impl Iterator<Item = &SweepRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }

    /// Seed-averaged mean wealth of `profile` at one grid point.
    pub fn seed_mean(&self, p: f64, hub: Option<Profile>, profile: Profile) -> Option<f64> {
        let vals: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.follow_probability == p && r.hub_profile == hub)
            .filter_map(|r| r.mean_wealth[profile.index()])
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "seed,follow_probability,case_id,hub_profile,network_checksum,hub,\
             mean_imitator,mean_anti_imitator,mean_random_trader,hub_wealth,hurst,error\n",
        );
        let num = |x: Option<f64>| x.map(crate::output::sig6).unwrap_or_default();
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{:016x},{},{},{},{},{},{},{}\n",
                r.seed,
                crate::output::sig6(r.follow_probability),
                r.case_id,
                r.hub_profile.map(|p| p.as_str()).unwrap_or("none"),
                r.network_checksum,
                r.hub.map(|h| h.to_string()).unwrap_or_default(),
                num(r.mean_wealth[0]),
                num(r.mean_wealth[1]),
                num(r.mean_wealth[2]),
                num(r.hub_wealth),
                num(r.hurst),
                r.error.as_deref().unwrap_or("").replace(',', ";"),
            ));
        }
        out
    }
}

fn summarize(seed: u64, config: &SimulationConfig, out: Result<SimulationOutput>) -> SweepRecord {
    let mut rec = SweepRecord {
        seed,
        follow_probability: config.follow_probability,
        case_id: config.case_id,
        hub_profile: config.hub_profile_override,
        network_checksum: 0,
        hub: None,
        mean_wealth: [None; 3],
        hub_wealth: None,
        hurst: None,
        error: None,
    };
    match out {
        Ok(out) => {
            rec.network_checksum = out.network_checksum;
            rec.hub = out.hub;
            rec.mean_wealth = out.wealth_stats().map(|s| s.map(|s| s.mean));
            rec.hub_wealth = out.hub_wealth();
            rec.hurst = hurst_rs(&out.index).ok().map(|h| h.h);
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Runs every (seed, p, hub profile) combination. An empty `hub_profiles`
/// list means "no override". Failed runs are kept as records with `error`.
pub fn run_sweep(
    base: &SimulationConfig,
    ps: &[f64],
    hub_profiles: &[Profile],
    seeds: &[u64],
) -> Result<SweepResult> {
    base.validate()?;
    let hubs: Vec<Option<Profile>> = if hub_profiles.is_empty() {
        vec![None]
    } else {
        hub_profiles.iter().copied().map(Some).collect()
    };

    let networks: Vec<(u64, Result<Arc<TrustNetwork>>)> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SimulationConfig {
                seed,
                ..base.clone()
            };
            (seed, build_network(&cfg).map(Arc::new))
        })
        .collect();

    let mut tasks = Vec::new();
    for (seed, net) in &networks {
        for &p in ps {
            for &hub in &hubs {
                let cfg = SimulationConfig {
                    seed: *seed,
                    follow_probability: p,
                    hub_profile_override: hub,
                    ..base.clone()
                };
                tasks.push((cfg, net));
            }
        }
    }

    let records = tasks
        .into_par_iter()
        .map(|(cfg, net)| {
            let out = match net {
                Ok(net) => World::with_network(cfg.clone(), Arc::clone(net)).and_then(|mut w| {
                    w.run_to_end()?;
                    Ok(w.into_output())
                }),
                Err(e) => Err(Error::InvalidParameter(e.to_string())),
            };
            summarize(cfg.seed, &cfg, out)
        })
        .collect();
    Ok(SweepResult { records })
}

/// Per-seed outcome of the hub-versus-periphery comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubPeripherySeed {
    pub seed: u64,
    pub hub: usize,
    pub hub_degree: usize,
    pub periphery: Vec<usize>,
    pub max_periphery_degree: usize,
    pub baseline_means: [Option<f64>; 3],
    pub periphery_means: [Option<f64>; 3],
    pub hub_means: [Option<f64>; 3],
    pub periphery_distance: f64,
    pub hub_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubPeripheryReport {
    pub k: usize,
    pub seeds: Vec<HubPeripherySeed>,
}

impl HubPeripheryReport {
    /// Seeds where swapping the hub moved the wealth distribution further
    /// than swapping the periphery.
    pub fn hub_dominant_count(&self) -> usize {
        self.seeds
            .iter()
            .filter(|s| s.hub_distance > s.periphery_distance)
            .count()
    }
}

/// Mean absolute difference of per-profile mean wealth, over the profiles
/// present in both runs.
pub fn wealth_distance(a: &[Option<f64>; 3], b: &[Option<f64>; 3]) -> f64 {
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).abs()))
        .collect();
    if diffs.is_empty() {
        0.0
    } else {
        diffs.iter().sum::<f64>() / diffs.len() as f64
    }
}

fn run_world(world: World) -> Result<SimulationOutput> {
    let mut world = world;
    world.run_to_end()?;
    Ok(world.into_output())
}

/// Per seed, three runs on copies of one network: the baseline, one with
/// the `k` least-connected agents' profiles rotated, one with only the hub's
/// profile rotated.
pub fn run_hub_vs_periphery(
    base: &SimulationConfig,
    k: usize,
    seeds: &[u64],
) -> Result<HubPeripheryReport> {
    base.validate()?;
    let per_seed: Vec<Result<HubPeripherySeed>> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SimulationConfig {
                seed,
                ..base.clone()
            };
            let net = Arc::new(build_network(&cfg)?);
            let periphery = net.least_connected(k)?;
            let hub = net
                .hub()
                .ok_or_else(|| Error::InvalidNetwork("empty network".into()))?;

            let baseline = World::with_network(cfg.clone(), Arc::clone(&net))?;
            let mut swapped_periphery = World::with_network(cfg.clone(), Arc::clone(&net))?;
            swapped_periphery.rotate_profiles(&periphery);
            let mut swapped_hub = World::with_network(cfg.clone(), Arc::clone(&net))?;
            if k > 0 {
                swapped_hub.rotate_profiles(&[hub]);
            }

            let outs: Vec<Result<SimulationOutput>> = [baseline, swapped_periphery, swapped_hub]
                .into_par_iter()
                .map(run_world)
                .collect();
            let mut outs = outs.into_iter();
            let mut next = || -> Result<[Option<f64>; 3]> {
                let out = outs.next().expect("three runs")?;
                Ok(out.wealth_stats().map(|s| s.map(|s| s.mean)))
            };
            let baseline_means = next()?;
            let periphery_means = next()?;
            let hub_means = next()?;
            Ok(HubPeripherySeed {
                seed,
                hub,
                hub_degree: net.degree(hub),
                max_periphery_degree: periphery.iter().map(|&i| net.degree(i)).max().unwrap_or(0),
                periphery,
                periphery_distance: wealth_distance(&baseline_means, &periphery_means),
                hub_distance: wealth_distance(&baseline_means, &hub_means),
                baseline_means,
                periphery_means,
                hub_means,
            })
        })
        .collect();
    Ok(HubPeripheryReport {
        k,
        seeds: per_seed.into_iter().collect::<Result<_>>()?,
    })
}
