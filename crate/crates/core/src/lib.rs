//! Agent-based stock market on a scale-free trust network.
//!
//! Investors with an imitator, anti-imitator or random-trader profile mix a
//! neighborhood decision with a momentum technical-analysis signal. The crate
//! covers network generation ([`network`]), the momentum signal ([`signal`]),
//! decision rules ([`decision`]), the market engine ([`market`]), statistics
//! ([`analysis`]) and experiment orchestration ([`experiments`]).

pub mod analysis;
pub mod decision;
pub mod error;
pub mod experiments;
pub mod market;
pub mod network;
pub mod output;
pub mod signal;

pub use decision::{Algorithm, Profile};
pub use error::{Error, Result};
pub use experiments::SimulationConfig;
pub use market::{run, SimulationOutput, World};
pub use network::TrustNetwork;
pub use signal::{Action, CaseId, ProbabilityTable};
