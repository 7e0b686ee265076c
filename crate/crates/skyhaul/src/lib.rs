//! System-level simulator for UAV-carried mmWave base stations with
//! integrated access and backhaul.
//!
//! The crate models an uplink mmWave network: clustered pedestrian UEs move
//! under a group-mobility model, ground APs and flying UAV base stations
//! serve them over directional 73 GHz links, UAV cells relay traffic to a
//! donor AP over a separate backhaul channel, and a particle-swarm optimizer
//! repositions the UAVs on the fly. Three operating regimes differ in where
//! the finite backhaul rate is honored:
//!
//! * `Ideal`: backhaul is infinite everywhere.
//! * `BackhaulUnaware`: delivery is backhaul-limited but the optimizer
//!   assumes infinite backhaul.
//! * `BackhaulAware`: both delivery and the optimizer honor the limit.
//!
//! Everything is deterministic per `(scenario, seed)`: random streams are
//! ChaCha8 substreams derived from the run seed, and all queue accounting is
//! exact u64 bytes.

pub mod access;
pub mod channel;
pub mod engine;
pub mod mobility;
pub mod placement;
pub mod report;
mod rng;
pub mod scenario;

pub use engine::{run, run_batch, AggregateSummary, NetworkState, RunResult, Simulation};
pub use scenario::{load_scenario, validate_scenario, Mode, Placement, Scenario};
