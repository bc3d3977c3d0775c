//! Joint coordination of a group of EV charging stations.
//!
//! The crate simulates a fleet of charging stations as a Markov decision
//! process over an aggregate, fleet-size-independent state (a matrix of EV
//! counts by remaining charge and remaining connection time), learns charging
//! policies from batches of recorded transitions with fitted Q-iteration, and
//! scores them against business-as-usual charging and a perfect-foresight
//! optimal schedule.
//!
//! Main areas:
//! - [`session`] / [`synth`]: charging-session ingestion, episodic
//!   preprocessing, duplication-based scaling, and a seeded synthetic
//!   session generator.
//! - [`state`], [`action`], [`dynamics`], [`cost`]: the MDP itself.
//! - [`regressor`], [`mlp`], [`fqi`]: batch experience collection and fitted
//!   Q-iteration with an exact table or a small feed-forward network.
//! - [`baselines`]: business-as-usual rollouts, a convex-cost flow solver for
//!   the offline optimum, and an exact dynamic-programming oracle for tiny
//!   instances.
//! - [`evaluation`]: normalized-cost metrics and the training-span, monthly,
//!   and fleet-scale studies.
//!
//! Everything is deterministic given seeds; with the default `parallel`
//! feature the data-parallel loops fan out over rayon without changing any
//! result.

pub mod action;
pub mod baselines;
pub mod config;
pub mod cost;
pub mod dynamics;
pub mod episode;
pub mod error;
pub mod evaluation;
mod exec;
pub mod flow;
pub mod fqi;
pub mod mlp;
pub mod regressor;
pub mod seeds;
pub mod session;
pub mod state;
pub mod synth;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use action::{count_actions, enumerate_actions, ActionCount, ActionVector};
pub use config::{FleetConfig, EPISODE_START_HOUR};
pub use cost::{cost_of, penalty_weight};
pub use dynamics::apply_action;
pub use episode::{rollout, ArrivalSchedule, Trajectory, Transition};
pub use error::{Error, Result};
pub use session::{
    duplicate_sessions, episodize, load_sessions, load_sessions_path, select_top_stations,
    write_sessions, EpisodeDay, Episodized, PreprocessSummary, Session,
};
pub use state::{bin_sessions, diagonal_totals, AggregateState, DiagonalTotals, EvDemand};
pub use synth::{generate_synthetic, ArrivalProfile};
