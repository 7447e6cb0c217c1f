//! Trust-modulated tabular reinforcement learning, plus the three
//! multi-agent environments it is exercised in: a descending food platform
//! shared down a tower, a regenerating-resource grid, and the iterated
//! prisoner's dilemma.
//!
//! The learner ([`agent::EtlAgent`]) couples a one-step TD value table
//! with a scalar trust state driven by per-step support/dissatisfaction
//! signals. Trust penalizes environment-rated greedy actions during
//! greedy selection, and trust volatility drives the exploration rate.
//! Comparison policies live in [`baselines`].
//!
//! Everything is deterministic given a seed: randomness flows only
//! through explicitly passed [`rng::RngStream`] values.

pub mod agent;
pub mod baselines;
pub mod exploration;
pub mod grid;
pub mod ipd;
pub mod memory;
pub mod qtable;
pub mod rng;
pub mod signals;
pub mod sim;
pub mod tower;
pub mod trust;

pub use agent::{trace_csv, EtlAgent, EtlParams, TraceRow};
pub use rng::RngStream;
pub use sim::{run_episode, Environment, EpisodeMetrics, Policy, StateKey, Transition};
