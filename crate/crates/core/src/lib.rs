//! Shielded frontier exploration on procedurally generated trunk maps.
//!
//! An agent moves on an occupancy grid, senses with a 360° LiDAR, and
//! proposes one of eight moves from a graph observation. A safety shield
//! replaces infeasible proposals with the closest feasible move. Rewards
//! combine newly explored cells with a frontier potential field. Policies
//! are two-layer GATv2 networks loaded from a weight file, or simple
//! baselines. An environment server exposes reset/step over a line
//! protocol so an external trainer can drive episodes.

pub mod config;
pub mod episode;
pub mod error;
pub mod frontier;
pub mod graph;
pub mod grid;
pub mod gridworld;
pub mod harness;
pub mod num;
pub mod policy;
pub mod protocol;
pub mod reward;
pub mod sensing;
pub mod shield;

pub use config::EnvConfig;
pub use episode::{Episode, EpisodeRecord, Observation, StepRecord, Termination};
pub use grid::{Action, ActionSet, Cell, CellState};
pub use num::Real;

/// Observation graph with `f64` features, as produced by the engine.
pub type Graph = graph::ExplorationGraph<f64>;
pub type Graph32 = graph::ExplorationGraph<f32>;
pub type Weights = policy::PolicyWeights<f64>;
pub type Weights32 = policy::PolicyWeights<f32>;
pub type Rewards = reward::RewardTerms<f64>;
pub type Frontier = frontier::Frontier<f64>;
