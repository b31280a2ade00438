//! Action proposal: the GATv2 policy/critic, its weight file, and the
//! reference baselines.

pub mod baseline;
pub mod gat;
pub mod network;
pub mod weights;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::episode::Observation;
use crate::error::{GnnError, WeightsError};
use crate::grid::Action;

pub use network::{critic_forward, policy_forward, PolicyOutput, PolicyWeights};
pub use weights::{load_weights, parse_weights, save_weights};

/// Anything that proposes a raw (unshielded) action from an observation.
pub trait Policy {
    fn propose(&mut self, obs: &Observation) -> Result<Action, GnnError>;
}

pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn propose(&mut self, _obs: &Observation) -> Result<Action, GnnError> {
        Ok(baseline::random_action(&mut self.rng))
    }
}

/// Descends the path distance to the nearest reachable frontier.
pub struct NearestFrontierPolicy;

impl Policy for NearestFrontierPolicy {
    fn propose(&mut self, obs: &Observation) -> Result<Action, GnnError> {
        Ok(baseline::nearest_frontier(&obs.agent_map, obs.agent_cell, &obs.frontiers, obs.feasible))
    }
}

/// Straight-line variant of [`NearestFrontierPolicy`].
pub struct EuclideanFrontierPolicy;

impl Policy for EuclideanFrontierPolicy {
    fn propose(&mut self, obs: &Observation) -> Result<Action, GnnError> {
        Ok(baseline::nearest_frontier_euclidean(obs.agent_cell, &obs.frontiers, obs.feasible))
    }
}

/// Greedy (argmax) GATv2 policy.
pub struct GnnPolicy {
    weights: Arc<PolicyWeights<f64>>,
}

impl GnnPolicy {
    pub fn new(weights: Arc<PolicyWeights<f64>>) -> Self {
        Self { weights }
    }
}

impl Policy for GnnPolicy {
    fn propose(&mut self, obs: &Observation) -> Result<Action, GnnError> {
        let out = policy_forward(obs.graph(), &self.weights)?;
        Ok(Action::ALL[out.greedy_action])
    }
}

/// `random`, `frontier`, `frontier-euclid`, or `gnn:<weights path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Random,
    Frontier,
    FrontierEuclid,
    Gnn(String),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "frontier" => Ok(Self::Frontier),
            "frontier-euclid" => Ok(Self::FrontierEuclid),
            _ => match s.strip_prefix("gnn:") {
                Some(path) if !path.is_empty() => Ok(Self::Gnn(path.to_string())),
                _ => Err(format!("unknown policy {s:?}; expected random, frontier, frontier-euclid or gnn:<path>")),
            },
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random => f.write_str("random"),
            Self::Frontier => f.write_str("frontier"),
            Self::FrontierEuclid => f.write_str("frontier-euclid"),
            Self::Gnn(p) => write!(f, "gnn:{p}"),
        }
    }
}

/// A policy spec with its weights already loaded; hands out one policy
/// instance per episode.
#[derive(Clone)]
pub enum PolicyFactory {
    Random,
    Frontier,
    FrontierEuclid,
    Gnn(Arc<PolicyWeights<f64>>),
}

impl PolicyFactory {
    pub fn load(spec: &PolicySpec) -> Result<Self, WeightsError> {
        Ok(match spec {
            PolicySpec::Random => Self::Random,
            PolicySpec::Frontier => Self::Frontier,
            PolicySpec::FrontierEuclid => Self::FrontierEuclid,
            PolicySpec::Gnn(path) => Self::Gnn(Arc::new(load_weights(path)?)),
        })
    }

    /// The random policy's stream is derived from the episode seed.
    pub fn make(&self, episode_seed: u64) -> Box<dyn Policy + Send> {
        match self {
            Self::Random => Box::new(RandomPolicy::new(episode_seed ^ 0x9e37_79b9_7f4a_7c15)),
            Self::Frontier => Box::new(NearestFrontierPolicy),
            Self::FrontierEuclid => Box::new(EuclideanFrontierPolicy),
            Self::Gnn(w) => Box::new(GnnPolicy::new(Arc::clone(w))),
        }
    }
}
