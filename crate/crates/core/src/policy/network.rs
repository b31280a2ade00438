//! Two-layer GATv2 policy and critic over the exploration graph.
//!
//! Layer 1: 8 → 16 per head, 4 heads concatenated, ReLU.
//! Layer 2: 64 → 1, single head, no activation.
//! The policy reads the layer-2 scalars of the eight navigation nodes as
//! action logits. The critic mean-pools the scalars of the agent and
//! navigation nodes and applies an affine head.

use rand::Rng;

use crate::error::GnnError;
use crate::graph::{ExplorationGraph, CORE_NODES, FEATURE_DIM};
use crate::num::Real;
use crate::policy::gat::{gatv2_layer, softmax, Activation, HeadParams, Matrix};

pub const LAYER1_HEADS: usize = 4;
pub const LAYER1_OUT: usize = 16;
pub const HIDDEN_DIM: usize = LAYER1_HEADS * LAYER1_OUT;

#[derive(Debug, Clone, PartialEq)]
pub struct GatNetwork<T> {
    pub layer1: Vec<HeadParams<T>>,
    pub layer2: HeadParams<T>,
}

impl<T: Real> GatNetwork<T> {
    pub fn zeros() -> Self {
        Self {
            layer1: (0..LAYER1_HEADS).map(|_| HeadParams::zeros(LAYER1_OUT, FEATURE_DIM)).collect(),
            layer2: HeadParams::zeros(1, HIDDEN_DIM),
        }
    }

    /// Glorot-uniform matrices and attention vectors, zero biases.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            Matrix::from_vec(
                rows,
                cols,
                (0..rows * cols).map(|_| T::lit(rng.gen_range(-limit..limit))).collect(),
            )
        };
        let mut head = |out_dim: usize, in_dim: usize| {
            let theta_s = glorot(out_dim, in_dim);
            let theta_t = glorot(out_dim, in_dim);
            let att = glorot(1, out_dim).data;
            HeadParams { theta_s, theta_t, att, bias: vec![T::zero(); out_dim] }
        };
        let layer1 = (0..LAYER1_HEADS).map(|_| head(LAYER1_OUT, FEATURE_DIM)).collect();
        let layer2 = head(1, HIDDEN_DIM);
        Self { layer1, layer2 }
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U + Copy) -> GatNetwork<U> {
        GatNetwork {
            layer1: self.layer1.iter().map(|h| h.map(f)).collect(),
            layer2: self.layer2.map(f),
        }
    }

    /// Layer-2 scalar for every node.
    pub fn node_scores(
        &self,
        features: &[Vec<T>],
        edges: &[(usize, usize)],
    ) -> Result<Vec<T>, GnnError> {
        let hidden = gatv2_layer(features, edges, &self.layer1, true, Activation::Relu)?;
        let out = gatv2_layer(
            &hidden,
            edges,
            std::slice::from_ref(&self.layer2),
            false,
            Activation::Identity,
        )?;
        Ok(out.into_iter().map(|v| v[0]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticNetwork<T> {
    pub gnn: GatNetwork<T>,
    pub fc_weight: T,
    pub fc_bias: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyWeights<T> {
    pub policy: GatNetwork<T>,
    pub critic: CriticNetwork<T>,
}

impl<T: Real> PolicyWeights<T> {
    pub fn zeros() -> Self {
        Self {
            policy: GatNetwork::zeros(),
            critic: CriticNetwork { gnn: GatNetwork::zeros(), fc_weight: T::zero(), fc_bias: T::zero() },
        }
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let policy = GatNetwork::random(rng);
        let gnn = GatNetwork::random(rng);
        let fc_weight = T::lit(rng.gen_range(-1.0..1.0));
        Self { policy, critic: CriticNetwork { gnn, fc_weight, fc_bias: T::zero() } }
    }

    pub fn cast<U: Real>(&self) -> PolicyWeights<U> {
        let f = |v: T| U::lit(v.to_f64_lossy());
        PolicyWeights {
            policy: self.policy.map(f),
            critic: CriticNetwork {
                gnn: self.critic.gnn.map(f),
                fc_weight: f(self.critic.fc_weight),
                fc_bias: f(self.critic.fc_bias),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput<T> {
    pub logits: [T; 8],
    pub probabilities: [T; 8],
    pub greedy_action: usize,
}

impl<T: Real> PolicyOutput<T> {
    pub fn from_logits(logits: [T; 8]) -> Self {
        let p = softmax(&logits);
        let probabilities = std::array::from_fn(|i| p[i]);
        let mut greedy_action = 0;
        for i in 1..8 {
            if logits[i] > logits[greedy_action] {
                greedy_action = i;
            }
        }
        Self { logits, probabilities, greedy_action }
    }
}

fn check_graph<T: Real>(graph: &ExplorationGraph<T>) -> Result<(), GnnError> {
    if graph.nodes.len() < CORE_NODES {
        return Err(GnnError::Dimension(format!(
            "graph has {} nodes, need at least {CORE_NODES}",
            graph.nodes.len()
        )));
    }
    Ok(())
}

pub fn policy_forward<T: Real>(
    graph: &ExplorationGraph<T>,
    weights: &PolicyWeights<T>,
) -> Result<PolicyOutput<T>, GnnError> {
    check_graph(graph)?;
    let scores = weights.policy.node_scores(&graph.feature_matrix(), &graph.edge_pairs())?;
    Ok(PolicyOutput::from_logits(std::array::from_fn(|i| scores[1 + i])))
}

pub fn critic_forward<T: Real>(
    graph: &ExplorationGraph<T>,
    weights: &PolicyWeights<T>,
) -> Result<T, GnnError> {
    check_graph(graph)?;
    let critic = &weights.critic;
    let scores = critic.gnn.node_scores(&graph.feature_matrix(), &graph.edge_pairs())?;
    let pooled = scores[..CORE_NODES].iter().copied().fold(T::zero(), |a, b| a + b)
        / T::count(CORE_NODES);
    Ok(critic.fc_weight * pooled + critic.fc_bias)
}
