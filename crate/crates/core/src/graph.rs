//! Exploration graph observation: one agent node, eight navigation nodes
//! (one per action, in action order) and one node per frontier cell.
//!
//! Edges are directed `(src, dst)` pairs; a node aggregates messages from
//! the sources of its incoming edges. The agent and each navigation node are
//! linked both ways, navigation nodes within Chebyshev distance 1 are linked
//! both ways, and each frontier sends one edge to its nearest navigation node.

use serde::{Deserialize, Serialize};

use crate::frontier::FrontierSet;
use crate::grid::{Action, ActionSet, Cell, CellState};
use crate::gridworld::AgentMap;
use crate::num::Real;

pub const FEATURE_DIM: usize = 8;
pub const AGENT_ID: usize = 0;
/// Agent plus the eight navigation nodes.
pub const CORE_NODES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Agent,
    NavFeasible,
    NavInfeasible,
    Frontier,
}

impl NodeClass {
    pub fn slot(self) -> usize {
        match self {
            NodeClass::Agent => 0,
            NodeClass::NavFeasible => 1,
            NodeClass::NavInfeasible => 2,
            NodeClass::Frontier => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub id: usize,
    pub class: NodeClass,
    pub cell: Cell,
    pub features: [T; FEATURE_DIM],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub src: usize,
    pub dst: usize,
    pub weight: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationGraph<T> {
    pub nodes: Vec<Node<T>>,
    pub edges: Vec<Edge<T>>,
}

impl<T: Real> ExplorationGraph<T> {
    pub fn agent(&self) -> &Node<T> {
        &self.nodes[AGENT_ID]
    }

    /// Node id of the navigation node for `action`.
    pub fn nav_id(action: Action) -> usize {
        1 + action.index()
    }

    pub fn nav_nodes(&self) -> &[Node<T>] {
        &self.nodes[1..CORE_NODES]
    }

    pub fn frontier_nodes(&self) -> &[Node<T>] {
        &self.nodes[CORE_NODES..]
    }

    pub fn feature_matrix(&self) -> Vec<Vec<T>> {
        self.nodes.iter().map(|n| n.features.to_vec()).collect()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e.src, e.dst)).collect()
    }
}

/// Class one-hot in slots 0..4, then the free, unknown, occupied and
/// frontier counts of the `k×k` window divided by `k²`. Positions outside
/// the map count as occupied.
pub fn node_features<T: Real>(
    agent_map: &AgentMap,
    cell: Cell,
    class: NodeClass,
    frontiers: &FrontierSet,
    k: usize,
) -> [T; FEATURE_DIM] {
    let half = (k / 2) as i32;
    let (mut free, mut unknown, mut occupied, mut frontier) = (0usize, 0usize, 0usize, 0usize);
    for dr in -half..=half {
        for dc in -half..=half {
            let c = cell.offset(dr, dc);
            match agent_map.state(c) {
                Some(CellState::Free) => free += 1,
                Some(CellState::Unknown) => unknown += 1,
                Some(CellState::Occupied) | None => occupied += 1,
            }
            if frontiers.contains(c) {
                frontier += 1;
            }
        }
    }
    let area = T::count(k * k);
    let mut features = [T::zero(); FEATURE_DIM];
    features[class.slot()] = T::one();
    features[4] = T::count(free) / area;
    features[5] = T::count(unknown) / area;
    features[6] = T::count(occupied) / area;
    features[7] = T::count(frontier) / area;
    features
}

pub fn build_graph<T: Real>(
    agent_map: &AgentMap,
    agent_pos: Cell,
    frontiers: &FrontierSet,
    feasible: ActionSet,
    k: usize,
) -> ExplorationGraph<T> {
    build_graph_capped(agent_map, agent_pos, frontiers, feasible, k, None)
}

/// As [`build_graph`], optionally keeping only the `cap` frontiers nearest
/// to the agent (ties in row-major order).
pub fn build_graph_capped<T: Real>(
    agent_map: &AgentMap,
    agent_pos: Cell,
    frontiers: &FrontierSet,
    feasible: ActionSet,
    k: usize,
    cap: Option<usize>,
) -> ExplorationGraph<T> {
    let mut frontier_cells: Vec<Cell> = frontiers.cells().to_vec();
    if let Some(cap) = cap {
        if frontier_cells.len() > cap {
            frontier_cells.sort_by_key(|c| (c.distance_sq(agent_pos), *c));
            frontier_cells.truncate(cap);
            frontier_cells.sort();
        }
    }

    let mut nodes = Vec::with_capacity(CORE_NODES + frontier_cells.len());
    let mut push = |class: NodeClass, cell: Cell| {
        let id = nodes.len();
        nodes.push(Node { id, class, cell, features: node_features(agent_map, cell, class, frontiers, k) });
    };
    push(NodeClass::Agent, agent_pos);
    for action in Action::ALL {
        let class = if feasible.contains(action) {
            NodeClass::NavFeasible
        } else {
            NodeClass::NavInfeasible
        };
        push(class, agent_pos.step(action));
    }
    for &f in &frontier_cells {
        push(NodeClass::Frontier, f);
    }

    let dist = |a: Cell, b: Cell| T::lit(a.distance(b));
    let nav_cells: Vec<Cell> = Action::ALL.iter().map(|a| agent_pos.step(*a)).collect();
    let mut edges = Vec::with_capacity(16 + 24 + frontier_cells.len());
    for (i, &nav) in nav_cells.iter().enumerate() {
        let w = dist(agent_pos, nav);
        edges.push(Edge { src: AGENT_ID, dst: 1 + i, weight: w });
        edges.push(Edge { src: 1 + i, dst: AGENT_ID, weight: w });
    }
    for i in 0..8 {
        for j in i + 1..8 {
            if nav_cells[i].chebyshev(nav_cells[j]) <= 1 {
                let w = dist(nav_cells[i], nav_cells[j]);
                edges.push(Edge { src: 1 + i, dst: 1 + j, weight: w });
                edges.push(Edge { src: 1 + j, dst: 1 + i, weight: w });
            }
        }
    }
    for (n, &f) in frontier_cells.iter().enumerate() {
        // strict `<` keeps the lowest action index on ties
        let mut best = 0;
        for i in 1..8 {
            if f.distance_sq(nav_cells[i]) < f.distance_sq(nav_cells[best]) {
                best = i;
            }
        }
        edges.push(Edge { src: CORE_NODES + n, dst: 1 + best, weight: dist(f, nav_cells[best]) });
    }
    ExplorationGraph { nodes, edges }
}
