//! Feasible action set and projection of proposed actions onto it.

use serde::{Deserialize, Serialize};

use crate::gridworld::AgentMap;
use crate::grid::{Action, ActionSet, Cell};

/// What the shield lets through: a move, or staying put when nothing is
/// feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Executed {
    Move(Action),
    Stay,
}

impl Executed {
    pub fn action(self) -> Option<Action> {
        match self {
            Executed::Move(a) => Some(a),
            Executed::Stay => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShieldOutcome {
    pub proposed: Action,
    pub executed: Executed,
    pub intervened: bool,
    pub feasible: ActionSet,
}

/// An action is feasible iff its target is in bounds and known free, and
/// for diagonals both orthogonally adjacent cells are known free too.
/// Unknown cells are never feasible.
pub fn feasible_actions(agent_map: &AgentMap, pos: Cell) -> ActionSet {
    Action::ALL.into_iter().filter(|&a| can_move(agent_map, pos, a)).collect()
}

/// Single-move form of the feasibility rule.
pub fn can_move(agent_map: &AgentMap, pos: Cell, action: Action) -> bool {
    agent_map.is_free(pos.step(action))
        && action.orthogonal_parts().map_or(true, |(x, y)| {
            agent_map.is_free(pos.step(x)) && agent_map.is_free(pos.step(y))
        })
}

/// Angular distance between headings, in degrees within `[0, 180]`.
pub fn angular_distance(a: Action, b: Action) -> f64 {
    let d = (a.angle_deg() - b.angle_deg()).abs();
    d.min(360.0 - d)
}

pub fn shield(proposed: Action, feasible: ActionSet) -> ShieldOutcome {
    if feasible.contains(proposed) {
        return ShieldOutcome {
            proposed,
            executed: Executed::Move(proposed),
            intervened: false,
            feasible,
        };
    }
    // `min_by` keeps the first minimum, so ties go to the lowest index.
    let executed = feasible
        .iter()
        .min_by(|a, b| angular_distance(proposed, *a).total_cmp(&angular_distance(proposed, *b)))
        .map_or(Executed::Stay, Executed::Move);
    ShieldOutcome { proposed, executed, intervened: true, feasible }
}

/// Compact form of an outcome for logs and the wire protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShieldSummary {
    pub proposed: usize,
    pub executed: Option<usize>,
    pub intervened: bool,
}

impl From<&ShieldOutcome> for ShieldSummary {
    fn from(o: &ShieldOutcome) -> Self {
        Self {
            proposed: o.proposed.index(),
            executed: o.executed.action().map(Action::index),
            intervened: o.intervened,
        }
    }
}
