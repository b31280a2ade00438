//! Reference policies used for evaluation.

use std::collections::VecDeque;

use rand::Rng;

use crate::frontier::FrontierSet;
use crate::grid::{Action, ActionSet, Cell, Grid};
use crate::gridworld::AgentMap;
use crate::shield::can_move;

pub const UNREACHABLE: u32 = u32::MAX;

/// Number of feasible moves from each cell to the nearest frontier,
/// travelling only over known-free cells under the shield's move rule.
/// `UNREACHABLE` where no frontier can be reached.
pub fn frontier_distance_field(agent_map: &AgentMap, frontiers: &FrontierSet) -> Grid<u32> {
    distance_field_until(agent_map, frontiers, &[])
}

/// Breadth-first from all frontiers. Stops early once every cell in
/// `targets` is settled (never, if `targets` is empty); unsettled cells
/// read `UNREACHABLE`.
fn distance_field_until(agent_map: &AgentMap, frontiers: &FrontierSet, targets: &[Cell]) -> Grid<u32> {
    let mut pending = targets.iter().filter(|&&t| agent_map.is_free(t)).count();
    let is_target = |c: Cell| targets.contains(&c);
    let mut dist = Grid::filled(agent_map.height(), agent_map.width(), UNREACHABLE);
    let mut queue = VecDeque::with_capacity(frontiers.len());
    for &f in frontiers.cells() {
        dist.set(f, 0);
        queue.push_back(f);
        if is_target(f) {
            pending -= 1;
        }
    }
    while let Some(cell) = queue.pop_front() {
        if !targets.is_empty() && pending == 0 {
            break;
        }
        let next_d = dist.get(cell).expect("queued cells are in bounds") + 1;
        for action in Action::ALL {
            // the move rule is symmetric, so expanding forward from the
            // frontier gives the distance back to it
            if !can_move(agent_map, cell, action) {
                continue;
            }
            let next = cell.step(action);
            if dist.get(next) == Some(UNREACHABLE) {
                dist.set(next, next_d);
                queue.push_back(next);
                if is_target(next) {
                    pending -= 1;
                }
            }
        }
    }
    dist
}

/// Feasible action whose target cell has the smallest path distance to a
/// frontier; ties by lowest index. With no reachable frontier, the
/// lowest-index feasible action. Without feasible actions, `N` (the shield
/// then stays).
pub fn nearest_frontier(
    agent_map: &AgentMap,
    pos: Cell,
    frontiers: &FrontierSet,
    feasible: ActionSet,
) -> Action {
    let targets: Vec<Cell> = feasible.iter().map(|a| pos.step(a)).collect();
    let field = distance_field_until(agent_map, frontiers, &targets);
    pick_min(feasible, |a| field.get(pos.step(a)).map_or(u64::MAX, u64::from))
}

/// Feasible action whose target cell is closest in straight-line distance
/// to any frontier; ties by lowest index. Myopic: it oscillates in front of
/// obstacles and chases frontiers it cannot reach.
pub fn nearest_frontier_euclidean(pos: Cell, frontiers: &FrontierSet, feasible: ActionSet) -> Action {
    pick_min(feasible, |a| {
        let target = pos.step(a);
        frontiers.cells().iter().map(|f| f.distance_sq(target) as u64).min().unwrap_or(0)
    })
}

fn pick_min(feasible: ActionSet, cost: impl Fn(Action) -> u64) -> Action {
    let mut best: Option<(Action, u64)> = None;
    for action in feasible.iter() {
        let c = cost(action);
        if best.map_or(true, |(_, bc)| c < bc) {
            best = Some((action, c));
        }
    }
    best.map_or(Action::N, |(a, _)| a)
}

/// Uniform over all eight actions, feasible or not.
pub fn random_action<R: Rng>(rng: &mut R) -> Action {
    Action::ALL[rng.gen_range(0..Action::COUNT)]
}
