//! Procedural trunk maps, agent placement, move execution, coverage
//! accounting and termination.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GridError;
use crate::grid::{Action, Cell, CellState, Grid};
use crate::shield::feasible_actions;

/// Circular non-traversable region, center in continuous cell coordinates
/// (cell `(r, c)` has its center at `(r, c)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trunk {
    pub row: f64,
    pub col: f64,
    pub radius: f64,
}

impl Trunk {
    pub fn covers(&self, cell: Cell) -> bool {
        let dr = f64::from(cell.row) - self.row;
        let dc = f64::from(cell.col) - self.col;
        dr * dr + dc * dc <= self.radius * self.radius
    }
}

/// True occupancy. Cells are only ever `Free` or `Occupied`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMap {
    cells: Grid<CellState>,
    trunks: Vec<Trunk>,
}

impl GroundTruthMap {
    pub fn from_trunks(height: usize, width: usize, trunks: Vec<Trunk>) -> Self {
        let mut cells = Grid::filled(height, width, CellState::Free);
        for t in &trunks {
            let r0 = (t.row - t.radius).floor().max(0.0) as i32;
            let r1 = (t.row + t.radius).ceil().min(height as f64 - 1.0) as i32;
            let c0 = (t.col - t.radius).floor().max(0.0) as i32;
            let c1 = (t.col + t.radius).ceil().min(width as f64 - 1.0) as i32;
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let cell = Cell::new(row, col);
                    if t.covers(cell) {
                        cells.set(cell, CellState::Occupied);
                    }
                }
            }
        }
        Self { cells, trunks }
    }

    /// Builds a map from rows of `.` (free) and `#` (occupied).
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut cells = Grid::filled(height, width, CellState::Free);
        for (r, line) in rows.iter().enumerate() {
            assert_eq!(line.len(), width, "ragged ascii map");
            for (c, ch) in line.chars().enumerate() {
                let state = match ch {
                    '#' => CellState::Occupied,
                    '.' => CellState::Free,
                    other => panic!("unexpected map character {other:?}"),
                };
                cells.set(Cell::new(r as i32, c as i32), state);
            }
        }
        Self { cells, trunks: Vec::new() }
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn trunks(&self) -> &[Trunk] {
        &self.trunks
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        self.cells.in_bounds(cell)
    }

    pub fn state(&self, cell: Cell) -> Option<CellState> {
        self.cells.get(cell)
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.cells.get(cell) == Some(CellState::Free)
    }

    pub fn grid(&self) -> &Grid<CellState> {
        &self.cells
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells.iter().filter(|(_, s)| *s == CellState::Free).map(|(c, _)| c)
    }
}

/// The agent's partial knowledge of the map.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentMap {
    cells: Grid<CellState>,
    known: usize,
}

impl AgentMap {
    pub fn unknown(height: usize, width: usize) -> Self {
        Self { cells: Grid::filled(height, width, CellState::Unknown), known: 0 }
    }

    pub fn like(truth: &GroundTruthMap) -> Self {
        Self::unknown(truth.height(), truth.width())
    }

    /// Builds a map from rows of `.` (free), `#` (occupied) and `?` (unknown).
    pub fn from_ascii(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut map = Self::unknown(height, width);
        for (r, line) in rows.iter().enumerate() {
            assert_eq!(line.len(), width, "ragged ascii map");
            for (c, ch) in line.chars().enumerate() {
                let state = match ch {
                    '#' => CellState::Occupied,
                    '.' => CellState::Free,
                    '?' => CellState::Unknown,
                    other => panic!("unexpected map character {other:?}"),
                };
                map.set(Cell::new(r as i32, c as i32), state);
            }
        }
        map
    }

    pub fn height(&self) -> usize {
        self.cells.height()
    }

    pub fn width(&self) -> usize {
        self.cells.width()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        self.cells.in_bounds(cell)
    }

    /// `None` outside the map.
    pub fn state(&self, cell: Cell) -> Option<CellState> {
        self.cells.get(cell)
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.cells.get(cell) == Some(CellState::Free)
    }

    pub fn is_unknown(&self, cell: Cell) -> bool {
        self.cells.get(cell) == Some(CellState::Unknown)
    }

    /// Number of non-`Unknown` cells.
    pub fn known_count(&self) -> usize {
        self.known
    }

    /// Raw write; panics out of bounds. Keeps the known counter in sync.
    pub fn set(&mut self, cell: Cell, state: CellState) {
        let before = self.cells.get(cell).expect("cell in bounds");
        match (before == CellState::Unknown, state == CellState::Unknown) {
            (true, false) => self.known += 1,
            (false, true) => self.known -= 1,
            _ => {}
        }
        self.cells.set(cell, state);
    }

    pub fn grid(&self) -> &Grid<CellState> {
        &self.cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentState {
    pub position: Cell,
    pub steps: usize,
}

/// Free cells reachable from a start cell under the move rule of the
/// shield (8-connected, no corner cutting), evaluated on ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachableSet {
    member: Grid<bool>,
    cells: Vec<Cell>,
}

impl ReachableSet {
    pub fn flood(truth: &GroundTruthMap, start: Cell) -> Self {
        let mut member = Grid::filled(truth.height(), truth.width(), false);
        let mut cells = Vec::new();
        if !truth.is_free(start) {
            return Self { member, cells };
        }
        let mut queue = VecDeque::from([start]);
        member.set(start, true);
        while let Some(cell) = queue.pop_front() {
            cells.push(cell);
            for action in Action::ALL {
                let next = cell.step(action);
                if member.get(next) != Some(false) || !truth.is_free(next) {
                    continue;
                }
                if let Some((a, b)) = action.orthogonal_parts() {
                    if !truth.is_free(cell.step(a)) || !truth.is_free(cell.step(b)) {
                        continue;
                    }
                }
                member.set(next, true);
                queue.push_back(next);
            }
        }
        cells.sort();
        Self { member, cells }
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.member.get(cell).unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }
}

/// Samples `n_trunks` trunks uniformly over the map rectangle with radii
/// uniform in `radius_range`, then rasterizes them.
pub fn generate_map(
    seed: u64,
    height: usize,
    width: usize,
    n_trunks: usize,
    radius_range: [f64; 2],
) -> Result<GroundTruthMap, GridError> {
    if height < 8 || width < 8 {
        return Err(GridError::Degenerate(format!(
            "map must be at least 8x8, got {height}x{width}"
        )));
    }
    let [r_min, r_max] = radius_range;
    if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) {
        return Err(GridError::Degenerate(format!("bad radius range [{r_min}, {r_max}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trunks = (0..n_trunks)
        .map(|_| Trunk {
            row: rng.gen_range(-0.5..height as f64 - 0.5),
            col: rng.gen_range(-0.5..width as f64 - 0.5),
            radius: rng.gen_range(r_min..=r_max),
        })
        .collect();
    Ok(GroundTruthMap::from_trunks(height, width, trunks))
}

/// Uniform draw over the free cells of `truth`.
pub fn place_agent(truth: &GroundTruthMap, seed: u64) -> Result<AgentState, GridError> {
    let free: Vec<Cell> = truth.free_cells().collect();
    if free.is_empty() {
        return Err(GridError::NoFreeCell);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let position = free[rng.gen_range(0..free.len())];
    Ok(AgentState { position, steps: 0 })
}

/// Moves the agent one cell. The action must be feasible on the agent map.
pub fn apply_action(
    state: AgentState,
    action: Action,
    truth: &GroundTruthMap,
    agent_map: &AgentMap,
) -> Result<AgentState, GridError> {
    let target = state.position.step(action);
    if !feasible_actions(agent_map, state.position).contains(action) || !truth.is_free(target) {
        return Err(GridError::InfeasibleAction { from: state.position, action: action.index() });
    }
    Ok(AgentState { position: target, steps: state.steps + 1 })
}

/// Fraction of the reachable set the agent has observed.
pub fn exploration_ratio(agent_map: &AgentMap, reachable: &ReachableSet) -> f64 {
    if reachable.is_empty() {
        return 1.0;
    }
    let known = reachable
        .cells()
        .iter()
        .filter(|c| agent_map.state(**c).is_some_and(|s| s != CellState::Unknown))
        .count();
    known as f64 / reachable.len() as f64
}

pub fn is_terminal(coverage: f64, steps: usize, threshold: f64, max_steps: usize) -> bool {
    coverage >= threshold || steps >= max_steps
}
