//! Frontier detection and the frontier potential field.
//!
//! Distances are scaled by the map diagonal and gains by `k²`, both fixed
//! per map, so potentials from different steps are directly comparable.

use crate::grid::{Cell, CellState, Grid};
use crate::gridworld::AgentMap;
use crate::num::Real;

/// Known-free cells with at least one unknown 8-neighbour.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontierSet {
    cells: Vec<Cell>,
    member: Grid<bool>,
}

impl FrontierSet {
    pub fn cells(&self) -> &[Cell] {
        &self.cells
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

    /// Rebuilds a set from explicit cells (all must be in bounds).
    pub fn from_cells(height: usize, width: usize, cells: impl IntoIterator<Item = Cell>) -> Self {
        let mut member = Grid::filled(height, width, false);
        let mut list: Vec<Cell> = cells.into_iter().collect();
        list.sort();
        list.dedup();
        for &c in &list {
            member.set(c, true);
        }
        Self { cells: list, member }
    }

    /// Brings the set up to date after `changed` cells became known. Only
    /// cells in the 3×3 neighbourhood of a change can switch status.
    pub fn refresh(&mut self, agent_map: &AgentMap, changed: &[Cell]) {
        let mut dirty = false;
        for &c in changed {
            for (dr, dc) in std::iter::once((0, 0)).chain(NEIGHBOURS) {
                let cell = c.offset(dr, dc);
                let Some(was) = self.member.get(cell) else { continue };
                let now = is_frontier(agent_map, cell);
                if now != was {
                    self.member.set(cell, now);
                    dirty = true;
                }
            }
        }
        if dirty {
            self.cells = self.member.iter().filter(|&(_, m)| m).map(|(c, _)| c).collect();
        }
    }
}

const NEIGHBOURS: [(i32, i32); 8] =
    [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

pub fn is_frontier(agent_map: &AgentMap, cell: Cell) -> bool {
    agent_map.is_free(cell)
        && NEIGHBOURS.iter().any(|&(dr, dc)| agent_map.is_unknown(cell.offset(dr, dc)))
}

/// Row-major list of frontier cells. Out-of-map neighbours are not unknown.
pub fn detect_frontiers(agent_map: &AgentMap) -> FrontierSet {
    let mut member = Grid::filled(agent_map.height(), agent_map.width(), false);
    let mut cells = Vec::new();
    for (cell, state) in agent_map.grid().iter() {
        if state == CellState::Free && is_frontier(agent_map, cell) {
            member.set(cell, true);
            cells.push(cell);
        }
    }
    FrontierSet { cells, member }
}

/// Unknown cells in the `k×k` window centered on `cell`, clipped to the map.
pub fn information_gain(agent_map: &AgentMap, cell: Cell, k: usize) -> usize {
    let half = (k / 2) as i32;
    let mut count = 0;
    for dr in -half..=half {
        for dc in -half..=half {
            if agent_map.is_unknown(cell.offset(dr, dc)) {
                count += 1;
            }
        }
    }
    count
}

/// Summed-area table of unknown cells; `window` equals
/// [`information_gain`] in constant time.
pub struct UnknownCounts {
    width: usize,
    height: usize,
    /// `(h+1)×(w+1)`, entry `[r][c]` counts unknowns above and left of `(r, c)`.
    sums: Vec<u32>,
}

impl UnknownCounts {
    pub fn new(agent_map: &AgentMap) -> Self {
        let (h, w) = (agent_map.height(), agent_map.width());
        let mut sums = vec![0u32; (h + 1) * (w + 1)];
        let values = agent_map.grid().values();
        for r in 0..h {
            let mut row = 0;
            for c in 0..w {
                row += u32::from(values[r * w + c] == CellState::Unknown);
                sums[(r + 1) * (w + 1) + c + 1] = sums[r * (w + 1) + c + 1] + row;
            }
        }
        Self { width: w, height: h, sums }
    }

    /// Window counts for every cell, row-major.
    pub fn all_windows(&self, k: usize) -> Grid<u32> {
        let mut out = Grid::filled(self.height, self.width, 0);
        for cell in out.cells().collect::<Vec<_>>() {
            out.set(cell, self.window(cell, k) as u32);
        }
        out
    }

    pub fn window(&self, cell: Cell, k: usize) -> usize {
        let half = (k / 2) as i64;
        let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64) as usize;
        let r0 = clamp(i64::from(cell.row) - half, self.height);
        let r1 = clamp(i64::from(cell.row) + half + 1, self.height);
        let c0 = clamp(i64::from(cell.col) - half, self.width);
        let c1 = clamp(i64::from(cell.col) + half + 1, self.width);
        let at = |r: usize, c: usize| self.sums[r * (self.width + 1) + c];
        (at(r1, c1) + at(r0, c0) - at(r0, c1) - at(r1, c0)) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frontier<T> {
    pub cell: Cell,
    pub distance: T,
    pub gain: usize,
    pub scaled_distance: T,
    pub scaled_gain: T,
    pub potential: T,
    pub normalized: T,
}

/// Potential of a single frontier given its raw distance and gain.
pub fn frontier_potential<T: Real>(
    cell: Cell,
    distance: T,
    gain: usize,
    diagonal: T,
    k: usize,
    beta: T,
) -> Frontier<T> {
    let scaled_distance = distance / diagonal;
    let scaled_gain = T::count(gain) / T::count(k * k);
    let potential = beta * scaled_gain - scaled_distance;
    let normalized = (potential + T::one()) / (beta + T::one());
    Frontier { cell, distance, gain, scaled_distance, scaled_gain, potential, normalized }
}

pub fn map_diagonal<T: Real>(agent_map: &AgentMap) -> T {
    let h = T::count(agent_map.height());
    let w = T::count(agent_map.width());
    (h * h + w * w).sqrt()
}

pub fn frontier_potentials<T: Real>(
    agent_map: &AgentMap,
    frontiers: &FrontierSet,
    agent_pos: Cell,
    beta: T,
    k: usize,
) -> Vec<Frontier<T>> {
    let diagonal = map_diagonal::<T>(agent_map);
    let gains = UnknownCounts::new(agent_map);
    frontiers
        .cells()
        .iter()
        .map(|&f| {
            let distance = T::lit(f.distance(agent_pos));
            frontier_potential(f, distance, gains.window(f, k), diagonal, k, beta)
        })
        .collect()
}

/// Maximum normalized potential over all frontiers; zero without frontiers.
pub fn state_potential<T: Real>(
    agent_map: &AgentMap,
    frontiers: &FrontierSet,
    agent_pos: Cell,
    beta: T,
    k: usize,
) -> T {
    let gains = UnknownCounts::new(agent_map);
    let diagonal = map_diagonal::<T>(agent_map);
    state_potential_with(frontiers, agent_pos, beta, k, diagonal, |c| gains.window(c, k))
}

/// [`state_potential`] with information gain supplied by the caller.
pub fn state_potential_with<T: Real>(
    frontiers: &FrontierSet,
    agent_pos: Cell,
    beta: T,
    k: usize,
    diagonal: T,
    gain: impl Fn(Cell) -> usize,
) -> T {
    frontiers
        .cells()
        .iter()
        .map(|&f| {
            frontier_potential(f, T::lit(f.distance(agent_pos)), gain(f), diagonal, k, beta)
                .normalized
        })
        .fold(T::zero(), T::max)
}
