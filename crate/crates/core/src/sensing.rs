//! Simulated 360° LiDAR over the ground truth and its integration into the
//! agent map.
//!
//! Rays start at the origin cell center and walk the grid cell by cell
//! (exact boundary crossing, so no cell a ray passes through is skipped).
//! A ray stops at the first occupied cell, at the map border, or once it has
//! travelled the sensor range. Only cells whose center lies within range
//! are reported.

use crate::error::SensingError;
use crate::grid::{Cell, CellState};
use crate::gridworld::{AgentMap, GroundTruthMap};

pub const DEFAULT_RAYS: usize = 360;

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub origin: Cell,
    pub range: f64,
    /// Sorted by cell, one entry per cell.
    pub observations: Vec<(Cell, CellState)>,
}

/// A cell entered by a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub cell: Cell,
    pub state: CellState,
    /// Ray parameter (distance from the origin center) at which the ray
    /// enters the cell; 0 for the origin.
    pub entry: f64,
}

/// Heading of ray `i` of `n`, in radians clockwise from North.
pub fn ray_heading(i: usize, n: usize) -> f64 {
    std::f64::consts::TAU * i as f64 / n as f64
}

/// Walks one ray from the center of `origin`. Returns every in-bounds cell
/// entered, in order, ending with the blocking cell if any. Cells are
/// returned regardless of whether their center is within range.
pub fn cast_ray(truth: &GroundTruthMap, origin: Cell, heading: f64, range: f64) -> Vec<RayHit> {
    let mut hits = vec![RayHit { cell: origin, state: CellState::Free, entry: 0.0 }];
    walk_offsets(heading, range, |dr, dc, entry| {
        let cell = origin.offset(dr, dc);
        let Some(state) = truth.state(cell) else { return false };
        hits.push(RayHit { cell, state, entry });
        state != CellState::Occupied
    });
    hits
}

/// Cell offsets entered by a ray on an empty unbounded plane, in order,
/// until `visit` returns false or the entry point passes `range`. The
/// origin itself is not visited.
fn walk_offsets(heading: f64, range: f64, mut visit: impl FnMut(i32, i32, f64) -> bool) {
    let d_row = -heading.cos();
    let d_col = heading.sin();
    let axis = |d: f64| -> (i32, f64, f64) {
        if d > TIE_EPS {
            (1, 0.5 / d, 1.0 / d)
        } else if d < -TIE_EPS {
            (-1, 0.5 / -d, 1.0 / -d)
        } else {
            (0, f64::INFINITY, f64::INFINITY)
        }
    };
    let (step_r, mut next_r, delta_r) = axis(d_row);
    let (step_c, mut next_c, delta_c) = axis(d_col);

    let (mut dr, mut dc) = (0, 0);
    loop {
        let entry;
        if (next_r - next_c).abs() <= TIE_EPS {
            entry = next_r;
            dr += step_r;
            dc += step_c;
            next_r += delta_r;
            next_c += delta_c;
        } else if next_r < next_c {
            entry = next_r;
            dr += step_r;
            next_r += delta_r;
        } else {
            entry = next_c;
            dc += step_c;
            next_c += delta_c;
        }
        if entry > range || !visit(dr, dc, entry) {
            return;
        }
    }
}

#[derive(Debug, Clone)]
struct FanNode {
    dr: i32,
    dc: i32,
    /// Center within range.
    record: bool,
    children: std::ops::Range<u32>,
}

/// All ray paths of a scan merged into a prefix tree of offsets from the
/// origin. Ray paths do not depend on map contents, only where they stop
/// does, so a scan is a walk of this tree pruned below occupied and
/// out-of-map cells. Node 0 is the origin.
#[derive(Debug, Clone)]
pub struct RayFan {
    range: f64,
    reach: i32,
    nodes: Vec<FanNode>,
}

impl RayFan {
    pub fn new(range: f64, rays: usize) -> Result<Self, SensingError> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(SensingError::BadParameters(format!("range must be positive, got {range}")));
        }
        if rays < 4 {
            return Err(SensingError::BadParameters(format!("need at least 4 rays, got {rays}")));
        }
        // build with per-node child lists, then lay children out contiguously
        let mut offsets = vec![(0i32, 0i32)];
        let mut kids: Vec<Vec<usize>> = vec![Vec::new()];
        for i in 0..rays {
            let mut cur = 0;
            walk_offsets(ray_heading(i, rays), range, |dr, dc, _| {
                cur = match kids[cur].iter().find(|&&k| offsets[k] == (dr, dc)) {
                    Some(&k) => k,
                    None => {
                        offsets.push((dr, dc));
                        kids.push(Vec::new());
                        let k = offsets.len() - 1;
                        kids[cur].push(k);
                        k
                    }
                };
                true
            });
        }
        let range_sq = range * range;
        let mut order = vec![0usize];
        let mut nodes = Vec::with_capacity(offsets.len());
        let mut i = 0;
        while i < order.len() {
            let old = order[i];
            let first = order.len() as u32;
            order.extend(&kids[old]);
            let (dr, dc) = offsets[old];
            nodes.push(FanNode {
                dr,
                dc,
                record: f64::from(dr * dr + dc * dc) <= range_sq,
                children: first..order.len() as u32,
            });
            i += 1;
        }
        let reach = offsets.iter().map(|&(r, c)| r.abs().max(c.abs())).max().unwrap_or(0);
        Ok(Self { range, reach, nodes })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn scan(&self, truth: &GroundTruthMap, origin: Cell) -> Result<ScanResult, SensingError> {
        if !truth.is_free(origin) {
            return Err(SensingError::BlockedOrigin(origin));
        }
        let side = (2 * self.reach + 1) as usize;
        let mut local: Vec<Option<CellState>> = vec![None; side * side];
        let slot = |dr: i32, dc: i32| (dr + self.reach) as usize * side + (dc + self.reach) as usize;
        local[slot(0, 0)] = Some(CellState::Free);
        let mut stack: Vec<u32> = self.nodes[0].children.clone().collect();
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            let Some(state) = truth.state(origin.offset(node.dr, node.dc)) else { continue };
            if node.record {
                local[slot(node.dr, node.dc)] = Some(state);
            }
            if state != CellState::Occupied {
                stack.extend(node.children.clone());
            }
        }
        // row-major over the window is sorted by cell
        let observations = local
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                let dr = (i / side) as i32 - self.reach;
                let dc = (i % side) as i32 - self.reach;
                s.map(|s| (origin.offset(dr, dc), s))
            })
            .collect();
        Ok(ScanResult { origin, range: self.range, observations })
    }
}

/// One-off scan; build a [`RayFan`] once when scanning repeatedly.
pub fn lidar_scan(
    truth: &GroundTruthMap,
    origin: Cell,
    range: f64,
    rays: usize,
) -> Result<ScanResult, SensingError> {
    RayFan::new(range, rays)?.scan(truth, origin)
}

/// Writes a scan into the agent map and returns the number of cells that
/// went from unknown to known. A known cell flipping state is a hard fault;
/// in that case the map is left untouched.
pub fn integrate_scan(agent_map: &mut AgentMap, scan: &ScanResult) -> Result<usize, SensingError> {
    integrate_scan_with(agent_map, scan, |_, _| {})
}

/// As [`integrate_scan`], calling `on_new` for every newly known cell.
pub fn integrate_scan_with(
    agent_map: &mut AgentMap,
    scan: &ScanResult,
    mut on_new: impl FnMut(Cell, CellState),
) -> Result<usize, SensingError> {
    for &(cell, state) in &scan.observations {
        match agent_map.state(cell) {
            None => return Err(SensingError::OutOfBounds(cell)),
            Some(CellState::Unknown) => {}
            Some(known) if known != state => return Err(SensingError::Contradiction(cell)),
            Some(_) => {}
        }
    }
    let mut added = 0;
    for &(cell, state) in &scan.observations {
        if agent_map.is_unknown(cell) {
            agent_map.set(cell, state);
            on_new(cell, state);
            added += 1;
        }
    }
    Ok(added)
}
