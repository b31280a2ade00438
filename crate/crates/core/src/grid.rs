//! Cell coordinates, cell states, the 8-connected action set and a dense
//! row-major grid container.
//!
//! Row 0 is the top of the map; North is `row - 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Integer cell coordinate. Signed so that neighbours of border cells are
/// representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub row: i32,
    pub col: i32,
}

impl Cell {
    pub const fn new(row: i32, col: i32) -> Self {
        Self { row, col }
    }

    pub fn offset(self, d_row: i32, d_col: i32) -> Self {
        Self::new(self.row + d_row, self.col + d_col)
    }

    pub fn step(self, action: Action) -> Self {
        let (dr, dc) = action.offset();
        self.offset(dr, dc)
    }

    pub fn distance(self, other: Cell) -> f64 {
        let dr = f64::from(self.row - other.row);
        let dc = f64::from(self.col - other.col);
        (dr * dr + dc * dc).sqrt()
    }

    pub fn distance_sq(self, other: Cell) -> i64 {
        let dr = i64::from(self.row - other.row);
        let dc = i64::from(self.col - other.col);
        dr * dr + dc * dc
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.row - other.row).abs().max((self.col - other.col).abs())
    }
}

impl From<[i32; 2]> for Cell {
    fn from([row, col]: [i32; 2]) -> Self {
        Self::new(row, col)
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.row, c.col]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellState {
    Free,
    Occupied,
    Unknown,
}

/// One of the eight moves to a neighbouring cell, ordered clockwise from
/// North.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    N = 0,
    NE = 1,
    E = 2,
    SE = 3,
    S = 4,
    SW = 5,
    W = 6,
    NW = 7,
}

impl Action {
    pub const COUNT: usize = 8;
    pub const ALL: [Action; 8] = [
        Action::N,
        Action::NE,
        Action::E,
        Action::SE,
        Action::S,
        Action::SW,
        Action::W,
        Action::NW,
    ];

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(d_row, d_col)` displacement.
    pub fn offset(self) -> (i32, i32) {
        match self {
            Action::N => (-1, 0),
            Action::NE => (-1, 1),
            Action::E => (0, 1),
            Action::SE => (1, 1),
            Action::S => (1, 0),
            Action::SW => (1, -1),
            Action::W => (0, -1),
            Action::NW => (-1, -1),
        }
    }

    /// Heading in degrees, clockwise from North.
    pub fn angle_deg(self) -> f64 {
        45.0 * self.index() as f64
    }

    pub fn is_diagonal(self) -> bool {
        self.index() % 2 == 1
    }

    /// The two orthogonal moves a diagonal move passes between.
    pub fn orthogonal_parts(self) -> Option<(Action, Action)> {
        self.is_diagonal()
            .then(|| (Self::ALL[self.index() - 1], Self::ALL[(self.index() + 1) % 8]))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Fixed-size set of actions, bit `i` set iff action `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const FULL: ActionSet = ActionSet(0xff);

    pub fn contains(self, action: Action) -> bool {
        self.0 & (1 << action.index()) != 0
    }

    pub fn insert(&mut self, action: Action) {
        self.0 |= 1 << action.index();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    pub fn to_mask(self) -> [bool; 8] {
        Action::ALL.map(|a| self.contains(a))
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

/// Dense row-major grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(height: usize, width: usize, value: T) -> Self {
        Self { height, width, data: vec![value; height * width] }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row >= 0
            && cell.col >= 0
            && (cell.row as usize) < self.height
            && (cell.col as usize) < self.width
    }

    fn index(&self, cell: Cell) -> Option<usize> {
        self.in_bounds(cell)
            .then(|| cell.row as usize * self.width + cell.col as usize)
    }

    pub fn get(&self, cell: Cell) -> Option<T> {
        self.index(cell).map(|i| self.data[i])
    }

    /// Panics when `cell` is out of bounds.
    pub fn set(&mut self, cell: Cell, value: T) {
        let i = self.index(cell).unwrap_or_else(|| panic!("cell {cell} out of bounds"));
        self.data[i] = value;
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        (0..self.data.len()).map(move |i| Cell::new((i / w) as i32, (i % w) as i32))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, T)> + '_ {
        self.cells().zip(self.data.iter().copied())
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }
}
