use thiserror::Error;

use crate::grid::Cell;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config io: {0}")]
    Io(String),
    #[error("config parse: {0}")]
    Parse(String),
    #[error("unsupported config version {0}")]
    Version(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("degenerate map config: {0}")]
    Degenerate(String),
    #[error("map has no free cell")]
    NoFreeCell,
    #[error("action {action} from {from} is infeasible")]
    InfeasibleAction { from: Cell, action: usize },
    #[error("cell {0} is out of bounds")]
    OutOfBounds(Cell),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensingError {
    #[error("scan origin {0} is not a free cell")]
    BlockedOrigin(Cell),
    #[error("bad scan parameters: {0}")]
    BadParameters(String),
    #[error("observed cell {0} is out of bounds")]
    OutOfBounds(Cell),
    #[error("sensing contradiction at {0}: known state flipped")]
    Contradiction(Cell),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GnnError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("edge ({src}, {dst}) references a node outside 0..{nodes}")]
    BadEdge { src: usize, dst: usize, nodes: usize },
    #[error("non-finite output at node {node}")]
    NonFinite { node: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightsError {
    #[error("weight file io: {0}")]
    Io(String),
    #[error("weight file parse: {0}")]
    Parse(String),
    #[error("unsupported weight format version {0}")]
    Version(u64),
    #[error("missing tensor {0}")]
    MissingTensor(String),
    #[error("unexpected tensor {0}")]
    UnexpectedTensor(String),
    #[error("tensor {name}: expected shape {expected:?}, found {found:?}")]
    Shape { name: String, expected: Vec<usize>, found: Vec<usize> },
    #[error("tensor {name}: shape {shape:?} needs {expected} values, found {found}")]
    Length { name: String, shape: Vec<usize>, expected: usize, found: usize },
    #[error("tensor {name}: non-finite value at index {index}")]
    NonFinite { name: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpisodeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error("episode already finished")]
    Finished,
}
