use std::path::PathBuf;

use thiserror::Error;

use crate::grid::{Coord, Direction};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("map header: {0}")]
    MapHeader(String),
    #[error("map row {row}: expected {expected} cells, found {found}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("map row {row}, col {col}: unknown cell character {ch:?}")]
    UnknownCell { row: usize, col: usize, ch: char },
    #[error("map body has {found} rows, header declares {expected}")]
    RowCount { expected: usize, found: usize },
    #[error("free region is disconnected ({reached} of {free} free cells reachable)")]
    Disconnected { reached: usize, free: usize },
    #[error("map has no traversable cells")]
    EmptyMap,
    #[error("{0:?} is out of bounds or an obstacle")]
    InvalidCell(Coord),
    #[error("no guidance edge from {0:?} in direction {1:?}")]
    InvalidEdge(Coord, Direction),
    #[error("weight tensor shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },
    #[error("non-positive weight {value} on edge ({dir:?}, {row}, {col})")]
    NonPositiveWeight { dir: Direction, row: usize, col: usize, value: f64 },
    #[error("heuristic tree built for guidance version {tree}, graph is at {graph}")]
    StaleTree { tree: u64, graph: u64 },
    #[error("no eligible goal cells")]
    EmptyEligibleSet,
    #[error("center resampling requested at t={t}, not a multiple of {interval}")]
    NotResampleStep { t: usize, interval: usize },
    #[error("window size must be odd, got {0}")]
    EvenWindow(usize),
    #[error("policy architecture mismatch: expected {expected}, got {got}")]
    WrongArch { expected: String, got: String },
    #[error("policy parameter count mismatch: expected {expected}, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("goal {goal:?} unreachable from {start:?}")]
    Unreachable { start: Coord, goal: Coord },
    #[error("evaluation budget exhausted ({used} of {budget})")]
    BudgetExhausted { used: usize, budget: usize },
    #[error("step size must be positive and finite, got {0}")]
    InvalidStepSize(f64),
    #[error("candidate/fitness count mismatch: {candidates} candidates, {fitnesses} fitnesses")]
    BatchMismatch { candidates: usize, fitnesses: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trajectory validation failed: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
