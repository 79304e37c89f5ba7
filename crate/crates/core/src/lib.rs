//! Lifelong multi-agent path finding with PIBT and Guided-PIBT, steered by
//! online guidance graphs whose edge weights come from optimizable guidance
//! policies, plus a CMA-ES optimizer that tunes those policies for
//! simulated throughput.
//!
//! The main entry points are [`sim::run_simulation`] for a single run,
//! [`sim::batch_evaluate`] for seed sweeps and [`optimize::optimize_policy`]
//! for policy training. See the crate's `examples/` directory for one
//! runnable program per capability.

pub mod cli;
pub mod cmaes;
pub mod error;
pub mod gpibt;
pub mod grid;
pub mod guidance;
pub mod heuristics;
pub mod maps;
pub mod optimize;
pub mod pibt;
pub mod policy;
pub mod seeding;
pub mod sim;
pub mod tasks;
pub mod validate;

pub use error::{Error, Result};
pub use grid::{CellKind, Coord, Direction, GridMap};
pub use guidance::{GuidanceGraph, WeightTensor, WEIGHT_FLOOR};
pub use policy::{Arch, GuidancePolicy};
pub use sim::{Algorithm, ExperimentConfig, SimulationReport};
pub use tasks::TaskDistribution;
