//! Lifelong goal generation.
//!
//! Static distributions sample goals uniformly from the eligible cells.
//! Dynamic distributions draw from an explicit categorical pmf whose
//! unnormalized mass at cell `c` is `sum_k exp(-|c - mu_k|^2 / (2 sigma^2))`,
//! with all `K` centers resampled every `interval` timesteps. On warehouse
//! maps goals alternate between endpoints and workstations; only endpoint
//! goals follow the Gaussian, workstation goals stay uniform.

use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CellKind, GridMap};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterDomain {
    EndpointsOnly,
    AnyFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskDistribution {
    StaticUniform,
    DynamicGaussian {
        sigma: f64,
        modes: usize,
        interval: usize,
        center_domain: CenterDomain,
    },
}

impl TaskDistribution {
    /// The dynamic setting used for each map family: a single endpoint-centred
    /// Gaussian (sigma 1) on warehouse-style maps, three modes anywhere
    /// (sigma 0.5) otherwise; centers move every 200 steps.
    pub fn dynamic_for(map: &GridMap) -> Self {
        if map.is_warehouse() {
            TaskDistribution::DynamicGaussian {
                sigma: 1.0,
                modes: 1,
                interval: 200,
                center_domain: CenterDomain::EndpointsOnly,
            }
        } else {
            TaskDistribution::DynamicGaussian {
                sigma: 0.5,
                modes: 3,
                interval: 200,
                center_domain: CenterDomain::AnyFree,
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let TaskDistribution::DynamicGaussian { sigma, modes, interval, .. } = *self {
            if !(sigma > 0.0 && sigma.is_finite()) || modes == 0 || interval == 0 {
                return Err(Error::Config(format!(
                    "dynamic task distribution needs sigma > 0, modes > 0, interval > 0 (got {sigma}, {modes}, {interval})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    ToEndpoint,
    ToWorkstation,
    Unphased,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTaskState {
    pub agent_id: usize,
    pub current_goal: usize,
    pub phase: Phase,
    pub goals_finished: u64,
}

/// Cumulative mass over a list of cells.
#[derive(Debug, Clone)]
struct Categorical {
    cells: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Categorical {
    fn uniform(cells: Vec<usize>) -> Self {
        let cumulative = (1..=cells.len()).map(|i| i as f64).collect();
        Categorical { cells, cumulative }
    }

    fn from_weights(cells: Vec<usize>, weights: impl IntoIterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cumulative: Vec<f64> = weights
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        if acc > 0.0 && acc.is_finite() {
            Categorical { cells, cumulative }
        } else {
            Categorical::uniform(cells)
        }
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn probability(&self, i: usize) -> f64 {
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        (self.cumulative[i] - prev) / self.total()
    }

    fn sample(&self, rng: &mut impl Rng) -> Option<usize> {
        if self.cells.is_empty() {
            return None;
        }
        let u = rng.random::<f64>() * self.total();
        let i = self.cumulative.partition_point(|&c| c <= u).min(self.cells.len() - 1);
        Some(self.cells[i])
    }
}

/// Goal generator for one simulation. Each agent owns an independent
/// random stream derived from `(seed, agent_id)`.
#[derive(Debug, Clone)]
pub struct TaskSystem {
    map: Arc<GridMap>,
    dist: TaskDistribution,
    seed: u64,
    centers: Vec<usize>,
    center_rng: ChaCha8Rng,
    agent_rngs: Vec<ChaCha8Rng>,
    workstations: Categorical,
    // the pmf for endpoint goals (warehouse) or all goals (otherwise)
    main: Categorical,
    base_cells: Vec<usize>,
}

impl TaskSystem {
    pub fn new(map: Arc<GridMap>, dist: TaskDistribution, seed: u64) -> Result<Self> {
        dist.validate()?;
        let base_cells = if map.is_warehouse() {
            map.cells_of_kind(CellKind::Endpoint)
        } else {
            map.traversable_cells()
        };
        let workstations = Categorical::uniform(map.cells_of_kind(CellKind::Workstation));
        let mut sys = TaskSystem {
            main: Categorical::uniform(base_cells.clone()),
            base_cells,
            workstations,
            centers: Vec::new(),
            center_rng: seeding::stream(seed, &[seeding::CENTERS]),
            agent_rngs: Vec::new(),
            map,
            dist,
            seed,
        };
        if matches!(sys.dist, TaskDistribution::DynamicGaussian { .. }) {
            sys.resample_centers(0)?;
        }
        Ok(sys)
    }

    pub fn distribution(&self) -> &TaskDistribution {
        &self.dist
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    fn rng_for(&mut self, agent: usize) -> &mut ChaCha8Rng {
        while self.agent_rngs.len() <= agent {
            let id = self.agent_rngs.len() as u64;
            self.agent_rngs.push(seeding::stream(self.seed, &[seeding::TASKS, id]));
        }
        &mut self.agent_rngs[agent]
    }

    /// Redraws all centers. Only legal at multiples of the change interval.
    pub fn resample_centers(&mut self, t: usize) -> Result<()> {
        let TaskDistribution::DynamicGaussian { sigma, modes, interval, center_domain } = self.dist else {
            return Ok(());
        };
        if !t.is_multiple_of(interval) {
            return Err(Error::NotResampleStep { t, interval });
        }
        let domain = match center_domain {
            CenterDomain::EndpointsOnly => {
                let eps = self.map.cells_of_kind(CellKind::Endpoint);
                if eps.is_empty() {
                    self.map.traversable_cells()
                } else {
                    eps
                }
            }
            CenterDomain::AnyFree => self.map.traversable_cells(),
        };
        if domain.is_empty() {
            return Err(Error::EmptyEligibleSet);
        }
        self.centers = if modes <= domain.len() {
            sample_indices(&mut self.center_rng, domain.len(), modes).into_iter().map(|i| domain[i]).collect()
        } else {
            (0..modes).map(|_| domain[self.center_rng.random_range(0..domain.len())]).collect()
        };
        let map = &self.map;
        let centers: Vec<(f64, f64)> = self
            .centers
            .iter()
            .map(|&c| {
                let p = map.coord(c);
                (p.row as f64, p.col as f64)
            })
            .collect();
        let denom = 2.0 * sigma * sigma;
        let weights = self.base_cells.iter().map(|&v| {
            let p = map.coord(v);
            centers
                .iter()
                .map(|&(r, c)| {
                    let (dr, dc) = (p.row as f64 - r, p.col as f64 - c);
                    (-(dr * dr + dc * dc) / denom).exp()
                })
                .sum::<f64>()
        });
        self.main = Categorical::from_weights(self.base_cells.clone(), weights);
        Ok(())
    }

    /// Per-timestep hook: resamples centers at positive multiples of the
    /// change interval. Returns whether a resample happened.
    pub fn tick(&mut self, t: usize) -> Result<bool> {
        match self.dist {
            TaskDistribution::DynamicGaussian { interval, .. } if t > 0 && t.is_multiple_of(interval) => {
                self.resample_centers(t)?;
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    fn initial_phase(&self) -> Phase {
        if self.map.is_warehouse() {
            Phase::ToEndpoint
        } else {
            Phase::Unphased
        }
    }

    /// Draws a goal for the agent's current phase.
    pub fn sample_goal(&mut self, agent: usize, phase: Phase) -> Result<usize> {
        let pick = match phase {
            Phase::ToWorkstation => {
                let ws = self.workstations.clone();
                ws.sample(self.rng_for(agent))
            }
            Phase::ToEndpoint | Phase::Unphased => {
                let main = std::mem::replace(&mut self.main, Categorical::uniform(Vec::new()));
                let pick = main.sample(self.rng_for(agent));
                self.main = main;
                pick
            }
        };
        pick.ok_or(Error::EmptyEligibleSet)
    }

    pub fn init_agent(&mut self, agent: usize) -> Result<AgentTaskState> {
        let phase = self.initial_phase();
        let current_goal = self.sample_goal(agent, phase)?;
        Ok(AgentTaskState { agent_id: agent, current_goal, phase, goals_finished: 0 })
    }

    /// Marks the current goal finished, flips the phase on warehouse maps and
    /// draws the next goal.
    pub fn complete_goal(&mut self, state: &mut AgentTaskState) -> Result<()> {
        state.goals_finished += 1;
        state.phase = match state.phase {
            Phase::ToEndpoint => Phase::ToWorkstation,
            Phase::ToWorkstation => Phase::ToEndpoint,
            Phase::Unphased => Phase::Unphased,
        };
        state.current_goal = self.sample_goal(state.agent_id, state.phase)?;
        Ok(())
    }

    /// Probability of drawing `cell` as the next goal in `phase`.
    pub fn goal_probability(&self, phase: Phase, cell: usize) -> f64 {
        let cat = match phase {
            Phase::ToWorkstation => &self.workstations,
            _ => &self.main,
        };
        cat.cells.iter().position(|&c| c == cell).map_or(0.0, |i| cat.probability(i))
    }
}
