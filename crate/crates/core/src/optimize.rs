//! Policy optimization: CMA-ES over policy parameters with simulated
//! throughput as fitness.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::warn;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cmaes::CmaState;
use crate::error::{Error, Result};
use crate::grid::GridMap;
use crate::guidance::GuidanceGraph;
use crate::maps::load_map;
use crate::policy::{Arch, GuidancePolicy};
use crate::seeding;
use crate::sim::{run_simulation_on, Algorithm, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Total candidate evaluations.
    pub evaluations: usize,
    /// Candidates per generation.
    pub batch: usize,
    /// Simulations per candidate.
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub arch: Arch,
    pub sim: ExperimentConfig,
    pub budget: Budget,
    pub seed: u64,
    pub sigma0: f64,
    /// Evaluate every candidate on the same replicate seeds.
    #[serde(default)]
    pub common_seeds: bool,
    #[serde(default)]
    pub serial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u64,
    pub evals_used: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_ever: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: GuidancePolicy,
    pub best_fitness: f64,
    pub history: Vec<GenerationRecord>,
}

impl OptimizeResult {
    pub fn history_csv(&self) -> String {
        let mut out = String::from("generation,evals_used,best_fitness,mean_fitness,best_ever,sigma\n");
        for h in &self.history {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                h.generation, h.evals_used, h.best_fitness, h.mean_fitness, h.best_ever, h.sigma
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    config: OptimizeConfig,
    state: CmaState,
    best: Option<(Vec<f64>, f64)>,
    history: Vec<GenerationRecord>,
}

/// Architecture whose parameters a given algorithm optimizes; static
/// weights are sized from the map.
pub fn arch_for(algorithm: Algorithm, map: &Arc<GridMap>, requested: Option<Arch>) -> Result<Arch> {
    match algorithm {
        Algorithm::OffPibt | Algorithm::OffGpibt => {
            Ok(Arch::static_weights_for(&GuidanceGraph::uniform(map.clone(), !algorithm.is_gpibt())))
        }
        Algorithm::OnPibt | Algorithm::POnGpibt => Ok(requested.unwrap_or_else(Arch::cnn)),
        Algorithm::OnGpibt => Ok(requested.unwrap_or_else(Arch::windowed_quadratic)),
        Algorithm::HmGpibt => Err(Error::Config("hm+gpibt has no parameters to optimize".into())),
    }
}

/// Simulation seeds for one candidate.
pub fn candidate_seeds(master: u64, generation: u64, candidate: usize, replicates: usize, common: bool) -> Vec<u64> {
    (0..replicates as u64)
        .map(|r| {
            if common {
                seeding::derive(master, &[seeding::EVAL, r])
            } else {
                seeding::derive(master, &[seeding::EVAL, generation, candidate as u64, r])
            }
        })
        .collect()
}

/// Mean throughput of `theta` over the given seeds; failures yield NaN.
pub fn evaluate_candidate(map: &Arc<GridMap>, sim: &ExperimentConfig, arch: &Arch, theta: &[f64], seeds: &[u64]) -> f64 {
    let policy = match GuidancePolicy::new(arch.clone(), theta.to_vec()) {
        Ok(p) => p,
        Err(e) => {
            warn!("candidate rejected: {e}");
            return f64::NAN;
        }
    };
    let mut total = 0.0;
    for &seed in seeds {
        let cfg = ExperimentConfig { seed, policy: Some(policy.clone()), ..sim.clone() };
        match run_simulation_on(map.clone(), &cfg) {
            Ok(r) if r.conflicts_detected == 0 => total += r.throughput,
            Ok(r) => {
                warn!("seed {seed}: {} conflicts", r.conflicts_detected);
                return f64::NAN;
            }
            Err(e) => {
                warn!("seed {seed}: {e}");
                return f64::NAN;
            }
        }
    }
    total / seeds.len() as f64
}

/// Runs CMA-ES until the evaluation budget is spent. With a checkpoint
/// path the state is saved after every generation and resumed from if the
/// file already exists.
pub fn optimize_policy(cfg: &OptimizeConfig, checkpoint: Option<&Path>) -> Result<OptimizeResult> {
    let map = load_map(&cfg.sim.map)?;
    let b = cfg.budget;
    if b.evaluations == 0 || b.batch == 0 || b.replicates == 0 {
        return Err(Error::Config("budget entries must be positive".into()));
    }
    let dim = cfg.arch.num_params();
    if dim == 0 {
        return Err(Error::Config(format!("{} has no parameters", cfg.arch.name())));
    }
    // reject mismatches before spending any evaluations
    let probe = ExperimentConfig { policy: Some(GuidancePolicy::zeros(cfg.arch.clone())), ..cfg.sim.clone() };
    probe.validate(&map)?;

    let (mut state, mut best, mut history) = match checkpoint.filter(|p| p.exists()) {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let ck: Checkpoint = serde_json::from_str(&text)?;
            if ck.config != *cfg {
                return Err(Error::Config(format!("checkpoint {} belongs to a different configuration", path.display())));
            }
            (ck.state, ck.best, ck.history)
        }
        None => (CmaState::new(dim, cfg.sigma0, b.evaluations, cfg.seed)?, None, Vec::new()),
    };

    while state.remaining() > 0 {
        let cands = state.ask(b.batch)?;
        let gen = state.generation;
        let eval = |(i, c): (usize, &DVector<f64>)| {
            let seeds = candidate_seeds(cfg.seed, gen, i, b.replicates, cfg.common_seeds);
            evaluate_candidate(&map, &cfg.sim, &cfg.arch, c.as_slice(), &seeds)
        };
        let fitness: Vec<f64> = if cfg.serial {
            cands.iter().enumerate().map(eval).collect()
        } else {
            cands.par_iter().enumerate().map(eval).collect()
        };
        let mut gen_best = f64::NEG_INFINITY;
        for (i, &f) in fitness.iter().enumerate() {
            if f.is_finite() && f > gen_best {
                gen_best = f;
            }
            if f.is_finite() && best.as_ref().is_none_or(|(_, bf)| f > *bf) {
                best = Some((cands[i].as_slice().to_vec(), f));
            }
        }
        let finite: Vec<f64> = fitness.iter().copied().filter(|f| f.is_finite()).collect();
        let mean_fitness = if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 };
        state.tell(&cands, &fitness)?;
        history.push(GenerationRecord {
            generation: gen,
            evals_used: state.evals_used,
            best_fitness: gen_best,
            mean_fitness,
            best_ever: best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1),
            sigma: state.sigma,
        });
        if let Some(path) = checkpoint {
            let ck = Checkpoint { config: cfg.clone(), state: state.clone(), best: best.clone(), history: history.clone() };
            write_atomic(path, &serde_json::to_string(&ck)?)?;
        }
    }
    let (theta, best_fitness) = best.ok_or_else(|| Error::Validation("every candidate failed".into()))?;
    Ok(OptimizeResult { best: GuidancePolicy::new(cfg.arch.clone(), theta)?, best_fitness, history })
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let tmp: PathBuf = path.with_extension("tmp");
    std::fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(budget: usize, batch: usize) -> OptimizeConfig {
        let sim = ExperimentConfig::new("empty-8-8", Algorithm::OnGpibt, 6, 40, 0);
        OptimizeConfig {
            arch: Arch::ReducedQuadratic,
            sim,
            budget: Budget { evaluations: budget, batch, replicates: 1 },
            seed: 5,
            sigma0: 1.0,
            common_seeds: false,
            serial: true,
        }
    }

    #[test]
    fn budget_below_batch_is_one_generation() {
        let r = optimize_policy(&small(3, 8), None).unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0].evals_used, 3);
    }

    #[test]
    fn best_ever_monotone_and_deterministic() {
        let cfg = small(12, 4);
        let a = optimize_policy(&cfg, None).unwrap();
        assert_eq!(a.history.len(), 3);
        assert!(a.history.windows(2).all(|w| w[1].best_ever >= w[0].best_ever));
        let par = OptimizeConfig { serial: false, ..cfg };
        let b = optimize_policy(&par, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.history_csv().lines().count(), 4);
    }

    #[test]
    fn resume_from_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let ck = dir.path().join("ck.json");
        let full = optimize_policy(&small(12, 4), None).unwrap();
        // run 8 evaluations, then continue the same config to 12
        let first = OptimizeConfig { budget: Budget { evaluations: 8, ..small(12, 4).budget }, ..small(12, 4) };
        optimize_policy(&first, Some(&ck)).unwrap();
        let text = std::fs::read_to_string(&ck).unwrap();
        let mut ckv: serde_json::Value = serde_json::from_str(&text).unwrap();
        ckv["config"]["budget"]["evaluations"] = 12.into();
        ckv["state"]["budget"] = 12.into();
        std::fs::write(&ck, ckv.to_string()).unwrap();
        let resumed = optimize_policy(&small(12, 4), Some(&ck)).unwrap();
        assert_eq!(resumed, full);
    }

    #[test]
    fn seeds_are_per_candidate() {
        assert_ne!(candidate_seeds(1, 0, 0, 2, false), candidate_seeds(1, 0, 1, 2, false));
        assert_eq!(candidate_seeds(1, 0, 0, 2, true), candidate_seeds(1, 3, 4, 2, true));
        let map = load_map("empty-8-8").unwrap();
        assert_eq!(arch_for(Algorithm::OnGpibt, &map, None).unwrap().num_params(), 560);
        assert!(arch_for(Algorithm::HmGpibt, &map, None).is_err());
    }
}
