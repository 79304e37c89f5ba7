//! CMA-ES over a small policy with simulated throughput as fitness, with
//! a resumable checkpoint.

use guided_lmapf::optimize::{optimize_policy, Budget, OptimizeConfig};
use guided_lmapf::policy::Arch;
use guided_lmapf::sim::{Algorithm, ExperimentConfig};

fn main() -> guided_lmapf::Result<()> {
    let cfg = OptimizeConfig {
        arch: Arch::ReducedQuadratic,
        sim: ExperimentConfig::new("empty-8-8", Algorithm::OnGpibt, 12, 200, 0),
        budget: Budget { evaluations: 60, batch: 12, replicates: 2 },
        seed: 42,
        sigma0: 1.0,
        common_seeds: false,
        serial: false,
    };
    let ck = std::env::temp_dir().join("lmapf_example_checkpoint.json");
    let _ = std::fs::remove_file(&ck);
    let r = optimize_policy(&cfg, Some(&ck))?;
    print!("{}", r.history_csv());
    println!("best fitness {:.3}", r.best_fitness);
    Ok(())
}
