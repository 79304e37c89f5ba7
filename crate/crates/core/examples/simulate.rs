//! One lifelong simulation per variant on a bundled map.

use guided_lmapf::policy::{Arch, GuidancePolicy};
use guided_lmapf::sim::{run_simulation, Algorithm, ExperimentConfig};

fn main() -> guided_lmapf::Result<()> {
    for algo in Algorithm::ALL {
        let mut cfg = ExperimentConfig::new("random-32-32", algo, 100, 500, 7);
        cfg.policy = match algo {
            Algorithm::OnPibt | Algorithm::POnGpibt => Some(GuidancePolicy::zeros(Arch::cnn())),
            Algorithm::OnGpibt => Some(GuidancePolicy::zeros(Arch::windowed_quadratic())),
            _ => None,
        };
        let r = run_simulation(&cfg)?;
        println!(
            "{:<14} throughput {:.3}  goals {:>4}  conflicts {}  {:.2} ms/step",
            r.algorithm,
            r.throughput,
            r.goals_finished,
            r.conflicts_detected,
            1e3 * r.mean_step_wallclock
        );
    }
    Ok(())
}
