//! Mean throughput with a 95% confidence interval over many seeds.

use guided_lmapf::maps::load_map;
use guided_lmapf::sim::{batch_evaluate, Algorithm, ExperimentConfig};
use guided_lmapf::TaskDistribution;

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("empty-16-16")?;
    let seeds: Vec<u64> = (0..10).collect();
    for algo in [Algorithm::OffPibt, Algorithm::OffGpibt, Algorithm::HmGpibt] {
        let cfg = ExperimentConfig::new("empty-16-16", algo, 40, 500, 0).with_tasks(TaskDistribution::dynamic_for(&map));
        let b = batch_evaluate(&cfg, &seeds, false)?;
        println!("{:<10} {:.3} ± {:.3}  [{:.3}, {:.3}]", algo.name(), b.mean, b.std, b.ci_low, b.ci_high);
    }
    Ok(())
}
