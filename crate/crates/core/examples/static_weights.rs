//! Offline guidance as one free parameter per edge.

use guided_lmapf::maps::load_map;
use guided_lmapf::optimize::arch_for;
use guided_lmapf::policy::GuidancePolicy;
use guided_lmapf::sim::{run_simulation_on, Algorithm, ExperimentConfig};
use guided_lmapf::Direction;

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("empty-16-16")?;
    let arch = arch_for(Algorithm::OffGpibt, &map, None)?;
    // make every leftward move expensive
    let graph = guided_lmapf::GuidanceGraph::uniform(map.clone(), false);
    let mut theta = Vec::with_capacity(arch.num_params());
    for (i, &ok) in graph.validity_mask().iter().enumerate() {
        if ok {
            theta.push(if i / map.num_cells() == Direction::Left.index() { 3.0 } else { -1.0 });
        }
    }
    let policy = GuidancePolicy::new(arch, theta)?;
    for p in [None, Some(policy)] {
        let mut cfg = ExperimentConfig::new("empty-16-16", Algorithm::OffGpibt, 40, 500, 4);
        let label = if p.is_some() { "left-averse" } else { "uniform" };
        cfg.policy = p;
        let r = run_simulation_on(map.clone(), &cfg)?;
        println!("{label:<12} throughput {:.3}", r.throughput);
    }
    Ok(())
}
