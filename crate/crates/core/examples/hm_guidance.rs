//! The fixed opposing-flow rule: costs for a head-on corridor flow and a
//! full hm+GPIBT run.

use guided_lmapf::gpibt::GuidePathUsage;
use guided_lmapf::maps::load_map;
use guided_lmapf::policy::hm_sum_ovc;
use guided_lmapf::sim::{run_simulation, Algorithm, ExperimentConfig};
use guided_lmapf::{Coord, Direction};

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("empty-8-8")?;
    let (u, v) = (map.index(Coord::new(3, 3)), map.index(Coord::new(3, 4)));
    for f in 0..5 {
        let mut usage = GuidePathUsage::new(&map);
        usage.set(u, Direction::Right, f);
        usage.set(v, Direction::Left, f);
        println!("flow {f} each way: cost {}", hm_sum_ovc(&usage, &map, u, Direction::Right)? + 1.0);
    }
    let r = run_simulation(&ExperimentConfig::new("random-32-32", Algorithm::HmGpibt, 150, 500, 2))?;
    println!("hm+gpibt throughput {:.3}", r.throughput);
    Ok(())
}
