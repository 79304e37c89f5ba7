//! Windowed-quadratic edge costs around a cell crossed by two opposing
//! guide paths.

use std::sync::Arc;

use guided_lmapf::gpibt::{GuidePaths, WeightSource};
use guided_lmapf::maps::load_map;
use guided_lmapf::policy::{windowed_observation, wq_costs, Arch, GuidancePolicy};
use guided_lmapf::{Coord, Direction, GuidanceGraph};

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("empty-16-16")?;
    let uniform = GuidanceGraph::uniform(Arc::clone(&map), false);
    let mut paths = GuidePaths::new(&map, 2);
    let (a, b) = (map.index(Coord::new(8, 2)), map.index(Coord::new(8, 13)));
    paths.replan(&map, &WeightSource::Static(&uniform), 0, a, b, 0)?;
    paths.replan(&map, &WeightSource::Static(&uniform), 1, b, a, 0)?;

    // penalize opposing horizontal flow on the edge just left of the center
    let arch = Arch::windowed_quadratic();
    let mut theta = vec![0.0; arch.num_params()];
    let per = theta.len() / 4;
    for o in [Direction::Right, Direction::Left] {
        theta[o.index() * per + 100 + 2 * 4 + 1] = 5.0;
    }
    let policy = GuidancePolicy::new(arch, theta)?;
    let win = windowed_observation(paths.usage(), Coord::new(8, 7), 5)?;
    println!("costs R/U/L/D at (8,7): {:?}", wq_costs(&policy, &win)?);
    let quiet = windowed_observation(paths.usage(), Coord::new(2, 2), 5)?;
    println!("costs R/U/L/D at (2,2): {:?}", wq_costs(&policy, &quiet)?);
    Ok(())
}
