//! Large-neighborhood refinement of congestion-aware guide paths.

use guided_lmapf::gpibt::{lns_refine, GuidePaths, LnsParams, WeightSource};
use guided_lmapf::maps::load_map;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("random-32-32")?;
    let free = map.traversable_cells();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 150;
    let cells: Vec<usize> = sample(&mut rng, free.len(), 2 * n).into_iter().map(|i| free[i]).collect();
    let (starts, goals) = cells.split_at(n);
    let mut paths = GuidePaths::new(&map, n);
    for a in 0..n {
        paths.replan(&map, &WeightSource::Hm, a, starts[a], goals[a], 0)?;
    }
    let params = LnsParams { group_size: 10, iterations: 50, time_limit_s: 5.0 };
    let s = lns_refine(&map, &WeightSource::Hm, &mut paths, starts, goals, &params, 1, 0)?;
    println!("{} iterations, {} accepted: {:.1} -> {:.1}", s.iterations, s.accepted, s.initial_cost, s.final_cost);
    Ok(())
}
