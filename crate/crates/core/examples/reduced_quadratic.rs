//! The 48-parameter generalization of the opposing-flow rule, checked
//! against the fixed rule on a random usage field.

use guided_lmapf::gpibt::GuidePathUsage;
use guided_lmapf::maps::load_map;
use guided_lmapf::policy::{hm_reproducing_theta, hm_sum_ovc, reduced_forward, Arch, GuidancePolicy, REDUCED_PARAMS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("random-32-32")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut usage = GuidePathUsage::new(&map);
    for v in map.traversable_cells() {
        for (d, _) in map.moves(v).collect::<Vec<_>>() {
            usage.set(v, d, rng.random_range(0..4));
        }
    }
    let p = GuidancePolicy::new(Arch::ReducedQuadratic, hm_reproducing_theta())?;
    let mut max_diff: f64 = 0.0;
    for v in map.traversable_cells() {
        for (d, _) in map.moves(v).collect::<Vec<_>>() {
            max_diff = max_diff.max((reduced_forward(&p, &usage, &map, v, d)? - hm_sum_ovc(&usage, &map, v, d)?).abs());
        }
    }
    println!("{REDUCED_PARAMS} parameters, max |reduced - hm| = {max_diff}");
    Ok(())
}
