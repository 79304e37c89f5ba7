//! Periodic CNN guidance: forward pass on a traffic observation, then the
//! same policy driving on+PIBT.

use guided_lmapf::policy::{cnn_forward, Arch, GuidancePolicy, TrafficObservation};
use guided_lmapf::sim::{run_simulation, Algorithm, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> guided_lmapf::Result<()> {
    let arch = Arch::cnn();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta: Vec<f64> = (0..arch.num_params()).map(|_| rng.random_range(-0.3..0.3)).collect();
    let policy = GuidancePolicy::new(arch, theta)?;
    println!("cnn parameters: {}", policy.num_params());

    let mut obs = TrafficObservation::zeros(16, 16);
    for (i, x) in obs.edge_usage.iter_mut().enumerate() {
        *x = (i % 7) as f64;
    }
    obs.task_map[8 * 16 + 8] = 1.0;
    let w = cnn_forward(&policy, &obs)?;
    let (lo, hi) = w.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    println!("weight tensor {:?}, range [{lo:.4}, {hi:.4}]", w.shape());

    let cfg = ExperimentConfig::new("empty-32-32", Algorithm::OnPibt, 80, 400, 1).with_policy(policy);
    let r = run_simulation(&cfg)?;
    println!("on+pibt throughput {:.3} after {} guidance updates", r.throughput, r.guidance_updates);
    Ok(())
}
