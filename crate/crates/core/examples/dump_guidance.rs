//! Final guidance graph and guide paths of a run, as CSV and JSON lines.

use guided_lmapf::policy::{Arch, GuidancePolicy};
use guided_lmapf::sim::{run_simulation, Algorithm, ExperimentConfig};

fn main() -> guided_lmapf::Result<()> {
    let cfg = ExperimentConfig::new("empty-8-8", Algorithm::POnGpibt, 6, 60, 3).with_policy(GuidancePolicy::zeros(Arch::cnn()));
    let r = run_simulation(&cfg)?;
    let g = r.final_guidance.as_ref().expect("always set");
    let csv = g.to_csv();
    println!("guidance version {}, {} edges", g.version(), csv.lines().count() - 1);
    for line in csv.lines().take(5) {
        println!("  {line}");
    }
    for line in r.guide_paths_jsonl.as_deref().unwrap_or_default().lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
