//! Stall detection on the per-step completion series, and the cells where
//! agents waited most.

use guided_lmapf::sim::{deadlock_monitor, run_simulation, wait_hotspots, Algorithm, ExperimentConfig};

fn main() -> guided_lmapf::Result<()> {
    let cfg = ExperimentConfig::new("warehouse-33-57", Algorithm::OffPibt, 500, 800, 5);
    let r = run_simulation(&cfg)?;
    let d = deadlock_monitor(&r.finished_per_step, 50);
    println!("throughput {:.3}, stalled {}, flagged at {:?}", r.throughput, d.stalled, d.flagged_at);
    for (c, n) in wait_hotspots(&r, 5) {
        println!("  ({:>2}, {:>2}) waited {n}", c.row, c.col);
    }

    let mut series = vec![1u64; 500];
    series.extend(std::iter::repeat_n(0, 400));
    println!("synthetic stall flagged at {:?}", deadlock_monitor(&series, 20).flagged_at);
    Ok(())
}
