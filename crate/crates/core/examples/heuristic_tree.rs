//! Lazy reverse-Dijkstra distances on a weighted guidance graph.

use guided_lmapf::heuristics::HeuristicTree;
use guided_lmapf::maps::load_map;
use guided_lmapf::{Coord, Direction, GuidanceGraph};

fn main() -> guided_lmapf::Result<()> {
    let map = load_map("random-32-32")?;
    let mut g = GuidanceGraph::uniform(map.clone(), true);
    for r in 0..map.height() {
        let c = Coord::new(r, 16);
        if map.is_traversable(c) && map.is_traversable(Coord::new(r, 17)) {
            g.set_weight(c, Direction::Right, 10.0)?;
        }
    }
    let goal = map.traversable_cells()[map.free_count() - 1];
    let mut tree = HeuristicTree::new(&g, goal);
    let near = map.traversable_cells()[map.free_count() - 40];
    println!("near: {:.1} after {} expansions", tree.distance(&g, near)?, tree.expansions());
    let far = map.traversable_cells()[0];
    println!("far:  {:.1} after {} expansions", tree.distance(&g, far)?, tree.expansions());
    Ok(())
}
