//! Parsing `.map` text: cell kinds, connectivity and the errors a bad
//! file produces.

use guided_lmapf::maps::{bundled_names, load_map};
use guided_lmapf::{CellKind, GridMap};

fn main() {
    for name in bundled_names() {
        let m = load_map(name).unwrap();
        println!(
            "{name:<16} {}x{}  free {:>4}  endpoints {:>3}  workstations {:>3}",
            m.height(),
            m.width(),
            m.free_count(),
            m.cells_of_kind(CellKind::Endpoint).len(),
            m.cells_of_kind(CellKind::Workstation).len()
        );
    }
    let bad = [
        "type octile\nheight 2\nwidth 3\nmap\n...\n..\n",
        "type octile\nheight 2\nwidth 3\nmap\n.@.\n.@.\n",
        "type octile\nheight 1\nwidth 3\nmap\n.x.\n",
    ];
    for text in bad {
        println!("rejected: {}", GridMap::parse(text).unwrap_err());
    }
}
