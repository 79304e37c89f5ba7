//! Maps shipped with the crate, addressable by name.

use std::path::Path;
use std::sync::Arc;

use crate::error::Result;
use crate::grid::GridMap;

const BUNDLED: &[(&str, &str)] = &[
    ("empty-8-8", include_str!("../maps/empty-8-8.map")),
    ("empty-16-16", include_str!("../maps/empty-16-16.map")),
    ("empty-32-32", include_str!("../maps/empty-32-32.map")),
    ("random-32-32", include_str!("../maps/random-32-32.map")),
    ("warehouse-33-57", include_str!("../maps/warehouse-33-57.map")),
    ("sortation-33-57", include_str!("../maps/sortation-33-57.map")),
];

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(name, _)| *name)
}

pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Resolves a bundled map name first, then falls back to a filesystem path.
pub fn load_map(name_or_path: &str) -> Result<Arc<GridMap>> {
    let name = name_or_path.strip_suffix(".map").unwrap_or(name_or_path);
    if let Some(text) = bundled_text(name) {
        return GridMap::parse(text).map(Arc::new);
    }
    GridMap::load(Path::new(name_or_path)).map(Arc::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CellKind;

    #[test]
    fn all_bundled_maps_parse() {
        for name in bundled_names() {
            let m = load_map(name).unwrap();
            assert!(m.free_count() > 0, "{name}");
        }
    }

    #[test]
    fn warehouse_free_cells() {
        let m = load_map("warehouse-33-57").unwrap();
        assert_eq!((m.height(), m.width()), (33, 57));
        assert_eq!(m.free_count(), 1091);
        assert!(m.is_warehouse());
        assert!(!m.cells_of_kind(CellKind::Endpoint).is_empty());
    }

    #[test]
    fn bundled_bodies_round_trip() {
        for name in bundled_names() {
            let text = bundled_text(name).unwrap();
            let body = text.split_once("map\n").unwrap().1;
            assert_eq!(load_map(name).unwrap().body_string(), body, "{name}");
        }
    }
}
