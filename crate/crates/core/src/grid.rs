//! 4-connected grid maps.
//!
//! Maps use the MovingAI `.map` grammar with two extra cell codes: `E` marks
//! an endpoint and `W` a workstation. Both are traversable. Coordinates are
//! `(row, col)` with row 0 at the top.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel for "no neighbor" in the packed adjacency table.
pub const NO_CELL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub row: usize,
    pub col: usize,
}

impl Coord {
    pub const fn new(row: usize, col: usize) -> Self {
        Coord { row, col }
    }

    pub fn manhattan(self, other: Coord) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl From<(usize, usize)> for Coord {
    fn from((row, col): (usize, usize)) -> Self {
        Coord { row, col }
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Free,
    Obstacle,
    Endpoint,
    Workstation,
}

impl CellKind {
    pub fn is_traversable(self) -> bool {
        !matches!(self, CellKind::Obstacle)
    }

    fn from_char(ch: char) -> Option<Self> {
        match ch {
            '.' => Some(CellKind::Free),
            '@' | 'T' => Some(CellKind::Obstacle),
            'E' => Some(CellKind::Endpoint),
            'W' => Some(CellKind::Workstation),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            CellKind::Free => '.',
            CellKind::Obstacle => '@',
            CellKind::Endpoint => 'E',
            CellKind::Workstation => 'W',
        }
    }
}

/// Action directions. The discriminant doubles as the channel index of
/// guidance tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Right = 0,
    Up = 1,
    Left = 2,
    Down = 3,
    Wait = 4,
}

impl Direction {
    pub const MOVES: [Direction; 4] = [Direction::Right, Direction::Up, Direction::Left, Direction::Down];
    pub const ALL: [Direction; 5] = [
        Direction::Right,
        Direction::Up,
        Direction::Left,
        Direction::Down,
        Direction::Wait,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Direction> {
        Direction::ALL.get(i).copied()
    }

    /// `(d_row, d_col)`.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Right => (0, 1),
            Direction::Up => (-1, 0),
            Direction::Left => (0, -1),
            Direction::Down => (1, 0),
            Direction::Wait => (0, 0),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Left => Direction::Right,
            Direction::Down => Direction::Up,
            Direction::Wait => Direction::Wait,
        }
    }
}

/// A parsed, connectivity-checked grid map. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
    free_count: usize,
    // neighbor cell index per move direction, NO_CELL when blocked
    adjacency: Vec<[u32; 4]>,
    degree: Vec<u8>,
}

impl GridMap {
    /// Builds a map from a row-major cell array, rejecting disconnected maps.
    pub fn from_cells(height: usize, width: usize, cells: Vec<CellKind>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::MapHeader(format!("non-positive dimensions {height}x{width}")));
        }
        if cells.len() != height * width {
            return Err(Error::ShapeMismatch { expected: vec![height, width], got: vec![cells.len()] });
        }
        let free_count = cells.iter().filter(|k| k.is_traversable()).count();
        if free_count == 0 {
            return Err(Error::EmptyMap);
        }
        let mut adjacency = vec![[NO_CELL; 4]; cells.len()];
        let mut degree = vec![0u8; cells.len()];
        for r in 0..height {
            for c in 0..width {
                let v = r * width + c;
                if !cells[v].is_traversable() {
                    continue;
                }
                for d in Direction::MOVES {
                    let (dr, dc) = d.delta();
                    let (nr, nc) = (r as isize + dr, c as isize + dc);
                    if nr < 0 || nc < 0 || nr >= height as isize || nc >= width as isize {
                        continue;
                    }
                    let u = nr as usize * width + nc as usize;
                    if cells[u].is_traversable() {
                        adjacency[v][d.index()] = u as u32;
                        degree[v] += 1;
                    }
                }
            }
        }
        let map = GridMap { width, height, cells, free_count, adjacency, degree };
        let reached = map.reachable_count();
        if reached != free_count {
            return Err(Error::Disconnected { reached, free: free_count });
        }
        Ok(map)
    }

    /// Parses `.map` text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut height = None;
        let mut width = None;
        let mut saw_type = false;
        loop {
            let line = lines.next().ok_or_else(|| Error::MapHeader("missing `map` line".into()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line == "map" {
                break;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let value = parts.next();
            match (key, value) {
                ("type", Some(_)) => saw_type = true,
                ("height", Some(v)) => {
                    height = Some(v.parse::<usize>().map_err(|_| Error::MapHeader(format!("bad height {v:?}")))?)
                }
                ("width", Some(v)) => {
                    width = Some(v.parse::<usize>().map_err(|_| Error::MapHeader(format!("bad width {v:?}")))?)
                }
                _ => return Err(Error::MapHeader(format!("unexpected header line {line:?}"))),
            }
        }
        if !saw_type {
            return Err(Error::MapHeader("missing `type` line".into()));
        }
        let height = height.ok_or_else(|| Error::MapHeader("missing height".into()))?;
        let width = width.ok_or_else(|| Error::MapHeader("missing width".into()))?;

        let rows: Vec<&str> = lines.map(|l| l.trim_end_matches('\r')).filter(|l| !l.is_empty()).collect();
        if rows.len() != height {
            return Err(Error::RowCount { expected: height, found: rows.len() });
        }
        let mut cells = Vec::with_capacity(height * width);
        for (r, row) in rows.iter().enumerate() {
            let found = row.chars().count();
            if found != width {
                return Err(Error::RowLength { row: r, expected: width, found });
            }
            for (c, ch) in row.chars().enumerate() {
                cells.push(CellKind::from_char(ch).ok_or(Error::UnknownCell { row: r, col: c, ch })?);
            }
        }
        GridMap::from_cells(height, width, cells)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GridMap::parse(&text)
    }

    /// Serializes back to `.map` text. Obstacles are always written as `@`.
    pub fn to_map_string(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        out.push_str(&self.body_string());
        out
    }

    pub fn body_string(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            out.extend(row.iter().map(|k| k.to_char()));
            out.push('\n');
        }
        out
    }

    fn reachable_count(&self) -> usize {
        let Some(start) = self.cells.iter().position(|k| k.is_traversable()) else {
            return 0;
        };
        let mut seen = vec![false; self.cells.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &u in &self.adjacency[v] {
                if u != NO_CELL && !seen[u as usize] {
                    seen[u as usize] = true;
                    count += 1;
                    queue.push_back(u as usize);
                }
            }
        }
        count
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn free_count(&self) -> usize {
        self.free_count
    }

    pub fn kind(&self, c: Coord) -> Option<CellKind> {
        self.in_bounds(c).then(|| self.cells[self.index(c)])
    }

    pub fn kind_at(&self, v: usize) -> CellKind {
        self.cells[v]
    }

    pub fn in_bounds(&self, c: Coord) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn is_traversable(&self, c: Coord) -> bool {
        self.kind(c).is_some_and(CellKind::is_traversable)
    }

    #[inline]
    pub fn index(&self, c: Coord) -> usize {
        c.row * self.width + c.col
    }

    #[inline]
    pub fn coord(&self, v: usize) -> Coord {
        Coord { row: v / self.width, col: v % self.width }
    }

    /// Checked conversion of a coordinate to a traversable cell index.
    pub fn cell(&self, c: Coord) -> Result<usize> {
        if self.is_traversable(c) {
            Ok(self.index(c))
        } else {
            Err(Error::InvalidCell(c))
        }
    }

    /// Neighbor of cell `v` in direction `d`; `Wait` returns `v` itself.
    #[inline]
    pub fn step(&self, v: usize, d: Direction) -> Option<usize> {
        match d {
            Direction::Wait => Some(v),
            _ => {
                let u = self.adjacency[v][d.index()];
                (u != NO_CELL).then_some(u as usize)
            }
        }
    }

    /// Packed neighbors in Right, Up, Left, Down order (`NO_CELL` if blocked).
    #[inline]
    pub fn adjacency(&self, v: usize) -> &[u32; 4] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.degree[v] as usize
    }

    /// Iterator over `(direction, neighbor)` pairs of a traversable cell.
    pub fn moves(&self, v: usize) -> impl Iterator<Item = (Direction, usize)> + '_ {
        Direction::MOVES
            .into_iter()
            .zip(self.adjacency[v])
            .filter(|&(_, u)| u != NO_CELL)
            .map(|(d, u)| (d, u as usize))
    }

    /// Traversable 4-neighbors in Right, Up, Left, Down order, optionally
    /// followed by the self-edge.
    pub fn move_neighbors(&self, c: Coord, with_wait: bool) -> Result<Vec<(Direction, Coord)>> {
        let v = self.cell(c)?;
        let mut out: Vec<_> = self.moves(v).map(|(d, u)| (d, self.coord(u))).collect();
        if with_wait {
            out.push((Direction::Wait, c));
        }
        Ok(out)
    }

    /// Direction of the move `from -> to`, if they are adjacent (or equal).
    pub fn direction_between(&self, from: usize, to: usize) -> Option<Direction> {
        if from == to {
            return Some(Direction::Wait);
        }
        self.adjacency[from].iter().position(|&u| u as usize == to).and_then(Direction::from_index)
    }

    pub fn traversable_cells(&self) -> Vec<usize> {
        (0..self.cells.len()).filter(|&v| self.cells[v].is_traversable()).collect()
    }

    pub fn cells_of_kind(&self, kind: CellKind) -> Vec<usize> {
        (0..self.cells.len()).filter(|&v| self.cells[v] == kind).collect()
    }

    /// Warehouse-style maps carry both endpoints and workstations; their
    /// agents alternate between the two categories.
    pub fn is_warehouse(&self) -> bool {
        self.cells.contains(&CellKind::Endpoint) && self.cells.contains(&CellKind::Workstation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(body: &[&str]) -> Result<GridMap> {
        let text = format!("type octile\nheight {}\nwidth {}\nmap\n{}\n", body.len(), body[0].len(), body.join("\n"));
        GridMap::parse(&text)
    }

    #[test]
    fn empty_map_counts() {
        let body: Vec<String> = (0..32).map(|_| ".".repeat(32)).collect();
        let refs: Vec<&str> = body.iter().map(String::as_str).collect();
        let m = map(&refs).unwrap();
        assert_eq!(m.free_count(), 1024);
        assert!(m.cells_of_kind(CellKind::Endpoint).is_empty());
    }

    #[test]
    fn disconnected_rejected() {
        assert!(matches!(map(&[".@", "@."]), Err(Error::Disconnected { reached: 1, free: 2 })));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(map(&["...", ".."]), Err(Error::RowLength { row: 1, .. })));
        assert!(matches!(map(&["..x"]), Err(Error::UnknownCell { ch: 'x', .. })));
        assert!(matches!(GridMap::parse("height 2\nwidth 2\nmap\n..\n..\n"), Err(Error::MapHeader(_))));
        assert!(matches!(GridMap::parse("type octile\nheight 3\nwidth 2\nmap\n..\n..\n"), Err(Error::RowCount { .. })));
    }

    #[test]
    fn neighbor_order_and_counts() {
        let m = map(&["...", "...", "..."]).unwrap();
        assert_eq!(m.move_neighbors(Coord::new(1, 1), false).unwrap().len(), 4);
        let corner = m.move_neighbors(Coord::new(0, 0), false).unwrap();
        assert_eq!(
            corner,
            vec![(Direction::Right, Coord::new(0, 1)), (Direction::Down, Coord::new(1, 0))]
        );
        let with_wait = m.move_neighbors(Coord::new(0, 0), true).unwrap();
        assert_eq!(with_wait.last(), Some(&(Direction::Wait, Coord::new(0, 0))));

        let blocked = map(&["...", ".@.", "..."]).unwrap();
        // (1,0): right neighbor is the obstacle
        assert_eq!(blocked.move_neighbors(Coord::new(1, 0), false).unwrap().len(), 2);
        let m2 = map(&["....", "..@.", "...."]).unwrap();
        assert_eq!(m2.move_neighbors(Coord::new(1, 1), false).unwrap().len(), 3);
        assert!(m2.move_neighbors(Coord::new(1, 2), false).is_err());
        assert!(m2.move_neighbors(Coord::new(5, 0), false).is_err());
    }

    #[test]
    fn endpoint_and_workstation_codes() {
        let m = map(&["W.E", "@T."]).unwrap();
        assert_eq!(m.kind(Coord::new(0, 0)), Some(CellKind::Workstation));
        assert_eq!(m.kind(Coord::new(0, 2)), Some(CellKind::Endpoint));
        assert_eq!(m.kind(Coord::new(1, 1)), Some(CellKind::Obstacle));
        assert_eq!(m.free_count(), 4);
        assert!(m.is_warehouse());
    }
}
