//! Shared helpers and brute-force oracles for the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::sync::Arc;

use guided_lmapf::gpibt::GuidePathUsage;
use guided_lmapf::grid::{CellKind, Coord, Direction, GridMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Map from a mask (0..3 obstacle, 3 endpoint, 4 workstation, else free),
/// trimmed to the component of the first traversable cell.
pub fn connected_map(h: usize, w: usize, mask: &[u8]) -> Arc<GridMap> {
    let mut cells: Vec<CellKind> = mask
        .iter()
        .map(|&m| match m {
            0..=2 => CellKind::Obstacle,
            3 => CellKind::Endpoint,
            4 => CellKind::Workstation,
            _ => CellKind::Free,
        })
        .collect();
    let start = match cells.iter().position(|k| *k != CellKind::Obstacle) {
        Some(s) => s,
        None => {
            cells[0] = CellKind::Free;
            0
        }
    };
    let mut seen = vec![false; h * w];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        let (r, c) = ((v / w) as isize, (v % w) as isize);
        for (dr, dc) in [(0, 1), (-1, 0), (0, -1), (1, 0)] {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                continue;
            }
            let u = nr as usize * w + nc as usize;
            if !seen[u] && cells[u] != CellKind::Obstacle {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    for (v, k) in cells.iter_mut().enumerate() {
        if !seen[v] {
            *k = CellKind::Obstacle;
        }
    }
    Arc::new(GridMap::from_cells(h, w, cells).expect("component is connected"))
}

fn neighbor(map: &GridMap, v: usize, d: Direction) -> Option<usize> {
    let c = map.coord(v);
    let (dr, dc) = d.delta();
    let (r, cc) = (c.row as isize + dr, c.col as isize + dc);
    if r < 0 || cc < 0 || r >= map.height() as isize || cc >= map.width() as isize {
        return None;
    }
    let u = Coord::new(r as usize, cc as usize);
    map.is_traversable(u).then(|| map.index(u))
}

fn pick_min(dist: &[f64], done: &[bool]) -> Option<usize> {
    (0..dist.len()).filter(|&v| !done[v] && dist[v].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
}

/// Quadratic-time Dijkstra toward `goal`; `cost(v, d)` is the weight of
/// leaving `v` in direction `d`.
pub fn dijkstra_to(map: &GridMap, goal: usize, cost: impl Fn(usize, Direction) -> f64) -> Vec<f64> {
    let n = map.num_cells();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[goal] = 0.0;
    while let Some(y) = pick_min(&dist, &done) {
        done[y] = true;
        for d in Direction::MOVES {
            // x moves into y in direction opposite(d)
            if let Some(x) = neighbor(map, y, d) {
                let nd = dist[y] + cost(x, d.opposite());
                if nd < dist[x] {
                    dist[x] = nd;
                }
            }
        }
    }
    dist
}

/// Quadratic-time Dijkstra from `start` with per-node outgoing costs.
pub fn dijkstra_from(map: &GridMap, start: usize, mut costs: impl FnMut(usize) -> [f64; 4]) -> Vec<f64> {
    let n = map.num_cells();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[start] = 0.0;
    while let Some(x) = pick_min(&dist, &done) {
        done[x] = true;
        let c = costs(x);
        for d in Direction::MOVES {
            if let Some(y) = neighbor(map, x, d) {
                let nd = dist[x] + c[d.index()];
                if nd < dist[y] {
                    dist[y] = nd;
                }
            }
        }
    }
    dist
}

/// Random counts on valid edges only.
pub fn random_usage(map: &GridMap, seed: u64, max: u32) -> GuidePathUsage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = GuidePathUsage::new(map);
    for v in map.traversable_cells() {
        for d in Direction::MOVES {
            if neighbor(map, v, d).is_some() {
                u.set(v, d, rng.random_range(0..=max));
            }
        }
    }
    u
}

/// Opposing-flow cost of the edge leaving `v` in direction `d`, written
/// out in coordinates.
pub fn hm_oracle(map: &GridMap, usage: &GuidePathUsage, v: usize, d: Direction) -> f64 {
    let head = neighbor(map, v, d).expect("valid edge");
    let there = usage.get(v, d) as f64;
    let back = usage.get(head, d.opposite()) as f64;
    let mut leaving = 0.0;
    for e in Direction::MOVES {
        leaving += usage.get(head, e) as f64;
    }
    there * back + back + leaving / 2.0
}

fn usage_at(map: &GridMap, usage: &GuidePathUsage, r: isize, c: isize, ch: usize) -> f64 {
    if r < 0 || c < 0 || r >= map.height() as isize || c >= map.width() as isize {
        return 0.0;
    }
    usage.get(r as usize * map.width() + c as usize, Direction::MOVES[ch]) as f64
}

/// Windowed quadratic with a 5x5 window evaluated straight from map
/// coordinates.
pub fn wq_oracle(map: &GridMap, usage: &GuidePathUsage, center: Coord, theta: &[f64]) -> [f64; 4] {
    let s = 5isize;
    let (r0, c0) = (center.row as isize - 2, center.col as isize - 2);
    let u = |ch: usize, i: isize, j: isize| usage_at(map, usage, r0 + i, c0 + j, ch);
    let per = 100 + 40;
    let mut out = [0.0; 4];
    for (o, slot) in out.iter_mut().enumerate() {
        let p = &theta[o * per..(o + 1) * per];
        let mut acc = 0.0;
        let mut k = 0;
        for ch in 0..4 {
            for i in 0..s {
                for j in 0..s {
                    acc += p[k] * u(ch, i, j);
                    k += 1;
                }
            }
        }
        for i in 0..s {
            for j in 0..s - 1 {
                acc += p[k] * u(0, i, j) * u(2, i, j + 1);
                k += 1;
            }
        }
        for i in 0..s - 1 {
            for j in 0..s {
                acc += p[k] * u(3, i, j) * u(1, i + 1, j);
                k += 1;
            }
        }
        *slot = acc;
    }
    out
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Conflicts {
    pub vertex: usize,
    pub swap: usize,
    pub bad_moves: usize,
}

impl Conflicts {
    pub fn total(&self) -> usize {
        self.vertex + self.swap + self.bad_moves
    }
}

/// Pairwise conflict check over raw coordinates.
pub fn count_conflicts(map: &GridMap, positions: &[Vec<Coord>]) -> Conflicts {
    let mut out = Conflicts::default();
    for (t, now) in positions.iter().enumerate() {
        for (i, a) in now.iter().enumerate() {
            if !map.is_traversable(*a) {
                out.bad_moves += 1;
            }
            for b in &now[i + 1..] {
                if a == b {
                    out.vertex += 1;
                }
            }
        }
        if t == 0 {
            continue;
        }
        let before = &positions[t - 1];
        for i in 0..now.len() {
            if before[i].manhattan(now[i]) > 1 {
                out.bad_moves += 1;
            }
            for j in i + 1..now.len() {
                if before[i] == now[j] && before[j] == now[i] && before[i] != now[i] {
                    out.swap += 1;
                }
            }
        }
    }
    out
}
