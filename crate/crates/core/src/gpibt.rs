//! Guided PIBT: per-agent guide paths planned on a (possibly
//! usage-dependent) guidance graph, a follower that ranks moves by grid
//! distance to the unvisited part of the path, and LNS refinement.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::time::Instant;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coord, Direction, GridMap, NO_CELL};
use crate::guidance::GuidanceGraph;
use crate::pibt::CostToGo;
use crate::policy::quadratic::{fill_window, hm_unchecked, reduced_unchecked, wq_costs_unchecked};
use crate::policy::{Arch, GuidancePolicy, Window};
use crate::seeding;

/// Per directed edge count of current guide paths using it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuidePathUsage {
    height: usize,
    width: usize,
    counts: Vec<u32>,
}

impl GuidePathUsage {
    pub fn new(map: &GridMap) -> Self {
        GuidePathUsage { height: map.height(), width: map.width(), counts: vec![0; 4 * map.num_cells()] }
    }

    /// From-scratch count over `paths`.
    pub fn recount<'a>(map: &GridMap, paths: impl IntoIterator<Item = &'a [usize]>) -> Self {
        let mut u = GuidePathUsage::new(map);
        for p in paths {
            u.add_path(map, p);
        }
        u
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, v: usize, d: Direction) -> u32 {
        if d == Direction::Wait {
            return 0;
        }
        self.counts[v * 4 + d.index()]
    }

    pub fn set(&mut self, v: usize, d: Direction, n: u32) {
        self.counts[v * 4 + d.index()] = n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn add_path(&mut self, map: &GridMap, path: &[usize]) {
        for w in path.windows(2) {
            let d = map.direction_between(w[0], w[1]).expect("guide paths are 4-connected");
            self.counts[w[0] * 4 + d.index()] += 1;
        }
    }

    pub fn remove_path(&mut self, map: &GridMap, path: &[usize]) {
        for w in path.windows(2) {
            let d = map.direction_between(w[0], w[1]).expect("guide paths are 4-connected");
            let c = &mut self.counts[w[0] * 4 + d.index()];
            *c = c.checked_sub(1).expect("usage underflow: path was never added");
        }
    }

    /// `(4, h, w)` tensor view in direction order.
    pub fn to_tensor(&self) -> Vec<f64> {
        let n = self.height * self.width;
        let mut out = vec![0.0; 4 * n];
        for v in 0..n {
            for d in 0..4 {
                out[d * n + v] = self.counts[v * 4 + d] as f64;
            }
        }
        out
    }
}

/// Where guide-path edge costs come from.
#[derive(Debug, Clone, Copy)]
pub enum WeightSource<'a> {
    /// Fixed graph (off, [p-on], or uniform).
    Static(&'a GuidanceGraph),
    /// SUM_OVC + 1.
    Hm,
    /// Windowed quadratic, `max(out, 0) + 1`.
    Windowed(&'a GuidancePolicy),
    /// 48-parameter quadratic, `max(out, 0) + 1`.
    Reduced(&'a GuidancePolicy),
}

impl<'a> WeightSource<'a> {
    /// Picks the source matching a policy's architecture.
    pub fn for_policy(policy: &'a GuidancePolicy) -> Result<Self> {
        match policy.arch {
            Arch::HmFixed => Ok(WeightSource::Hm),
            Arch::WindowedQuadratic { .. } => Ok(WeightSource::Windowed(policy)),
            Arch::ReducedQuadratic => Ok(WeightSource::Reduced(policy)),
            _ => Err(Error::WrongArch { expected: "hm-fixed | windowed-quadratic | reduced-quadratic".into(), got: policy.arch.name().into() }),
        }
    }

    pub fn depends_on_usage(&self) -> bool {
        !matches!(self, WeightSource::Static(_))
    }

    fn window(&self) -> Option<Window> {
        match self {
            WeightSource::Windowed(p) => match p.arch {
                Arch::WindowedQuadratic { window } => Some(Window::zeros(window)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Costs of the four outgoing edges of `x`; infinity where no edge exists.
    pub fn edge_costs(&self, map: &GridMap, usage: &GuidePathUsage, x: usize, scratch: &mut Option<Window>) -> [f64; 4] {
        let adj = map.adjacency(x);
        let mut out = [f64::INFINITY; 4];
        match self {
            WeightSource::Static(g) => {
                for (i, d) in Direction::MOVES.into_iter().enumerate() {
                    if adj[i] != NO_CELL {
                        out[i] = g.cost(x, d);
                    }
                }
            }
            WeightSource::Hm => {
                for (i, d) in Direction::MOVES.into_iter().enumerate() {
                    if adj[i] != NO_CELL {
                        out[i] = hm_unchecked(usage, x, adj[i] as usize, d) + 1.0;
                    }
                }
            }
            WeightSource::Reduced(p) => {
                for (i, d) in Direction::MOVES.into_iter().enumerate() {
                    if adj[i] != NO_CELL {
                        out[i] = reduced_unchecked(&p.theta, usage, map, adj[i] as usize, d).max(0.0) + 1.0;
                    }
                }
            }
            WeightSource::Windowed(p) => {
                let win = scratch.get_or_insert_with(|| self.window().expect("windowed policy"));
                fill_window(usage, map.coord(x), win);
                let c = wq_costs_unchecked(&p.theta, win);
                for i in 0..4 {
                    if adj[i] != NO_CELL {
                        out[i] = c[i];
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
struct Open {
    f: f64,
    g: f64,
    cell: u32,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.g.total_cmp(&self.g)).then_with(|| other.cell.cmp(&self.cell))
    }
}

/// Reusable A* workspace. The heuristic is the constant 1, so expansion
/// order is that of Dijkstra and the result is optimal for any positive
/// weights. Edge costs are evaluated only for expanded nodes.
#[derive(Debug, Clone)]
pub struct PathPlanner {
    stamp: Vec<u32>,
    closed: Vec<u32>,
    g: Vec<f64>,
    parent: Vec<u32>,
    epoch: u32,
    open: BinaryHeap<Open>,
    window: Option<Window>,
    pub expansions: usize,
}

impl PathPlanner {
    pub fn new(num_cells: usize) -> Self {
        PathPlanner {
            stamp: vec![0; num_cells],
            closed: vec![0; num_cells],
            g: vec![0.0; num_cells],
            parent: vec![NO_CELL; num_cells],
            epoch: 0,
            open: BinaryHeap::new(),
            window: None,
            expansions: 0,
        }
    }

    /// Minimum-cost wait-free path `start -> goal` under weights frozen at
    /// the current `usage`.
    pub fn plan(&mut self, map: &GridMap, source: &WeightSource<'_>, usage: &GuidePathUsage, start: usize, goal: usize) -> Result<Vec<usize>> {
        if start == goal {
            return Ok(vec![start]);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.closed.fill(0);
            self.epoch = 1;
        }
        let e = self.epoch;
        self.open.clear();
        self.stamp[start] = e;
        self.g[start] = 0.0;
        self.parent[start] = NO_CELL;
        self.open.push(Open { f: 1.0, g: 0.0, cell: start as u32 });
        while let Some(Open { g, cell, .. }) = self.open.pop() {
            let x = cell as usize;
            if self.closed[x] == e {
                continue;
            }
            self.closed[x] = e;
            if x == goal {
                let mut path = vec![goal];
                let mut y = goal;
                while self.parent[y] != NO_CELL {
                    y = self.parent[y] as usize;
                    path.push(y);
                }
                path.reverse();
                return Ok(path);
            }
            self.expansions += 1;
            let costs = source.edge_costs(map, usage, x, &mut self.window);
            for (i, &n) in map.adjacency(x).iter().enumerate() {
                if n == NO_CELL {
                    continue;
                }
                let n = n as usize;
                if self.closed[n] == e {
                    continue;
                }
                let ng = g + costs[i];
                if self.stamp[n] != e || ng < self.g[n] {
                    self.stamp[n] = e;
                    self.g[n] = ng;
                    self.parent[n] = x as u32;
                    self.open.push(Open { f: ng + 1.0, g: ng, cell: n as u32 });
                }
            }
        }
        Err(Error::Unreachable { start: map.coord(start), goal: map.coord(goal) })
    }
}

/// Sum of edge costs along `path` under the current usage.
pub fn path_cost(map: &GridMap, source: &WeightSource<'_>, usage: &GuidePathUsage, path: &[usize]) -> f64 {
    let mut scratch = None;
    path.windows(2)
        .map(|w| {
            let d = map.direction_between(w[0], w[1]).expect("4-connected path");
            source.edge_costs(map, usage, w[0], &mut scratch)[d.index()]
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidePath {
    pub agent_id: usize,
    pub vertices: Vec<usize>,
    pub planned_at: usize,
}

#[derive(Serialize)]
struct PathLine<'a> {
    agent: usize,
    planned_at: usize,
    progress: usize,
    path: &'a [Coord],
}

/// All agents' guide paths with their progress markers and the usage they
/// induce.
#[derive(Debug, Clone)]
pub struct GuidePaths {
    paths: Vec<GuidePath>,
    progress: Vec<usize>,
    index_of: Vec<Vec<u32>>,
    usage: GuidePathUsage,
    planner: PathPlanner,
    bfs: Bfs,
}

impl GuidePaths {
    pub fn new(map: &GridMap, num_agents: usize) -> Self {
        let n = map.num_cells();
        GuidePaths {
            paths: (0..num_agents).map(|i| GuidePath { agent_id: i, vertices: Vec::new(), planned_at: 0 }).collect(),
            progress: vec![0; num_agents],
            index_of: vec![vec![NO_CELL; n]; num_agents],
            usage: GuidePathUsage::new(map),
            planner: PathPlanner::new(n),
            bfs: Bfs::new(n),
        }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn path(&self, agent: usize) -> &GuidePath {
        &self.paths[agent]
    }

    pub fn progress(&self, agent: usize) -> usize {
        self.progress[agent]
    }

    pub fn usage(&self) -> &GuidePathUsage {
        &self.usage
    }

    pub fn expansions(&self) -> usize {
        self.planner.expansions
    }

    /// Installs `vertices` as the agent's path; usage follows.
    pub fn set_path(&mut self, map: &GridMap, agent: usize, vertices: Vec<usize>, t: usize) {
        let old = std::mem::take(&mut self.paths[agent].vertices);
        self.usage.remove_path(map, &old);
        for &v in &old {
            self.index_of[agent][v] = NO_CELL;
        }
        self.usage.add_path(map, &vertices);
        for (k, &v) in vertices.iter().enumerate() {
            self.index_of[agent][v] = k as u32;
        }
        self.paths[agent] = GuidePath { agent_id: agent, vertices, planned_at: t };
        self.progress[agent] = 0;
    }

    /// Replans from `start` to `goal`; the agent's own old path is taken out
    /// of the usage before searching.
    pub fn replan(&mut self, map: &GridMap, source: &WeightSource<'_>, agent: usize, start: usize, goal: usize, t: usize) -> Result<()> {
        let old = std::mem::take(&mut self.paths[agent].vertices);
        self.usage.remove_path(map, &old);
        for &v in &old {
            self.index_of[agent][v] = NO_CELL;
        }
        let path = self.planner.plan(map, source, &self.usage, start, goal)?;
        self.set_path(map, agent, path, t);
        Ok(())
    }

    /// Moves the progress marker to the agent's cell if it lies ahead on the path.
    pub fn advance(&mut self, agent: usize, position: usize) {
        let k = self.index_of[agent][position];
        if k != NO_CELL && k as usize >= self.progress[agent] {
            self.progress[agent] = k as usize;
        }
    }

    fn suffix_index(&self, agent: usize, cell: usize) -> Option<usize> {
        let k = self.index_of[agent][cell];
        (k != NO_CELL && k as usize >= self.progress[agent]).then_some(k as usize)
    }

    /// Cost of every remaining suffix under the current usage.
    pub fn total_suffix_cost(&self, map: &GridMap, source: &WeightSource<'_>) -> f64 {
        let mut memo: Vec<Option<[f64; 4]>> = vec![None; map.num_cells()];
        let mut scratch = None;
        let mut total = 0.0;
        for (a, p) in self.paths.iter().enumerate() {
            for w in p.vertices[self.progress[a]..].windows(2) {
                let d = map.direction_between(w[0], w[1]).expect("4-connected path");
                let costs = *memo[w[0]].get_or_insert_with(|| source.edge_costs(map, &self.usage, w[0], &mut scratch));
                total += costs[d.index()];
            }
        }
        total
    }

    /// One JSON object per agent and line.
    pub fn to_jsonl(&self, map: &GridMap) -> Result<String> {
        let mut out = String::new();
        for (a, p) in self.paths.iter().enumerate() {
            let coords: Vec<Coord> = p.vertices.iter().map(|&v| map.coord(v)).collect();
            let line = PathLine { agent: a, planned_at: p.planned_at, progress: self.progress[a], path: &coords };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Ranking oracle for the follower.
    pub fn follower<'a>(&'a mut self, map: &'a GridMap) -> SuffixDistance<'a> {
        SuffixDistance { map, paths: self }
    }
}

#[derive(Debug, Clone)]
struct Bfs {
    seen: Vec<u32>,
    epoch: u32,
    queue: VecDeque<(u32, u32)>,
}

impl Bfs {
    fn new(n: usize) -> Self {
        Bfs { seen: vec![0; n], epoch: 0, queue: VecDeque::new() }
    }
}

/// Follower ranking: grid distance from a cell to the nearest vertex of
/// the unvisited path suffix, then remaining path length from there.
/// Encoded as `distance * 1e6 + remaining`; zero at the goal.
pub struct SuffixDistance<'a> {
    map: &'a GridMap,
    paths: &'a mut GuidePaths,
}

const DIST_SCALE: f64 = 1e6;

impl SuffixDistance<'_> {
    /// `(grid distance, remaining steps)` from `cell` along the suffix.
    pub fn key_parts(&mut self, agent: usize, cell: usize) -> (usize, usize) {
        let p = &*self.paths;
        let last = p.paths[agent].vertices.len().saturating_sub(1);
        if let Some(k) = p.suffix_index(agent, cell) {
            return (0, last - k);
        }
        let bfs = &mut self.paths.bfs;
        bfs.epoch = bfs.epoch.wrapping_add(1);
        if bfs.epoch == 0 {
            bfs.seen.fill(0);
            bfs.epoch = 1;
        }
        let e = bfs.epoch;
        bfs.queue.clear();
        bfs.queue.push_back((cell as u32, 0));
        bfs.seen[cell] = e;
        let progress = self.paths.progress[agent];
        let index_of = &self.paths.index_of[agent];
        let mut best: Option<(usize, usize)> = None;
        while let Some((x, d)) = bfs.queue.pop_front() {
            let d = d as usize;
            if best.is_some_and(|(bd, _)| d > bd) {
                break;
            }
            let k = index_of[x as usize];
            if k != NO_CELL && k as usize >= progress {
                let rem = last - k as usize;
                if best.is_none_or(|(_, br)| rem < br) {
                    best = Some((d, rem));
                }
                continue;
            }
            for &n in self.map.adjacency(x as usize) {
                if n != NO_CELL && bfs.seen[n as usize] != e {
                    bfs.seen[n as usize] = e;
                    bfs.queue.push_back((n, d as u32 + 1));
                }
            }
        }
        best.unwrap_or((usize::MAX / 4, last))
    }
}

impl CostToGo for SuffixDistance<'_> {
    fn distance(&mut self, agent: usize, cell: usize) -> f64 {
        let (d, rem) = self.key_parts(agent, cell);
        d as f64 * DIST_SCALE + rem as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LnsParams {
    pub group_size: usize,
    pub iterations: usize,
    pub time_limit_s: f64,
}

impl Default for LnsParams {
    fn default() -> Self {
        LnsParams { group_size: 10, iterations: 10, time_limit_s: 8.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LnsStats {
    pub iterations: usize,
    pub accepted: usize,
    pub initial_cost: f64,
    pub final_cost: f64,
    /// Total cost after each accepted iteration.
    pub accepted_costs: Vec<f64>,
}

const LNS_REL_TOL: f64 = 1e-9;

/// Replans random groups of agents from their current cells and keeps a
/// group's new paths only if the total suffix cost strictly drops.
#[allow(clippy::too_many_arguments)]
pub fn lns_refine(
    map: &GridMap,
    source: &WeightSource<'_>,
    paths: &mut GuidePaths,
    positions: &[usize],
    goals: &[usize],
    params: &LnsParams,
    seed: u64,
    t: usize,
) -> Result<LnsStats> {
    let start = Instant::now();
    let n = paths.len();
    let mut stats = LnsStats::default();
    let mut cost = paths.total_suffix_cost(map, source);
    stats.initial_cost = cost;
    if n == 0 || params.iterations == 0 || params.group_size == 0 {
        stats.final_cost = cost;
        return Ok(stats);
    }
    let mut rng = seeding::stream(seed, &[seeding::LNS, t as u64]);
    for _ in 0..params.iterations {
        if start.elapsed().as_secs_f64() > params.time_limit_s {
            break;
        }
        stats.iterations += 1;
        let group = index::sample(&mut rng, n, params.group_size.min(n)).into_vec();
        let saved: Vec<(GuidePath, usize)> = group.iter().map(|&a| (paths.paths[a].clone(), paths.progress[a])).collect();
        let mut failed = false;
        for &a in &group {
            if paths.replan(map, source, a, positions[a], goals[a], t).is_err() {
                failed = true;
                break;
            }
        }
        let new_cost = if failed { f64::INFINITY } else { paths.total_suffix_cost(map, source) };
        if new_cost < cost - LNS_REL_TOL * cost.abs() {
            cost = new_cost;
            stats.accepted += 1;
            stats.accepted_costs.push(cost);
        } else {
            for (&a, (old, prog)) in group.iter().zip(saved) {
                paths.set_path(map, a, old.vertices, old.planned_at);
                paths.progress[a] = prog;
            }
        }
    }
    stats.final_cost = cost;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::pibt::{AgentState, Pibt};

    fn map(rows: &[&str]) -> Arc<GridMap> {
        let text = format!("type octile\nheight {}\nwidth {}\nmap\n{}\n", rows.len(), rows[0].len(), rows.join("\n"));
        Arc::new(GridMap::parse(&text).unwrap())
    }

    fn empty(h: usize, w: usize) -> Arc<GridMap> {
        let row = ".".repeat(w);
        map(&vec![row.as_str(); h])
    }

    #[test]
    fn uniform_path_is_manhattan() {
        let m = empty(8, 8);
        let g = GuidanceGraph::uniform(m.clone(), false);
        let src = WeightSource::Static(&g);
        let usage = GuidePathUsage::new(&m);
        let mut pl = PathPlanner::new(m.num_cells());
        let (a, b) = (m.index(Coord::new(1, 1)), m.index(Coord::new(6, 4)));
        let p = pl.plan(&m, &src, &usage, a, b).unwrap();
        assert_eq!(p.len() - 1, 8);
        assert_eq!(path_cost(&m, &src, &usage, &p), 8.0);
        assert_eq!(pl.plan(&m, &src, &usage, a, a).unwrap(), vec![a]);
        let zero = GuidancePolicy::zeros(Arch::windowed_quadratic());
        let p2 = pl.plan(&m, &WeightSource::Windowed(&zero), &usage, a, b).unwrap();
        assert_eq!(p2.len() - 1, 8);
    }

    #[test]
    fn penalized_column_is_avoided() {
        // entering column 3 costs 100 except in the bottom row
        let m = empty(5, 7);
        let mut g = GuidanceGraph::uniform(m.clone(), false);
        for r in 0..4 {
            g.set_weight(Coord::new(r, 2), Direction::Right, 100.0).unwrap();
            g.set_weight(Coord::new(r, 4), Direction::Left, 100.0).unwrap();
        }
        let usage = GuidePathUsage::new(&m);
        let p = PathPlanner::new(m.num_cells())
            .plan(&m, &WeightSource::Static(&g), &usage, m.index(Coord::new(0, 0)), m.index(Coord::new(0, 6)))
            .unwrap();
        let crossings = p.windows(2).filter(|w| {
            let (a, b) = (m.coord(w[0]), m.coord(w[1]));
            a.row < 4 && ((a.col == 2 && b.col == 3) || (a.col == 4 && b.col == 3))
        });
        assert_eq!(crossings.count(), 0);
        assert_eq!(path_cost(&m, &WeightSource::Static(&g), &usage, &p), 6.0 + 8.0);
    }

    #[test]
    fn usage_tracks_replans() {
        let m = empty(6, 6);
        let mut gp = GuidePaths::new(&m, 3);
        let src = WeightSource::Hm;
        for a in 0..3 {
            gp.replan(&m, &src, a, a, 35 - a, 0).unwrap();
        }
        gp.replan(&m, &src, 1, 20, 3, 1).unwrap();
        let oracle = GuidePathUsage::recount(&m, (0..3).map(|a| gp.path(a).vertices.as_slice()));
        assert_eq!(gp.usage(), &oracle);
        assert!(gp.to_jsonl(&m).unwrap().lines().count() == 3);
    }

    #[test]
    fn hm_spreads_opposing_flows() {
        // two agents crossing a 2-row strip in opposite directions
        let m = empty(2, 8);
        let mut gp = GuidePaths::new(&m, 2);
        let src = WeightSource::Hm;
        gp.replan(&m, &src, 0, m.index(Coord::new(0, 0)), m.index(Coord::new(0, 7)), 0).unwrap();
        gp.replan(&m, &src, 1, m.index(Coord::new(0, 7)), m.index(Coord::new(0, 0)), 0).unwrap();
        let rows: Vec<usize> = gp.path(1).vertices[1..7].iter().map(|&v| m.coord(v).row).collect();
        assert!(rows.contains(&1), "{rows:?}");
    }

    #[test]
    fn suffix_key_prefers_path_and_progress() {
        let m = empty(5, 5);
        let mut gp = GuidePaths::new(&m, 1);
        let path: Vec<usize> = (0..5).map(|c| m.index(Coord::new(2, c))).collect();
        gp.set_path(&m, 0, path.clone(), 0);
        gp.advance(0, path[2]);
        let mut f = gp.follower(&m);
        assert_eq!(f.key_parts(0, path[3]), (0, 1));
        assert_eq!(f.key_parts(0, m.index(Coord::new(1, 2))), (1, 2));
        // behind the progress marker counts as off the suffix
        assert_eq!(f.key_parts(0, path[1]), (1, 2));
        assert_eq!(f.distance(0, path[4]), 0.0);
    }

    #[test]
    fn pushed_agent_returns_to_path() {
        let m = empty(3, 6);
        let mut gp = GuidePaths::new(&m, 1);
        let path: Vec<usize> = (0..6).map(|c| m.index(Coord::new(1, c))).collect();
        gp.set_path(&m, 0, path.clone(), 0);
        let off = m.index(Coord::new(0, 2));
        let mut agents = vec![AgentState::new(0, off, path[5], 1)];
        let mut pibt = Pibt::new(m.num_cells(), true, 1);
        let next = pibt.step(&m, &agents, &mut gp.follower(&m), 0);
        assert_eq!(m.coord(next[0]), Coord::new(1, 2));
        agents[0].position = next[0];
        gp.advance(0, next[0]);
        for t in 1..4 {
            let next = pibt.step(&m, &agents, &mut gp.follower(&m), t);
            assert_eq!(next[0], path[2 + t]);
            agents[0].position = next[0];
            gp.advance(0, next[0]);
        }
    }

    #[test]
    fn lns_no_acceptance_with_static_weights() {
        let m = empty(8, 8);
        let g = GuidanceGraph::uniform(m.clone(), false);
        let src = WeightSource::Static(&g);
        let mut gp = GuidePaths::new(&m, 6);
        let starts = [0, 9, 18, 27, 36, 45];
        let goals = [63, 54, 7, 56, 1, 62];
        for a in 0..6 {
            gp.replan(&m, &src, a, starts[a], goals[a], 0).unwrap();
        }
        let params = LnsParams { group_size: 3, iterations: 10, time_limit_s: 8.0 };
        let s = lns_refine(&m, &src, &mut gp, &starts, &goals, &params, 5, 0).unwrap();
        assert_eq!(s.accepted, 0);
        assert_eq!(s.final_cost, s.initial_cost);
        let none = lns_refine(&m, &src, &mut gp, &starts, &goals, &LnsParams { iterations: 0, ..params }, 5, 0).unwrap();
        assert_eq!(none.iterations, 0);
    }

    #[test]
    fn lns_never_increases_cost() {
        let m = empty(6, 10);
        let src = WeightSource::Hm;
        let mut gp = GuidePaths::new(&m, 8);
        let starts: Vec<usize> = (0..8).map(|a| m.index(Coord::new(a % 6, 0))).collect();
        let goals: Vec<usize> = (0..8).map(|a| m.index(Coord::new((a + 3) % 6, 9))).collect();
        for a in 0..8 {
            gp.replan(&m, &src, a, starts[a], goals[a], 0).unwrap();
        }
        for t in 0..5 {
            let s = lns_refine(&m, &src, &mut gp, &starts, &goals, &LnsParams { group_size: 3, ..Default::default() }, 2, t).unwrap();
            assert!(s.final_cost <= s.initial_cost);
            assert_eq!(s.final_cost, gp.total_suffix_cost(&m, &src));
        }
        let oracle = GuidePathUsage::recount(&m, (0..8).map(|a| gp.path(a).vertices.as_slice()));
        assert_eq!(gp.usage(), &oracle);
    }
}
