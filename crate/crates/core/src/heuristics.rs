//! Lazily expanded reverse-Dijkstra trees giving distance-to-goal on the
//! current guidance graph.
//!
//! A tree is rooted at a goal and settles cells in cost order only until the
//! queried cell is settled. Costs are those of the forward edges, so the
//! value at `v` is the cheapest guidance-weighted path `v -> goal`. Wait
//! self-edges never participate.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::guidance::GuidanceGraph;
use crate::grid::Direction;

#[derive(Debug, Clone, Copy)]
struct Frontier {
    cost: f64,
    cell: u32,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    // min-heap on cost, then on cell index
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.cell.cmp(&self.cell))
    }
}

#[derive(Debug, Clone)]
pub struct HeuristicTree {
    goal: usize,
    graph_version: u64,
    dist: Vec<f64>,
    settled: Vec<bool>,
    frontier: BinaryHeap<Frontier>,
    expansions: usize,
}

impl HeuristicTree {
    pub fn new(graph: &GuidanceGraph, goal: usize) -> Self {
        let n = graph.map().num_cells();
        let mut tree = HeuristicTree {
            goal,
            graph_version: graph.version(),
            dist: vec![f64::INFINITY; n],
            settled: vec![false; n],
            frontier: BinaryHeap::new(),
            expansions: 0,
        };
        tree.reroot(graph, goal);
        tree
    }

    fn reroot(&mut self, graph: &GuidanceGraph, goal: usize) {
        self.goal = goal;
        self.graph_version = graph.version();
        self.dist.fill(f64::INFINITY);
        self.settled.fill(false);
        self.frontier.clear();
        self.expansions = 0;
        self.dist[goal] = 0.0;
        self.frontier.push(Frontier { cost: 0.0, cell: goal as u32 });
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn graph_version(&self) -> u64 {
        self.graph_version
    }

    /// Number of cells settled so far.
    pub fn expansions(&self) -> usize {
        self.expansions
    }

    pub fn is_settled(&self, v: usize) -> bool {
        self.settled[v]
    }

    /// Checked query: rejects trees built for an older guidance version and
    /// obstacle cells. Unreachable cells yield infinity.
    pub fn distance(&mut self, graph: &GuidanceGraph, v: usize) -> Result<f64> {
        if self.graph_version != graph.version() {
            return Err(Error::StaleTree { tree: self.graph_version, graph: graph.version() });
        }
        let map = graph.map();
        if v >= map.num_cells() || !map.kind_at(v).is_traversable() {
            return Err(Error::InvalidCell(map.coord(v.min(map.num_cells().saturating_sub(1)))));
        }
        Ok(self.distance_unchecked(graph, v))
    }

    #[inline]
    pub(crate) fn distance_unchecked(&mut self, graph: &GuidanceGraph, v: usize) -> f64 {
        if self.settled[v] {
            return self.dist[v];
        }
        let map = graph.map();
        while let Some(Frontier { cost, cell }) = self.frontier.pop() {
            let y = cell as usize;
            if self.settled[y] || cost > self.dist[y] {
                continue;
            }
            self.settled[y] = true;
            self.expansions += 1;
            // predecessor x reaches y by moving opposite to the y -> x direction
            for (i, &x) in map.adjacency(y).iter().enumerate() {
                if x == crate::grid::NO_CELL || self.settled[x as usize] {
                    continue;
                }
                let forward = Direction::MOVES[i].opposite();
                let nd = cost + graph.cost(x as usize, forward);
                if nd < self.dist[x as usize] {
                    self.dist[x as usize] = nd;
                    self.frontier.push(Frontier { cost: nd, cell: x });
                }
            }
            if y == v {
                return cost;
            }
        }
        f64::INFINITY
    }
}

const NO_TREE: u32 = u32::MAX;

/// Trees keyed by goal cell and shared by every agent heading to that goal.
/// The whole cache is dropped whenever the guidance graph version moves.
#[derive(Debug, Clone)]
pub struct HeuristicCache {
    version: u64,
    slot_of_goal: Vec<u32>,
    trees: Vec<HeuristicTree>,
    pool: Vec<HeuristicTree>,
    retired_expansions: usize,
}

impl HeuristicCache {
    pub fn new(graph: &GuidanceGraph) -> Self {
        HeuristicCache {
            version: graph.version(),
            slot_of_goal: vec![NO_TREE; graph.map().num_cells()],
            trees: Vec::new(),
            pool: Vec::new(),
            retired_expansions: 0,
        }
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn live_trees(&self) -> usize {
        self.trees.len()
    }

    /// Total settled cells across all trees ever built by this cache.
    pub fn total_expansions(&self) -> usize {
        self.retired_expansions + self.trees.iter().map(|t| t.expansions).sum::<usize>()
    }

    /// Discards every tree; they are re-rooted lazily at `new_version`.
    pub fn invalidate_all(&mut self, new_version: u64) {
        for tree in self.trees.drain(..) {
            self.slot_of_goal[tree.goal] = NO_TREE;
            self.retired_expansions += tree.expansions;
            self.pool.push(tree);
        }
        self.version = new_version;
    }

    /// Drops trees whose goal is not in `goals`.
    pub fn retain_goals(&mut self, goals: &[usize]) {
        let mut keep = vec![false; self.slot_of_goal.len()];
        for &g in goals {
            keep[g] = true;
        }
        let mut i = 0;
        while i < self.trees.len() {
            let goal = self.trees[i].goal;
            if keep[goal] {
                self.slot_of_goal[goal] = i as u32;
                i += 1;
            } else {
                self.slot_of_goal[goal] = NO_TREE;
                let tree = self.trees.swap_remove(i);
                self.retired_expansions += tree.expansions;
                self.pool.push(tree);
            }
        }
        for (i, tree) in self.trees.iter().enumerate() {
            self.slot_of_goal[tree.goal] = i as u32;
        }
    }

    pub fn tree(&mut self, graph: &GuidanceGraph, goal: usize) -> &mut HeuristicTree {
        if graph.version() != self.version {
            self.invalidate_all(graph.version());
        }
        let slot = self.slot_of_goal[goal];
        if slot != NO_TREE {
            return &mut self.trees[slot as usize];
        }
        let tree = match self.pool.pop() {
            Some(mut t) => {
                t.reroot(graph, goal);
                t
            }
            None => HeuristicTree::new(graph, goal),
        };
        self.slot_of_goal[goal] = self.trees.len() as u32;
        self.trees.push(tree);
        self.trees.last_mut().expect("just pushed")
    }

    /// Guidance-weighted distance from `v` to `goal`.
    #[inline]
    pub fn distance(&mut self, graph: &GuidanceGraph, goal: usize, v: usize) -> f64 {
        self.tree(graph, goal).distance_unchecked(graph, v)
    }
}
