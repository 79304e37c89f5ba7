//! Single-step PIBT: priority inheritance with backtracking, plus the
//! LaCAM2-style swap emulation for narrow corridors.
//!
//! The engine is agnostic to how candidate actions are scored. A
//! [`CostToGo`] supplies both the ranking key of each candidate and the
//! distance used by swap detection; PIBT over a guidance graph and the
//! guide-path follower of GPIBT plug in different implementations.

use crate::error::Result;
use crate::grid::{Direction, GridMap, NO_CELL};
use crate::guidance::GuidanceGraph;
use crate::heuristics::HeuristicCache;
use crate::seeding;
use crate::tasks::{AgentTaskState, TaskSystem};

const NONE: u32 = u32::MAX;

pub trait CostToGo {
    /// Distance-like value, zero at the goal. Drives swap detection.
    fn distance(&mut self, agent: usize, cell: usize) -> f64;

    /// Ranking key of `agent` taking `dir` from `from` into `to`; lower is
    /// preferred.
    fn action_key(&mut self, agent: usize, from: usize, dir: Direction, to: usize) -> f64 {
        let _ = (from, dir);
        self.distance(agent, to)
    }
}

/// Ranks by `action_cost(pos, d) + distance(next, goal)` on a guidance graph.
pub struct GuidedHeuristic<'a> {
    pub graph: &'a GuidanceGraph,
    pub cache: &'a mut HeuristicCache,
    pub goals: &'a [usize],
}

impl CostToGo for GuidedHeuristic<'_> {
    #[inline]
    fn distance(&mut self, agent: usize, cell: usize) -> f64 {
        self.cache.distance(self.graph, self.goals[agent], cell)
    }

    #[inline]
    fn action_key(&mut self, agent: usize, from: usize, dir: Direction, to: usize) -> f64 {
        self.graph.cost(from, dir) + self.distance(agent, to)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub position: usize,
    pub goal: usize,
    /// Steps since the current goal was assigned plus `tie_break`.
    pub priority: f64,
    /// Fixed fractional tie-breaker in `(0, 1)`.
    pub tie_break: f64,
}

impl AgentState {
    pub fn new(id: usize, position: usize, goal: usize, seed: u64) -> Self {
        // keep strictly inside (0, 1)
        let tie_break = (seeding::unit(seed, &[seeding::PRIORITY, id as u64]) * 0.998) + 0.001;
        AgentState { id, position, goal, priority: tie_break, tie_break }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedAction {
    pub dir: Direction,
    pub cell: usize,
    pub key: f64,
    tie: f64,
}

/// Candidate actions (valid moves plus Wait) sorted by ascending key, ties
/// broken by a per-`(seed, t, agent)` random value.
pub fn rank_actions(
    map: &GridMap,
    cost: &mut impl CostToGo,
    agent: usize,
    position: usize,
    seed: u64,
    t: usize,
) -> Vec<RankedAction> {
    let mut out = Vec::with_capacity(5);
    rank_into(map, cost, agent, position, seed, t, &mut out);
    out
}

fn rank_into(
    map: &GridMap,
    cost: &mut impl CostToGo,
    agent: usize,
    position: usize,
    seed: u64,
    t: usize,
    out: &mut Vec<RankedAction>,
) {
    out.clear();
    for d in Direction::ALL {
        if let Some(cell) = map.step(position, d) {
            let key = cost.action_key(agent, position, d, cell);
            let tie = seeding::unit(seed, &[seeding::TIE_BREAK, t as u64, agent as u64, d as u64]);
            out.push(RankedAction { dir: d, cell, key, tie });
        }
    }
    out.sort_by(|a, b| a.key.total_cmp(&b.key).then(a.tie.total_cmp(&b.tie)));
}

/// Reusable PIBT workspace.
#[derive(Debug, Clone)]
pub struct Pibt {
    occupied_now: Vec<u32>,
    occupied_next: Vec<u32>,
    next: Vec<u32>,
    candidates: Vec<Vec<RankedAction>>,
    swap: bool,
    seed: u64,
}

struct Step<'a, C> {
    map: &'a GridMap,
    positions: &'a [usize],
    goals: &'a [usize],
    cost: &'a mut C,
    t: usize,
}

impl Pibt {
    pub fn new(num_cells: usize, swap: bool, seed: u64) -> Self {
        Pibt {
            occupied_now: vec![NONE; num_cells],
            occupied_next: vec![NONE; num_cells],
            next: Vec::new(),
            candidates: Vec::new(),
            swap,
            seed,
        }
    }

    /// Plans one collision-free joint move. Agents are processed in
    /// descending priority; returns every agent's next cell.
    pub fn step(
        &mut self,
        map: &GridMap,
        agents: &[AgentState],
        cost: &mut impl CostToGo,
        t: usize,
    ) -> Vec<usize> {
        let positions: Vec<usize> = agents.iter().map(|a| a.position).collect();
        let goals: Vec<usize> = agents.iter().map(|a| a.goal).collect();
        let mut order: Vec<usize> = (0..agents.len()).collect();
        order.sort_by(|&a, &b| agents[b].priority.total_cmp(&agents[a].priority).then(a.cmp(&b)));

        self.next.clear();
        self.next.resize(agents.len(), NONE);
        if self.candidates.len() < agents.len() {
            self.candidates.resize_with(agents.len(), || Vec::with_capacity(5));
        }
        for (i, &p) in positions.iter().enumerate() {
            debug_assert_eq!(self.occupied_now[p], NONE, "two agents share a cell");
            self.occupied_now[p] = i as u32;
        }

        let mut ctx = Step { map, positions: &positions, goals: &goals, cost, t };
        for &i in &order {
            if self.next[i] == NONE {
                self.plan(i, &mut ctx);
            }
        }

        let out: Vec<usize> = self.next.iter().map(|&n| n as usize).collect();
        for &p in &positions {
            self.occupied_now[p] = NONE;
        }
        for &n in &out {
            self.occupied_next[n] = NONE;
        }
        out
    }

    fn plan<C: CostToGo>(&mut self, i: usize, ctx: &mut Step<'_, C>) -> bool {
        let pos = ctx.positions[i];
        let mut cands = std::mem::take(&mut self.candidates[i]);
        rank_into(ctx.map, ctx.cost, i, pos, self.seed, ctx.t, &mut cands);

        let swap_agent = if self.swap { self.swap_partner(i, cands[0].cell, ctx) } else { None };
        if swap_agent.is_some() {
            cands.reverse();
        }

        let mut planned = false;
        for (k, cand) in cands.iter().enumerate() {
            let u = cand.cell;
            if self.occupied_next[u] != NONE {
                continue;
            }
            let ak = self.occupied_now[u];
            // never swap places with the current occupant
            if ak != NONE && self.next[ak as usize] == pos as u32 {
                continue;
            }
            self.occupied_next[u] = i as u32;
            self.next[i] = u as u32;
            if ak == NONE || u == pos {
                planned = true;
                break;
            }
            if self.next[ak as usize] == NONE && !self.plan(ak as usize, ctx) {
                continue;
            }
            if k == 0 {
                if let Some(s) = swap_agent {
                    if self.next[s] == NONE && self.occupied_next[pos] == NONE {
                        self.next[s] = pos as u32;
                        self.occupied_next[pos] = s as u32;
                    }
                }
            }
            planned = true;
            break;
        }
        self.candidates[i] = cands;
        if !planned {
            self.occupied_next[pos] = i as u32;
            self.next[i] = pos as u32;
        }
        planned
    }

    // Returns the agent to pull along when a swap is both required and
    // possible for agent `i`, whose top choice is `first`.
    fn swap_partner<C: CostToGo>(&mut self, i: usize, first: usize, ctx: &mut Step<'_, C>) -> Option<usize> {
        let pos = ctx.positions[i];
        if first == pos {
            return None;
        }
        let aj = self.occupied_now[first];
        if aj != NONE
            && self.next[aj as usize] == NONE
            && self.swap_required(i, aj as usize, pos, first, ctx)
            && self.swap_possible(first, pos, ctx)
        {
            return Some(aj as usize);
        }
        for &u in ctx.map.adjacency(pos) {
            if u == NO_CELL {
                continue;
            }
            let ak = self.occupied_now[u as usize];
            if ak == NONE || u as usize == first {
                continue;
            }
            if self.swap_required(ak as usize, i, pos, first, ctx) && self.swap_possible(first, pos, ctx) {
                return Some(ak as usize);
            }
        }
        None
    }

    // Cells the puller cannot be pulled into: the pusher's cell and dead
    // ends occupied by an agent sitting on its own goal.
    fn pull_options<C: CostToGo>(&self, v_puller: usize, v_pusher: usize, ctx: &Step<'_, C>) -> (usize, usize) {
        let mut n = ctx.map.degree(v_puller);
        let mut last = NONE as usize;
        for &u in ctx.map.adjacency(v_puller) {
            if u == NO_CELL {
                continue;
            }
            let u = u as usize;
            let a = self.occupied_now[u];
            if u == v_pusher || (ctx.map.degree(u) == 1 && a != NONE && ctx.goals[a as usize] == u) {
                n -= 1;
            } else {
                last = u;
            }
        }
        (n, last)
    }

    fn swap_required<C: CostToGo>(
        &self,
        pusher: usize,
        puller: usize,
        pusher_origin: usize,
        puller_origin: usize,
        ctx: &mut Step<'_, C>,
    ) -> bool {
        let (mut v_pusher, mut v_puller) = (pusher_origin, puller_origin);
        let mut guard = ctx.map.num_cells();
        while ctx.cost.distance(pusher, v_puller) < ctx.cost.distance(pusher, v_pusher) {
            let (n, tmp) = self.pull_options(v_puller, v_pusher, ctx);
            if n >= 2 {
                return false;
            }
            if n == 0 || guard == 0 {
                break;
            }
            guard -= 1;
            v_pusher = v_puller;
            v_puller = tmp;
        }
        let d_pusher_at_pusher = ctx.cost.distance(pusher, v_pusher);
        ctx.cost.distance(puller, v_pusher) < ctx.cost.distance(puller, v_puller)
            && (d_pusher_at_pusher == 0.0 || ctx.cost.distance(pusher, v_puller) < d_pusher_at_pusher)
    }

    fn swap_possible<C: CostToGo>(&self, pusher_origin: usize, puller_origin: usize, ctx: &Step<'_, C>) -> bool {
        let (mut v_pusher, mut v_puller) = (pusher_origin, puller_origin);
        let mut guard = ctx.map.num_cells();
        while v_puller != pusher_origin && guard > 0 {
            guard -= 1;
            let (n, tmp) = self.pull_options(v_puller, v_pusher, ctx);
            if n >= 2 {
                return true;
            }
            if n == 0 {
                return false;
            }
            v_pusher = v_puller;
            v_puller = tmp;
        }
        false
    }
}

/// Converts planned next cells into per-agent directions.
pub fn joint_action(map: &GridMap, agents: &[AgentState], next: &[usize]) -> Vec<Direction> {
    agents
        .iter()
        .zip(next)
        .map(|(a, &n)| map.direction_between(a.position, n).expect("PIBT only plans adjacent moves"))
        .collect()
}

/// Gives every agent standing on its goal a fresh goal this timestep and
/// ages the priorities of everyone else. Returns the ids of agents that
/// finished a goal.
///
/// A fresh goal equal to the agent's own cell is redrawn once; if it
/// persists it is counted on the next step.
pub fn assign_on_arrival(
    agents: &mut [AgentState],
    tasks: &mut [AgentTaskState],
    system: &mut TaskSystem,
) -> Result<Vec<usize>> {
    let mut finished = Vec::new();
    for (agent, task) in agents.iter_mut().zip(tasks.iter_mut()) {
        if agent.position == agent.goal {
            system.complete_goal(task)?;
            if task.current_goal == agent.position {
                task.current_goal = system.sample_goal(task.agent_id, task.phase)?;
            }
            agent.goal = task.current_goal;
            agent.priority = agent.tie_break;
            finished.push(agent.id);
        } else {
            agent.priority += 1.0;
        }
    }
    Ok(finished)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::grid::Coord;
    use crate::guidance::GuidanceGraph;
    use crate::tasks::TaskDistribution;

    fn map(rows: &[&str]) -> Arc<GridMap> {
        let text = format!("type octile\nheight {}\nwidth {}\nmap\n{}\n", rows.len(), rows[0].len(), rows.join("\n"));
        Arc::new(GridMap::parse(&text).unwrap())
    }

    fn empty(n: usize) -> Arc<GridMap> {
        let rows: Vec<String> = (0..n).map(|_| ".".repeat(n)).collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        map(&refs)
    }

    #[test]
    fn goal_to_the_right_ranks_right_first() {
        let m = empty(5);
        let g = GuidanceGraph::uniform(m.clone(), true);
        let mut cache = HeuristicCache::new(&g);
        let goals = [m.index(Coord::new(2, 4))];
        let mut h = GuidedHeuristic { graph: &g, cache: &mut cache, goals: &goals };
        let r = rank_actions(&m, &mut h, 0, m.index(Coord::new(2, 2)), 1, 0);
        assert_eq!(r[0].dir, Direction::Right);
        assert_eq!(r.len(), 5);
    }

    #[test]
    fn expensive_wait_ranks_last() {
        let m = empty(5);
        let mut g = GuidanceGraph::uniform(m.clone(), true);
        let pos = Coord::new(2, 2);
        g.set_weight(pos, Direction::Wait, 10.0).unwrap();
        let mut cache = HeuristicCache::new(&g);
        // two equal-length routes (Right-Down or Down-Right)
        let goals = [m.index(Coord::new(3, 3))];
        let mut h = GuidedHeuristic { graph: &g, cache: &mut cache, goals: &goals };
        let r = rank_actions(&m, &mut h, 0, m.index(pos), 3, 0);
        let keys: Vec<(Direction, f64)> = r.iter().map(|a| (a.dir, a.key)).collect();
        assert_eq!(r.last().unwrap().dir, Direction::Wait);
        assert_eq!(keys.last().unwrap().1, 12.0);
        assert_eq!(r[0].key, 2.0);
        assert_eq!(r[1].key, 2.0);
    }

    #[test]
    fn at_goal_waits_first() {
        let m = empty(5);
        let g = GuidanceGraph::uniform(m.clone(), true);
        let mut cache = HeuristicCache::new(&g);
        let v = m.index(Coord::new(1, 1));
        let goals = [v];
        let mut h = GuidedHeuristic { graph: &g, cache: &mut cache, goals: &goals };
        let r = rank_actions(&m, &mut h, 0, v, 0, 0);
        assert_eq!((r[0].dir, r[0].key), (Direction::Wait, 1.0));
        assert!(r[1..].iter().all(|a| a.key == 2.0));
    }

    #[test]
    fn single_agent_follows_shortest_path() {
        let m = empty(8);
        let g = GuidanceGraph::uniform(m.clone(), true);
        let mut cache = HeuristicCache::new(&g);
        let goal = m.index(Coord::new(4, 5));
        let mut agents = vec![AgentState::new(0, m.index(Coord::new(2, 2)), goal, 0)];
        let mut pibt = Pibt::new(m.num_cells(), true, 0);
        let goals = [goal];
        let mut steps = 0;
        while agents[0].position != goal {
            let mut h = GuidedHeuristic { graph: &g, cache: &mut cache, goals: &goals };
            let next = pibt.step(&m, &agents, &mut h, steps);
            agents[0].position = next[0];
            steps += 1;
            assert!(steps <= 5);
        }
        assert_eq!(steps, 5);
    }

    #[test]
    fn higher_priority_pushes_lower() {
        // corridor: agent 0 at col 0 wants col 3; agent 1 idles at its goal col 1
        let m = map(&["....", "@@.@"]);
        let g = GuidanceGraph::uniform(m.clone(), true);
        let mut cache = HeuristicCache::new(&g);
        let mut agents = vec![
            AgentState::new(0, m.index(Coord::new(0, 0)), m.index(Coord::new(0, 3)), 0),
            AgentState::new(1, m.index(Coord::new(0, 1)), m.index(Coord::new(0, 1)), 0),
        ];
        agents[0].priority = 10.5;
        let goals = [agents[0].goal, agents[1].goal];
        let mut h = GuidedHeuristic { graph: &g, cache: &mut cache, goals: &goals };
        let mut pibt = Pibt::new(m.num_cells(), false, 0);
        let next = pibt.step(&m, &agents, &mut h, 0);
        assert_eq!(next[0], m.index(Coord::new(0, 1)));
        assert_ne!(next[1], m.index(Coord::new(0, 1)));
        assert_ne!(next[1], m.index(Coord::new(0, 0)));
    }

    #[test]
    fn arrivals_get_new_goals() {
        let m = empty(6);
        let mut sys = TaskSystem::new(m.clone(), TaskDistribution::StaticUniform, 3).unwrap();
        let mut tasks: Vec<AgentTaskState> = (0..4).map(|i| sys.init_agent(i).unwrap()).collect();
        let mut agents: Vec<AgentState> = tasks
            .iter()
            .enumerate()
            .map(|(i, t)| AgentState::new(i, if i < 3 { t.current_goal } else { (t.current_goal + 1) % 36 }, t.current_goal, 3))
            .collect();
        let old_goal_3 = agents[3].goal;
        let finished = assign_on_arrival(&mut agents, &mut tasks, &mut sys).unwrap();
        assert_eq!(finished, vec![0, 1, 2]);
        assert!(tasks[..3].iter().all(|t| t.goals_finished == 1));
        assert_eq!(tasks[3].goals_finished, 0);
        assert_eq!(agents[3].goal, old_goal_3);
        assert_eq!(agents[3].priority, agents[3].tie_break + 1.0);
        assert_eq!(agents[0].priority, agents[0].tie_break);
    }
}
