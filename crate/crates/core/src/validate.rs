//! Independent trajectory checker.
//!
//! Works purely on coordinates and cell kinds: it re-derives adjacency,
//! vertex conflicts, swap conflicts and goal completions from a recorded
//! trajectory without touching any planner code.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::{Coord, GridMap};

/// Positions at every timestep `0..=N` and the goal each agent held during
/// every step `0..N`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub positions: Vec<Vec<Coord>>,
    pub goals: Vec<Vec<Coord>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.positions.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub vertex_conflicts: usize,
    pub swap_conflicts: usize,
    pub invalid_moves: usize,
    pub waits: usize,
    pub finished_per_step: Vec<usize>,
    pub first_problem: Option<String>,
}

impl ValidationSummary {
    pub fn conflicts(&self) -> usize {
        self.vertex_conflicts + self.swap_conflicts + self.invalid_moves
    }

    pub fn is_valid(&self) -> bool {
        self.conflicts() == 0
    }

    pub fn finished_total(&self) -> usize {
        self.finished_per_step.iter().sum()
    }
}

fn passable(map: &GridMap, c: Coord) -> bool {
    c.row < map.height() && c.col < map.width() && map.kind(c).is_some_and(|k| k.is_traversable())
}

pub fn validate_trajectory(map: &GridMap, traj: &Trajectory) -> ValidationSummary {
    let mut s = ValidationSummary::default();
    let note = |s: &mut ValidationSummary, msg: String| {
        if s.first_problem.is_none() {
            s.first_problem = Some(msg);
        }
    };

    for (t, frame) in traj.positions.iter().enumerate() {
        let mut seen: HashMap<Coord, usize> = HashMap::with_capacity(frame.len());
        for (i, &p) in frame.iter().enumerate() {
            if !passable(map, p) {
                s.invalid_moves += 1;
                note(&mut s, format!("t={t}: agent {i} on non-traversable {p}"));
            }
            if let Some(j) = seen.insert(p, i) {
                s.vertex_conflicts += 1;
                note(&mut s, format!("t={t}: agents {j} and {i} share {p}"));
            }
        }
    }

    for t in 0..traj.steps() {
        let (now, next) = (&traj.positions[t], &traj.positions[t + 1]);
        let mut from_to: HashMap<(Coord, Coord), usize> = HashMap::with_capacity(now.len());
        for (i, (&a, &b)) in now.iter().zip(next).enumerate() {
            if a == b {
                s.waits += 1;
            } else if a.manhattan(b) != 1 {
                s.invalid_moves += 1;
                note(&mut s, format!("t={t}: agent {i} jumps {a} -> {b}"));
            } else {
                from_to.insert((a, b), i);
            }
        }
        for (&(a, b), &i) in &from_to {
            if a < b {
                if let Some(&j) = from_to.get(&(b, a)) {
                    s.swap_conflicts += 1;
                    note(&mut s, format!("t={t}: agents {i} and {j} swap {a} <-> {b}"));
                }
            }
        }
        let finished = traj
            .goals
            .get(t)
            .map_or(0, |goals| next.iter().zip(goals).filter(|(p, g)| p == g).count());
        s.finished_per_step.push(finished);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> GridMap {
        GridMap::parse("type octile\nheight 2\nwidth 3\nmap\n...\n..@\n").unwrap()
    }

    fn c(r: usize, col: usize) -> Coord {
        Coord::new(r, col)
    }

    #[test]
    fn detects_vertex_and_swap_conflicts() {
        let traj = Trajectory {
            positions: vec![vec![c(0, 0), c(0, 1)], vec![c(0, 1), c(0, 0)], vec![c(0, 1), c(0, 1)]],
            goals: vec![vec![c(1, 1), c(1, 1)]; 2],
        };
        let s = validate_trajectory(&map(), &traj);
        assert_eq!(s.swap_conflicts, 1);
        assert_eq!(s.vertex_conflicts, 1);
        assert!(!s.is_valid());
    }

    #[test]
    fn detects_obstacles_and_jumps() {
        let traj = Trajectory {
            positions: vec![vec![c(0, 0)], vec![c(1, 2)], vec![c(0, 0)]],
            goals: vec![vec![c(0, 0)]; 2],
        };
        let s = validate_trajectory(&map(), &traj);
        assert_eq!(s.invalid_moves, 3);
        assert_eq!(s.finished_per_step, vec![0, 1]);
    }

    #[test]
    fn counts_waits_and_completions() {
        let traj = Trajectory {
            positions: vec![vec![c(0, 0), c(1, 0)], vec![c(0, 1), c(1, 0)], vec![c(0, 2), c(1, 1)]],
            goals: vec![vec![c(0, 2), c(1, 0)], vec![c(0, 2), c(1, 1)]],
        };
        let s = validate_trajectory(&map(), &traj);
        assert!(s.is_valid());
        assert_eq!(s.waits, 1);
        assert_eq!(s.finished_per_step, vec![1, 2]);
    }
}
