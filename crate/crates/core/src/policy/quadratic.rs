//! Guide-path-usage policies: the windowed quadratic, the fixed SUM_OVC
//! rule and its 48-parameter generalization.
//!
//! Window layout is `(4, s, s)` with channels in direction order
//! (Right, Up, Left, Down); window cell `(i, j)` sits at
//! `(center.row + i - s/2, center.col + j - s/2)`.
//!
//! Windowed-quadratic parameters, per output direction:
//! `[linear (ch, i, j)] [horizontal pairs (i, j)] [vertical pairs (i, j)]`.
//! A horizontal pair is `Right(i, j) * Left(i, j+1)`, a vertical pair is
//! `Down(i, j) * Up(i+1, j)`.

use crate::error::{Error, Result};
use crate::gpibt::GuidePathUsage;
use crate::grid::{Coord, Direction, GridMap};

use super::{Arch, GuidancePolicy};

pub const REDUCED_PARAMS: usize = 48;

pub fn wq_param_count(s: usize) -> usize {
    4 * (4 * s * s + 2 * s * s.saturating_sub(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub size: usize,
    /// `(4, size, size)`
    pub data: Vec<f64>,
}

impl Window {
    pub fn zeros(size: usize) -> Self {
        Window { size, data: vec![0.0; 4 * size * size] }
    }

    #[inline]
    pub fn get(&self, ch: usize, i: usize, j: usize) -> f64 {
        self.data[(ch * self.size + i) * self.size + j]
    }
}

pub fn windowed_observation(usage: &GuidePathUsage, center: Coord, s_win: usize) -> Result<Window> {
    if s_win.is_multiple_of(2) {
        return Err(Error::EvenWindow(s_win));
    }
    let mut win = Window::zeros(s_win);
    fill_window(usage, center, &mut win);
    Ok(win)
}

pub(crate) fn fill_window(usage: &GuidePathUsage, center: Coord, win: &mut Window) {
    let s = win.size;
    let half = (s / 2) as isize;
    let (h, w) = (usage.height() as isize, usage.width() as isize);
    win.data.fill(0.0);
    for i in 0..s {
        let r = center.row as isize + i as isize - half;
        if r < 0 || r >= h {
            continue;
        }
        for j in 0..s {
            let c = center.col as isize + j as isize - half;
            if c < 0 || c >= w {
                continue;
            }
            let v = r as usize * w as usize + c as usize;
            for ch in 0..4 {
                win.data[(ch * s + i) * s + j] = usage.get(v, Direction::MOVES[ch]) as f64;
            }
        }
    }
}

/// Raw outputs for the four outgoing directions of the window center.
pub fn wq_forward(policy: &GuidancePolicy, window: &Window) -> Result<[f64; 4]> {
    policy.expect_arch("windowed-quadratic")?;
    let Arch::WindowedQuadratic { window: s } = policy.arch else { unreachable!() };
    if window.size != s || window.data.len() != 4 * s * s {
        return Err(Error::ShapeMismatch { expected: vec![4, s, s], got: vec![window.data.len() / (window.size * window.size).max(1), window.size, window.size] });
    }
    Ok(wq_raw(&policy.theta, window))
}

fn wq_raw(theta: &[f64], win: &Window) -> [f64; 4] {
    let s = win.size;
    let lin = 4 * s * s;
    let per = lin + 2 * s * (s - 1);
    let (right, up, left, down) = (0, 1, 2, 3);
    let mut out = [0.0; 4];
    for (o, slot) in out.iter_mut().enumerate() {
        let p = &theta[o * per..(o + 1) * per];
        let mut acc = 0.0;
        for (k, &x) in win.data.iter().enumerate() {
            if x != 0.0 {
                acc += p[k] * x;
            }
        }
        let mut k = lin;
        for i in 0..s {
            for j in 0..s - 1 {
                acc += p[k] * win.get(right, i, j) * win.get(left, i, j + 1);
                k += 1;
            }
        }
        for i in 0..s - 1 {
            for j in 0..s {
                acc += p[k] * win.get(down, i, j) * win.get(up, i + 1, j);
                k += 1;
            }
        }
        *slot = acc;
    }
    out
}

/// Edge costs `max(out, 0) + 1` for the four outgoing directions.
pub fn wq_costs(policy: &GuidancePolicy, window: &Window) -> Result<[f64; 4]> {
    Ok(wq_forward(policy, window)?.map(|x| x.max(0.0) + 1.0))
}

pub(crate) fn wq_costs_unchecked(theta: &[f64], window: &Window) -> [f64; 4] {
    wq_raw(theta, window).map(|x| x.max(0.0) + 1.0)
}

/// `U(u,v) U(v,u) + U(v,u) + 1/2 sum_{u' in N(v)} U(v,u')` for the edge
/// leaving `u` in direction `d`.
pub fn hm_sum_ovc(usage: &GuidePathUsage, map: &GridMap, u: usize, d: Direction) -> Result<f64> {
    let v = valid_head(map, u, d)?;
    Ok(hm_unchecked(usage, u, v, d))
}

#[inline]
pub(crate) fn hm_unchecked(usage: &GuidePathUsage, u: usize, v: usize, d: Direction) -> f64 {
    let forward = usage.get(u, d) as f64;
    let back = usage.get(v, d.opposite()) as f64;
    let out: u32 = Direction::MOVES.iter().map(|&e| usage.get(v, e)).sum();
    forward * back + back + 0.5 * out as f64
}

fn valid_head(map: &GridMap, u: usize, d: Direction) -> Result<usize> {
    if d == Direction::Wait || u >= map.num_cells() || !map.kind_at(u).is_traversable() {
        return Err(Error::InvalidEdge(map.coord(u.min(map.num_cells() - 1)), d));
    }
    map.step(u, d).ok_or_else(|| Error::InvalidEdge(map.coord(u), d))
}

/// `sum_j p[i][j][0] U(u_j,v) U(v,u_j) + p[i][j][1] U(v,u_j) + p[i][j][2] U(v,u_j)`
/// where `v` is the head of the edge, `u_j` is `v`'s neighbor in direction
/// `j`, and `i` is the slot of the tail `u` seen from `v`.
pub fn reduced_forward(policy: &GuidancePolicy, usage: &GuidePathUsage, map: &GridMap, u: usize, d: Direction) -> Result<f64> {
    policy.expect_arch("reduced-quadratic")?;
    let v = valid_head(map, u, d)?;
    Ok(reduced_unchecked(&policy.theta, usage, map, v, d))
}

#[inline]
pub(crate) fn reduced_unchecked(theta: &[f64], usage: &GuidePathUsage, map: &GridMap, v: usize, d: Direction) -> f64 {
    let i = d.opposite().index();
    let mut acc = 0.0;
    for (j, &dj) in Direction::MOVES.iter().enumerate() {
        let Some(uj) = map.step(v, dj) else { continue };
        let out = usage.get(v, dj) as f64;
        let inc = usage.get(uj, dj.opposite()) as f64;
        let p = &theta[(i * 4 + j) * 3..(i * 4 + j) * 3 + 3];
        acc += p[0] * inc * out + p[1] * out + p[2] * out;
    }
    acc
}

/// Parameters under which the reduced policy equals SUM_OVC.
pub fn hm_reproducing_theta() -> Vec<f64> {
    let mut theta = vec![0.0; REDUCED_PARAMS];
    for i in 0..4 {
        theta[(i * 4 + i) * 3] = 1.0;
        theta[(i * 4 + i) * 3 + 1] = 1.0;
        for j in 0..4 {
            theta[(i * 4 + j) * 3 + 2] = 0.5;
        }
    }
    theta
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn empty(h: usize, w: usize) -> Arc<GridMap> {
        let body: Vec<String> = (0..h).map(|_| ".".repeat(w)).collect();
        Arc::new(GridMap::parse(&format!("type octile\nheight {h}\nwidth {w}\nmap\n{}\n", body.join("\n"))).unwrap())
    }

    #[test]
    fn counts() {
        assert_eq!(wq_param_count(5), 560);
        assert_eq!(hm_reproducing_theta().len(), 48);
    }

    #[test]
    fn zero_theta_and_zero_usage() {
        let map = empty(6, 6);
        let usage = GuidePathUsage::new(&map);
        let win = windowed_observation(&usage, Coord::new(0, 0), 5).unwrap();
        assert!(win.data.iter().all(|&x| x == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = GuidancePolicy::new(Arch::windowed_quadratic(), (0..560).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        assert_eq!(wq_forward(&p, &win).unwrap(), [0.0; 4]);
        let z = GuidancePolicy::zeros(Arch::windowed_quadratic());
        let mut busy = GuidePathUsage::new(&map);
        busy.add_path(&map, &[0, 1, 2, 8, 14]);
        let w2 = windowed_observation(&busy, Coord::new(1, 1), 5).unwrap();
        assert_eq!(wq_costs(&z, &w2).unwrap(), [1.0; 4]);
        assert!(matches!(windowed_observation(&usage, Coord::new(0, 0), 4), Err(Error::EvenWindow(4))));
    }

    #[test]
    fn rightward_path_through_center_row() {
        let map = empty(7, 7);
        let mut usage = GuidePathUsage::new(&map);
        let row = 3;
        let path: Vec<usize> = (0..7).map(|c| map.index(Coord::new(row, c))).collect();
        usage.add_path(&map, &path);
        let win = windowed_observation(&usage, Coord::new(3, 3), 5).unwrap();
        for ch in 0..4 {
            for i in 0..5 {
                for j in 0..5 {
                    let expect = if ch == 0 && i == 2 { 1.0 } else { 0.0 };
                    assert_eq!(win.get(ch, i, j), expect, "ch {ch} ({i},{j})");
                }
            }
        }
        // corner: out-of-bounds part stays zero
        let corner = windowed_observation(&usage, Coord::new(0, 0), 5).unwrap();
        assert!(corner.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadratic_terms_address_contra_flow_pairs() {
        let mut win = Window::zeros(5);
        // Right at (1,2), Left at (1,3)
        win.data[5 + 2] = 2.0;
        win.data[(2 * 5 + 1) * 5 + 3] = 3.0;
        let mut theta = vec![0.0; 560];
        let per = 140;
        // horizontal pair (1,2) is index 100 + 1*4 + 2 for output 0
        theta[100 + 4 + 2] = 1.0;
        // vertical pairs must not see it
        for k in 120..140 {
            theta[per + k] = 1.0;
        }
        let p = GuidancePolicy::new(Arch::windowed_quadratic(), theta).unwrap();
        assert_eq!(wq_forward(&p, &win).unwrap(), [6.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hm_hand_example() {
        // u = (1,1), v = (1,2): U(u,v)=2, U(v,u)=3, v's outgoing {3,1,0,0}
        let map = empty(3, 4);
        let mut usage = GuidePathUsage::new(&map);
        let (u, v) = (map.index(Coord::new(1, 1)), map.index(Coord::new(1, 2)));
        usage.set(u, Direction::Right, 2);
        usage.set(v, Direction::Left, 3);
        usage.set(v, Direction::Up, 1);
        assert_eq!(hm_sum_ovc(&usage, &map, u, Direction::Right).unwrap(), 11.0);
        assert_eq!(hm_sum_ovc(&GuidePathUsage::new(&map), &map, u, Direction::Right).unwrap(), 0.0);
        assert!(hm_sum_ovc(&usage, &map, 0, Direction::Up).is_err());
    }

    #[test]
    fn reduced_reproduces_hm() {
        let map = empty(5, 5);
        let p = GuidancePolicy::new(Arch::ReducedQuadratic, hm_reproducing_theta()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut usage = GuidePathUsage::new(&map);
            for v in 0..map.num_cells() {
                for (d, _) in map.moves(v).collect::<Vec<_>>() {
                    usage.set(v, d, rng.random_range(0..6));
                }
            }
            for u in 0..map.num_cells() {
                for (d, _) in map.moves(u).collect::<Vec<_>>() {
                    let a = reduced_forward(&p, &usage, &map, u, d).unwrap();
                    let b = hm_sum_ovc(&usage, &map, u, d).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
        let z = GuidancePolicy::zeros(Arch::ReducedQuadratic);
        assert_eq!(reduced_forward(&z, &GuidePathUsage::new(&map), &map, 0, Direction::Right).unwrap(), 0.0);
    }
}
