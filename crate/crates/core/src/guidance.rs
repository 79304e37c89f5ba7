//! Guidance graphs: per-cell directed action costs over a grid map.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Coord, Direction, GridMap};

/// Lower bound applied when policy outputs are installed as guidance weights.
pub const WEIGHT_FLOOR: f64 = 1e-3;

/// Dense `(channel, row, col)` tensor of edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl WeightTensor {
    pub fn filled(channels: usize, height: usize, width: usize, value: f64) -> Self {
        WeightTensor { channels, height, width, data: vec![value; channels * height * width] }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    #[inline]
    pub fn offset(&self, channel: usize, row: usize, col: usize) -> usize {
        (channel * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[self.offset(channel, row, col)]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, row: usize, col: usize, value: f64) {
        let i = self.offset(channel, row, col);
        self.data[i] = value;
    }
}

/// One serialized guidance edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub direction: Direction,
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceGraph {
    map: Arc<GridMap>,
    channels: usize,
    weights: Vec<f64>,
    valid: Vec<bool>,
    version: u64,
}

impl GuidanceGraph {
    /// All valid edges at weight 1, version 0. Without wait edges the graph
    /// has four channels and no self-loops.
    pub fn uniform(map: Arc<GridMap>, with_wait: bool) -> Self {
        let channels = if with_wait { 5 } else { 4 };
        let cells = map.num_cells();
        let mut valid = vec![false; channels * cells];
        for v in 0..cells {
            if !map.kind_at(v).is_traversable() {
                continue;
            }
            for d in &Direction::ALL[..channels] {
                if map.step(v, *d).is_some() {
                    valid[d.index() * cells + v] = true;
                }
            }
        }
        let weights = valid.iter().map(|&ok| if ok { 1.0 } else { f64::INFINITY }).collect();
        GuidanceGraph { map, channels, weights, valid, version: 0 }
    }

    pub fn map(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn has_wait_edges(&self) -> bool {
        self.channels == 5
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.map.height(), self.map.width()]
    }

    #[inline]
    pub fn is_valid_edge(&self, v: usize, d: Direction) -> bool {
        d.index() < self.channels && self.valid[d.index() * self.map.num_cells() + v]
    }

    /// Validity mask in tensor order.
    pub fn validity_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_edge_count(&self) -> usize {
        self.valid.iter().filter(|&&ok| ok).count()
    }

    /// Unchecked weight lookup; invalid edges read as infinity.
    #[inline]
    pub fn cost(&self, v: usize, d: Direction) -> f64 {
        if d.index() >= self.channels {
            return f64::INFINITY;
        }
        self.weights[d.index() * self.map.num_cells() + v]
    }

    pub fn action_cost(&self, at: Coord, d: Direction) -> Result<f64> {
        if !self.map.is_traversable(at) {
            return Err(Error::InvalidEdge(at, d));
        }
        let v = self.map.index(at);
        if !self.is_valid_edge(v, d) {
            return Err(Error::InvalidEdge(at, d));
        }
        Ok(self.cost(v, d))
    }

    /// Replaces every weight. Entries at invalid edges are ignored; every
    /// valid entry must be strictly positive and finite.
    pub fn set_all_weights(&mut self, tensor: &WeightTensor) -> Result<()> {
        let expected = self.shape();
        if tensor.shape() != expected {
            return Err(Error::ShapeMismatch { expected: expected.to_vec(), got: tensor.shape().to_vec() });
        }
        for (i, (&ok, &w)) in self.valid.iter().zip(&tensor.data).enumerate() {
            if ok && !(w > 0.0 && w.is_finite()) {
                let cells = self.map.num_cells();
                let c = self.map.coord(i % cells);
                let dir = Direction::from_index(i / cells).unwrap_or(Direction::Wait);
                return Err(Error::NonPositiveWeight { dir, row: c.row, col: c.col, value: w });
            }
        }
        for ((slot, &ok), &w) in self.weights.iter_mut().zip(&self.valid).zip(&tensor.data) {
            *slot = if ok { w } else { f64::INFINITY };
        }
        self.version += 1;
        Ok(())
    }

    /// Installs raw policy output, lifting every valid entry to at least
    /// [`WEIGHT_FLOOR`]. Non-finite entries are replaced by the floor.
    pub fn install_policy_output(&mut self, mut tensor: WeightTensor) -> Result<()> {
        for w in &mut tensor.data {
            *w = if w.is_finite() { w.max(WEIGHT_FLOOR) } else { WEIGHT_FLOOR };
        }
        self.set_all_weights(&tensor)
    }

    pub fn set_weight(&mut self, at: Coord, d: Direction, weight: f64) -> Result<()> {
        let v = self.map.cell(at)?;
        if !self.is_valid_edge(v, d) {
            return Err(Error::InvalidEdge(at, d));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::NonPositiveWeight { dir: d, row: at.row, col: at.col, value: weight });
        }
        self.weights[d.index() * self.map.num_cells() + v] = weight;
        self.version += 1;
        Ok(())
    }

    /// Current weights as a dense tensor (invalid entries are infinite).
    pub fn tensor(&self) -> WeightTensor {
        WeightTensor {
            channels: self.channels,
            height: self.map.height(),
            width: self.map.width(),
            data: self.weights.clone(),
        }
    }

    pub fn min_max_valid(&self) -> (f64, f64) {
        self.valid
            .iter()
            .zip(&self.weights)
            .filter(|(ok, _)| **ok)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &w)| (lo.min(w), hi.max(w)))
    }

    pub fn records(&self) -> Vec<WeightRecord> {
        let cells = self.map.num_cells();
        self.valid
            .iter()
            .enumerate()
            .filter(|(_, ok)| **ok)
            .map(|(i, _)| {
                let c = self.map.coord(i % cells);
                WeightRecord {
                    direction: Direction::from_index(i / cells).expect("channel index"),
                    row: c.row,
                    col: c.col,
                    weight: self.weights[i],
                }
            })
            .collect()
    }

    /// `direction,row,col,weight` lines for every valid edge.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,row,col,weight\n");
        for r in self.records() {
            let _ = writeln!(out, "{:?},{},{},{}", r.direction, r.row, r.col, r.weight);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.records())?)
    }

    /// Applies serialized records on top of a uniform graph.
    pub fn from_records(map: Arc<GridMap>, with_wait: bool, records: &[WeightRecord]) -> Result<Self> {
        let mut g = GuidanceGraph::uniform(map, with_wait);
        let mut tensor = g.tensor();
        for r in records {
            let at = Coord::new(r.row, r.col);
            let v = g.map.cell(at)?;
            if !g.is_valid_edge(v, r.direction) {
                return Err(Error::InvalidEdge(at, r.direction));
            }
            tensor.set(r.direction.index(), r.row, r.col, r.weight);
        }
        g.set_all_weights(&tensor)?;
        Ok(g)
    }

    pub fn from_csv(map: Arc<GridMap>, with_wait: bool, text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Config(format!("guidance csv line {}: {line:?}", n + 1));
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let direction = match f[0] {
                "Right" => Direction::Right,
                "Up" => Direction::Up,
                "Left" => Direction::Left,
                "Down" => Direction::Down,
                "Wait" => Direction::Wait,
                _ => return Err(bad()),
            };
            records.push(WeightRecord {
                direction,
                row: f[1].parse().map_err(|_| bad())?,
                col: f[2].parse().map_err(|_| bad())?,
                weight: f[3].parse().map_err(|_| bad())?,
            });
        }
        GuidanceGraph::from_records(map, with_wait, &records)
    }
}
