//! FHP-I lattice gas on a periodic hexagonal grid.
//!
//! Cells use "odd-r" offset coordinates: row `y` runs along the x axis and
//! odd rows are shifted half a cell to the right. Direction `d ∈ 0..6` points
//! at `60°·d`, counter-clockwise from +x, with +y upward. The grid wraps in
//! both axes, so the height must be even.
//!
//! One [`LatticeState::step`] is collision then propagation:
//!
//! * a head-on pair `{d, d+3}` rotates by one direction, clockwise on even
//!   time steps and counter-clockwise on odd ones;
//! * the symmetric triples `{0,2,4}` and `{1,3,5}` swap;
//! * everything else passes through;
//! * particles then hop one cell, except that a particle whose target is an
//!   obstacle stays put with its direction reversed (bounce-back).
//!
//! The rule is a bijection on states, and [`LatticeState::step_reverse`]
//! undoes a step bit-exactly as long as no stream cell forces particles in.

mod trm;

pub use trm::*;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

pub const DIRECTIONS: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("lattice must be at least 2×2 with an even height, got {width}×{height}")]
    BadDimensions { width: usize, height: usize },
    #[error("cell ({x}, {y}) is outside the {width}×{height} lattice")]
    OutOfBounds { x: usize, y: usize, width: usize, height: usize },
    #[error("cell ({x}, {y}) is an obstacle")]
    ObstacleCell { x: usize, y: usize },
    #[error("mirror has no cells")]
    EmptyMirror,
    #[error("recording covers {recorded} steps, replay expects {expected}")]
    DurationMismatch { recorded: usize, expected: usize },
    #[error("window {start}..={end} does not fit in {len} replayed states")]
    BadWindow { start: usize, end: usize, len: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
}

pub type Result<T> = std::result::Result<T, LatticeError>;

/// Cartesian unit vectors of the six directions.
pub const UNIT: [(f64, f64); DIRECTIONS] = {
    const S: f64 = 0.866_025_403_784_438_6; // √3 / 2
    [(1.0, 0.0), (0.5, S), (-0.5, S), (-1.0, 0.0), (-0.5, -S), (0.5, -S)]
};

/// Direction vectors in the integer basis `(e0, e1)`, for exact momentum sums.
pub const LATTICE_VECTOR: [(i64, i64); DIRECTIONS] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

#[inline]
pub const fn opposite(d: usize) -> usize {
    (d + 3) % DIRECTIONS
}

const fn rotate_bits(state: u8, clockwise: bool) -> u8 {
    let mut out = 0u8;
    let mut d = 0;
    while d < DIRECTIONS {
        if state & (1 << d) != 0 {
            let nd = if clockwise { (d + 5) % 6 } else { (d + 1) % 6 };
            out |= 1 << nd;
        }
        d += 1;
    }
    out
}

const fn collision_table(clockwise: bool) -> [u8; 64] {
    let mut t = [0u8; 64];
    let mut s = 0;
    while s < 64 {
        let st = s as u8;
        t[s] = if st == 0b001001 || st == 0b010010 || st == 0b100100 {
            rotate_bits(st, clockwise)
        } else if st == 0b010101 {
            0b101010
        } else if st == 0b101010 {
            0b010101
        } else {
            st
        };
        s += 1;
    }
    t
}

/// Per-cell collision outcome, indexed by `[time parity][occupancy]`.
/// Parity 0 (even) rotates head-on pairs clockwise.
pub const COLLIDE: [[u8; 64]; 2] = [collision_table(true), collision_table(false)];

/// Inverse collision: the opposite chirality at the same parity.
pub const UNCOLLIDE: [[u8; 64]; 2] = [collision_table(false), collision_table(true)];

/// Immutable grid geometry: dimensions and the neighbour table.
#[derive(Debug, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    neighbors: Vec<[u32; DIRECTIONS]>,
}

impl Grid {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 || height % 2 != 0 {
            return Err(LatticeError::BadDimensions { width, height });
        }
        let mut neighbors = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let mut n = [0u32; DIRECTIONS];
                for (d, slot) in n.iter_mut().enumerate() {
                    let (nx, ny) = offset_step(x as i64, y as i64, d);
                    let nx = nx.rem_euclid(width as i64) as usize;
                    let ny = ny.rem_euclid(height as i64) as usize;
                    *slot = (ny * width + nx) as u32;
                }
                neighbors.push(n);
            }
        }
        Ok(Self {
            width,
            height,
            neighbors,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    #[inline]
    pub fn neighbor(&self, i: usize, d: usize) -> usize {
        self.neighbors[i][d] as usize
    }

    pub fn check(&self, x: usize, y: usize) -> Result<usize> {
        if x >= self.width || y >= self.height {
            return Err(LatticeError::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.index(x, y))
    }

    /// Cartesian center of a cell (unit spacing between neighbours).
    pub fn position(&self, i: usize) -> (f64, f64) {
        let (x, y) = self.coords(i);
        (x as f64 + 0.5 * (y % 2) as f64, y as f64 * UNIT[1].1)
    }

    /// Hop count between two cells, taking the shortest periodic image.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let (aq, ar) = axial(ax as i64, ay as i64);
        let (w, h) = (self.width as i64, self.height as i64);
        let mut best = i64::MAX;
        for sy in [-h, 0, h] {
            for sx in [-w, 0, w] {
                let (bq, br) = axial(bx as i64 + sx, by as i64 + sy);
                let (dq, dr) = (bq - aq, br - ar);
                let d = (dq.abs() + dr.abs() + (dq + dr).abs()) / 2;
                best = best.min(d);
            }
        }
        best as usize
    }

    /// Cells within `radius` hops of `center`.
    pub fn disc(&self, center: usize, radius: usize) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.distance(center, i) <= radius).collect()
    }
}

fn offset_step(x: i64, y: i64, d: usize) -> (i64, i64) {
    let odd = y.rem_euclid(2) == 1;
    match d {
        0 => (x + 1, y),
        1 => (x + odd as i64, y + 1),
        2 => (x - (!odd) as i64, y + 1),
        3 => (x - 1, y),
        4 => (x - (!odd) as i64, y - 1),
        5 => (x + odd as i64, y - 1),
        _ => unreachable!("direction out of range"),
    }
}

fn axial(x: i64, y: i64) -> (i64, i64) {
    (x - (y - y.rem_euclid(2)) / 2, y)
}

/// A cell that forces a direction bit on every `period`-th step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamCell {
    pub x: usize,
    pub y: usize,
    pub direction: usize,
    pub period: u64,
}

/// Whether [`LatticeState::step_reverse`] undid the step exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reversal {
    Exact,
    /// Stream cells inject particles, so the forward step was not invertible.
    IrreversibleSource,
}

/// Occupancy bit-planes (packed as one byte per cell), obstacles and streams.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    grid: Arc<Grid>,
    cells: Vec<u8>,
    obstacle: Vec<bool>,
    streams: Vec<StreamCell>,
    time: u64,
}

impl LatticeState {
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        let grid = Arc::new(Grid::new(width, height)?);
        let n = grid.len();
        Ok(Self {
            grid,
            cells: vec![0; n],
            obstacle: vec![false; n],
            streams: Vec::new(),
            time: 0,
        })
    }

    /// Every free cell gets each direction independently with probability `density`.
    pub fn random(width: usize, height: usize, density: f64, seed: u64) -> Result<Self> {
        let mut s = Self::empty(width, height)?;
        s.fill_random(density, seed)?;
        Ok(s)
    }

    pub fn fill_random(&mut self, density: f64, seed: u64) -> Result<()> {
        if !(0.0..=1.0).contains(&density) {
            return Err(LatticeError::Param(format!("density {density} outside [0, 1]")));
        }
        let mut rng = seed::derived_rng(seed, &[0xF11]);
        for (i, c) in self.cells.iter_mut().enumerate() {
            let mut bits = 0u8;
            for d in 0..DIRECTIONS {
                if rng.random::<f64>() < density {
                    bits |= 1 << d;
                }
            }
            if !self.obstacle[i] {
                *c = bits;
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.grid.width
    }

    pub fn height(&self) -> usize {
        self.grid.height
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn cell(&self, i: usize) -> u8 {
        self.cells[i]
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn time_parity(&self) -> u8 {
        (self.time & 1) as u8
    }

    pub fn set_time(&mut self, time: u64) {
        self.time = time;
    }

    pub fn is_obstacle(&self, i: usize) -> bool {
        self.obstacle[i]
    }

    pub fn obstacles(&self) -> &[bool] {
        &self.obstacle
    }

    pub fn streams(&self) -> &[StreamCell] {
        &self.streams
    }

    /// Marks a cell as an obstacle, discarding any particles in it.
    pub fn set_obstacle(&mut self, x: usize, y: usize) -> Result<()> {
        let i = self.grid.check(x, y)?;
        self.obstacle[i] = true;
        self.cells[i] = 0;
        Ok(())
    }

    /// Obstacle ring along the outer rows and columns.
    pub fn add_walls(&mut self) {
        let (w, h) = (self.width(), self.height());
        for i in 0..self.grid.len() {
            let (x, y) = self.grid.coords(i);
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                self.obstacle[i] = true;
                self.cells[i] = 0;
            }
        }
    }

    pub fn add_stream(&mut self, stream: StreamCell) -> Result<()> {
        let i = self.grid.check(stream.x, stream.y)?;
        if self.obstacle[i] {
            return Err(LatticeError::ObstacleCell { x: stream.x, y: stream.y });
        }
        if stream.direction >= DIRECTIONS || stream.period == 0 {
            return Err(LatticeError::Param("stream needs a direction in 0..6 and a positive period".into()));
        }
        self.streams.push(stream);
        Ok(())
    }

    pub fn set_cell(&mut self, x: usize, y: usize, bits: u8) -> Result<()> {
        let i = self.grid.check(x, y)?;
        if self.obstacle[i] {
            return Err(LatticeError::ObstacleCell { x, y });
        }
        self.cells[i] = bits & 0x3f;
        Ok(())
    }

    pub fn mass(&self) -> u64 {
        self.cells.iter().map(|c| u64::from(c.count_ones())).sum()
    }

    /// Total momentum in the `(e0, e1)` integer basis.
    pub fn momentum(&self) -> (i64, i64) {
        let mut p = (0, 0);
        for &c in &self.cells {
            let (a, b) = cell_momentum(c);
            p.0 += a;
            p.1 += b;
        }
        p
    }

    pub fn density(&self, i: usize) -> u32 {
        self.cells[i].count_ones()
    }

    fn collide(&mut self, table: &[u8; 64]) {
        for (c, &blocked) in self.cells.iter_mut().zip(&self.obstacle) {
            if !blocked {
                *c = table[*c as usize];
            }
        }
    }

    fn propagate(&mut self) {
        let mut next = vec![0u8; self.cells.len()];
        for (i, &c) in self.cells.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for d in 0..DIRECTIONS {
                if c & (1 << d) != 0 {
                    let j = self.grid.neighbor(i, d);
                    if self.obstacle[j] {
                        next[i] |= 1 << opposite(d);
                    } else {
                        next[j] |= 1 << d;
                    }
                }
            }
        }
        self.cells = next;
    }

    fn unpropagate(&mut self) {
        let mut prev = vec![0u8; self.cells.len()];
        for (j, &c) in self.cells.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for d in 0..DIRECTIONS {
                if c & (1 << d) != 0 {
                    let src = self.grid.neighbor(j, opposite(d));
                    if self.obstacle[src] {
                        prev[j] |= 1 << opposite(d);
                    } else {
                        prev[src] |= 1 << d;
                    }
                }
            }
        }
        self.cells = prev;
    }

    fn apply_streams(&mut self) {
        for s in &self.streams {
            if self.time % s.period == 0 {
                let i = self.grid.index(s.x, s.y);
                self.cells[i] |= 1 << s.direction;
            }
        }
    }

    /// One collision + propagation update.
    pub fn step(&mut self) {
        self.step_with(|_| {});
    }

    /// Like [`step`](Self::step), calling `inject` between collision and
    /// propagation so injected particles move before they next collide.
    pub fn step_with(&mut self, inject: impl FnOnce(&mut [u8])) {
        let parity = self.time_parity() as usize;
        self.collide(&COLLIDE[parity]);
        inject(&mut self.cells);
        for (c, &blocked) in self.cells.iter_mut().zip(&self.obstacle) {
            if blocked {
                *c = 0;
            }
        }
        self.propagate();
        self.apply_streams();
        self.time += 1;
    }

    /// Undoes one [`step`](Self::step).
    ///
    /// Streams are not subtracted back out, so with any stream present the
    /// result is only an approximation and [`Reversal::IrreversibleSource`]
    /// is returned.
    pub fn step_reverse(&mut self) -> Reversal {
        self.time = self.time.wrapping_sub(1);
        let parity = self.time_parity() as usize;
        self.unpropagate();
        self.collide(&UNCOLLIDE[parity]);
        if self.streams.is_empty() {
            Reversal::Exact
        } else {
            Reversal::IrreversibleSource
        }
    }

    /// Seeded density pulse around `(x, y)`.
    pub fn emit_source(&mut self, x: usize, y: usize, pattern: &PulsePattern) -> Result<()> {
        let center = self.grid.check(x, y)?;
        if self.obstacle[center] {
            return Err(LatticeError::ObstacleCell { x, y });
        }
        if !(0.0..=1.0).contains(&pattern.amplitude) {
            return Err(LatticeError::Param(format!("amplitude {} outside [0, 1]", pattern.amplitude)));
        }
        if pattern.amplitude == 0.0 {
            return Ok(());
        }
        let mut rng = seed::derived_rng(pattern.seed, &[0x9015E]);
        for i in self.grid.disc(center, pattern.radius) {
            if self.obstacle[i] {
                continue;
            }
            for d in 0..DIRECTIONS {
                if rng.random::<f64>() < pattern.amplitude {
                    self.cells[i] |= 1 << d;
                }
            }
        }
        Ok(())
    }

    /// Writes a binary PGM (P5): 42 grey levels per particle, obstacles white,
    /// top image row = highest `y`.
    pub fn write_pgm<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width(), self.height())?;
        let mut row = Vec::with_capacity(self.width());
        for y in (0..self.height()).rev() {
            row.clear();
            for x in 0..self.width() {
                let i = self.grid.index(x, y);
                row.push(if self.obstacle[i] { 255 } else { self.cells[i].count_ones() as u8 * 42 });
            }
            w.write_all(&row)?;
        }
        Ok(())
    }
}

pub fn cell_momentum(c: u8) -> (i64, i64) {
    let mut p = (0, 0);
    for (d, v) in LATTICE_VECTOR.iter().enumerate() {
        if c & (1 << d) != 0 {
            p.0 += v.0;
            p.1 += v.1;
        }
    }
    p
}

/// Seeded pulse: every direction bit of every free cell within `radius` hops
/// of the source is set with probability `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePattern {
    pub radius: usize,
    pub amplitude: f64,
    pub seed: u64,
}

/// Obstacle shapes in lattice cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    Disc { x: usize, y: usize, radius: usize },
}

/// JSON scene description for lattice experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeScene {
    pub width: usize,
    pub height: usize,
    /// Obstacle ring around the outer edge.
    pub walls: bool,
    pub obstacles: Vec<Shape>,
    /// Fraction of free interior cells turned into point scatterers.
    pub scatterer_density: f64,
    /// Scatterers keep this many hops away from the source.
    pub scatterer_clearance: usize,
    pub mirror: MirrorSpec,
    pub streams: Vec<StreamCell>,
    pub source: (usize, usize),
}

impl Default for LatticeScene {
    fn default() -> Self {
        Self {
            width: 48,
            height: 48,
            walls: true,
            obstacles: Vec::new(),
            scatterer_density: 0.0,
            scatterer_clearance: 4,
            mirror: MirrorSpec::FullBoundary,
            streams: Vec::new(),
            source: (24, 24),
        }
    }
}

impl LatticeScene {
    /// Builds the empty medium (no particles) described by the scene.
    pub fn build(&self, seed: u64) -> Result<LatticeState> {
        let mut s = LatticeState::empty(self.width, self.height)?;
        let src = s.grid.check(self.source.0, self.source.1)?;
        if self.walls {
            s.add_walls();
        }
        for shape in &self.obstacles {
            match *shape {
                Shape::Rect { x0, y0, x1, y1 } => {
                    for y in y0..=y1.min(self.height - 1) {
                        for x in x0..=x1.min(self.width - 1) {
                            s.set_obstacle(x, y)?;
                        }
                    }
                }
                Shape::Disc { x, y, radius } => {
                    let c = s.grid.check(x, y)?;
                    for i in s.grid.disc(c, radius) {
                        let (cx, cy) = s.grid.coords(i);
                        s.set_obstacle(cx, cy)?;
                    }
                }
            }
        }
        if !(0.0..1.0).contains(&self.scatterer_density) {
            return Err(LatticeError::Param(format!(
                "scatterer density {} outside [0, 1)",
                self.scatterer_density
            )));
        }
        if self.scatterer_density > 0.0 {
            let mut rng = seed::derived_rng(seed, &[0x5CA7]);
            let (w, h) = (self.width, self.height);
            for i in 0..s.grid.len() {
                let (x, y) = s.grid.coords(i);
                // Keep scatterers off the mirror row next to the walls.
                let interior = x >= 2 && y >= 2 && x + 2 < w && y + 2 < h;
                let hit = rng.random::<f64>() < self.scatterer_density;
                if hit && interior && !s.obstacle[i] && s.grid.distance(i, src) > self.scatterer_clearance {
                    s.obstacle[i] = true;
                }
            }
        }
        if s.obstacle[src] {
            return Err(LatticeError::ObstacleCell {
                x: self.source.0,
                y: self.source.1,
            });
        }
        for &st in &self.streams {
            s.add_stream(st)?;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_table_conserves_mass_and_momentum() {
        for parity in 0..2 {
            for s in 0u8..64 {
                let out = COLLIDE[parity][s as usize];
                assert_eq!(out.count_ones(), s.count_ones(), "mass, state {s:06b}");
                assert_eq!(cell_momentum(out), cell_momentum(s), "momentum, state {s:06b}");
                assert_eq!(UNCOLLIDE[parity][out as usize], s);
            }
        }
    }

    #[test]
    fn head_on_pair_rotates_by_parity() {
        // {0, 3} → clockwise {5, 2} on even steps, {1, 4} on odd steps.
        assert_eq!(COLLIDE[0][0b001001], 0b100100);
        assert_eq!(COLLIDE[1][0b001001], 0b010010);
        assert_eq!(COLLIDE[0][0b010101], 0b101010);
        assert_eq!(COLLIDE[1][0b000011], 0b000011);
    }

    #[test]
    fn neighbours_are_mutual() {
        let g = Grid::new(6, 4).unwrap();
        for i in 0..g.len() {
            for d in 0..DIRECTIONS {
                let j = g.neighbor(i, d);
                assert_eq!(g.neighbor(j, opposite(d)), i);
                assert_eq!(g.distance(i, j), 1);
                let (pi, pj) = (g.position(i), g.position(j));
                let (dx, dy) = (pj.0 - pi.0, pj.1 - pi.1);
                // Away from the wrap seam the displacement equals the unit vector.
                if dx.abs() < 1.5 && dy.abs() < 1.5 {
                    assert!((dx - UNIT[d].0).abs() < 1e-12 && (dy - UNIT[d].1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn bad_dimensions() {
        assert!(Grid::new(8, 7).is_err());
        assert!(Grid::new(1, 8).is_err());
    }

    #[test]
    fn single_particle_moves_straight() {
        let mut s = LatticeState::empty(16, 16).unwrap();
        s.set_cell(3, 4, 1 << 1).unwrap();
        let start = s.grid().index(3, 4);
        for t in 1..=5 {
            s.step();
            assert_eq!(s.mass(), 1);
            let i = s.cells().iter().position(|&c| c != 0).unwrap();
            assert_eq!(s.cell(i), 1 << 1);
            assert_eq!(s.grid().distance(start, i), t);
        }
    }

    #[test]
    fn head_on_collision_even_parity() {
        let mut s = LatticeState::empty(8, 8).unwrap();
        let c = s.grid().index(4, 4);
        s.set_cell(4, 4, 0b001001).unwrap();
        s.step();
        assert_eq!(s.mass(), 2);
        assert_eq!(s.momentum(), (0, 0));
        let g = s.grid();
        assert_eq!(s.cell(g.neighbor(c, 5)), 1 << 5);
        assert_eq!(s.cell(g.neighbor(c, 2)), 1 << 2);
    }

    #[test]
    fn bounce_back_reverses() {
        let mut s = LatticeState::empty(8, 8).unwrap();
        s.set_obstacle(5, 4).unwrap();
        s.set_cell(4, 4, 1).unwrap();
        s.step();
        assert_eq!(s.cell(s.grid().index(4, 4)), 1 << 3);
        s.step_reverse();
        assert_eq!(s.cell(s.grid().index(4, 4)), 1);
    }

    #[test]
    fn empty_lattice_reverse_is_empty() {
        let mut s = LatticeState::empty(8, 8).unwrap();
        s.step();
        assert_eq!(s.step_reverse(), Reversal::Exact);
        assert_eq!(s.mass(), 0);
        assert_eq!(s.time(), 0);
    }

    #[test]
    fn streams_flag_irreversibility() {
        let mut s = LatticeState::random(8, 8, 0.2, 3).unwrap();
        s.add_stream(StreamCell { x: 1, y: 1, direction: 0, period: 1 }).unwrap();
        let before = s.clone();
        s.step();
        assert_eq!(s.step_reverse(), Reversal::IrreversibleSource);
        let _ = before;
    }

    #[test]
    fn pulse_rejects_obstacle_and_zero_amplitude_is_noop() {
        let mut s = LatticeState::empty(8, 8).unwrap();
        s.set_obstacle(2, 2).unwrap();
        let p = PulsePattern { radius: 1, amplitude: 0.5, seed: 1 };
        assert!(matches!(s.emit_source(2, 2, &p), Err(LatticeError::ObstacleCell { .. })));
        let before = s.clone();
        s.emit_source(4, 4, &PulsePattern { amplitude: 0.0, ..p }).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn pgm_header_and_size() {
        let s = LatticeState::random(10, 6, 0.3, 1).unwrap();
        let mut buf = Vec::new();
        s.write_pgm(&mut buf).unwrap();
        let header = b"P5\n10 6\n255\n";
        assert!(buf.starts_with(header));
        assert_eq!(buf.len(), header.len() + 60);
    }

    #[test]
    fn scene_json_round_trip() {
        let scene = LatticeScene {
            obstacles: vec![Shape::Rect { x0: 3, y0: 3, x1: 5, y1: 4 }, Shape::Disc { x: 30, y: 30, radius: 2 }],
            streams: vec![StreamCell { x: 10, y: 10, direction: 1, period: 2 }],
            ..LatticeScene::default()
        };
        let text = serde_json::to_string(&scene).unwrap();
        let back: LatticeScene = serde_json::from_str(&text).unwrap();
        assert_eq!(back, scene);
        let built = scene.build(0).unwrap();
        assert!(built.is_obstacle(built.grid().index(4, 4)));
        assert!(built.is_obstacle(built.grid().index(0, 17)));
        assert_eq!(built.streams().len(), 1);
    }
}
