//! Reversing Petri net for distributed antenna selection.
//!
//! Places are antennas and a token marks an antenna as switched on. A
//! transition moves a token between two adjacent places and is:
//!
//! 1. enabled when exactly one of the two places holds a token;
//! 2. fired only if moving the token strictly raises the equal-power sum
//!    capacity of the tokened antennas inside the neighbourhood shared by the
//!    two places;
//! 3. chosen, among a place's enabled moves, by largest improvement
//!    (ties go to the smallest destination index);
//! 4. executed pass after pass, visiting places in a seeded random order,
//!    until a whole pass fires nothing.
//!
//! Every fired transition is appended to the history, and [`RpnNet::reverse`]
//! undoes transitions by popping it.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::capacity::{self, CapacityError};
use crate::channel::ChannelTensor;
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum RpnError {
    #[error("places {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("cannot reverse {requested} transitions, history holds {available}")]
    ReverseTooFar { requested: usize, available: usize },
    #[error("net has {places} places but the channel has {antennas} antennas")]
    PlaceCountMismatch { places: usize, antennas: usize },
    #[error("invalid topology: {0}")]
    Topology(String),
    #[error("invalid marking: {0}")]
    Marking(String),
    #[error("history record is malformed: {0}")]
    History(String),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RpnError>;

/// A directed move out of a place and the neighbourhood it is judged in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Move {
    pub to: usize,
    pub neighborhood: Vec<usize>,
}

/// Places, adjacency and the neighbourhood assigned to every directed move.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    moves: Vec<Vec<Move>>,
}

impl Topology {
    /// Builds a topology from per-place outgoing moves.
    ///
    /// Adjacency must be symmetric, free of self-loops and duplicates, and
    /// every neighbourhood must contain both endpoints of its move.
    pub fn new(moves: Vec<Vec<Move>>) -> Result<Self> {
        let n = moves.len();
        if n == 0 {
            return Err(RpnError::Topology("no places".into()));
        }
        for (a, out) in moves.iter().enumerate() {
            let mut seen = Vec::new();
            for m in out {
                if m.to >= n || m.to == a {
                    return Err(RpnError::Topology(format!("bad move {a} -> {}", m.to)));
                }
                if seen.contains(&m.to) {
                    return Err(RpnError::Topology(format!("duplicate move {a} -> {}", m.to)));
                }
                seen.push(m.to);
                if !moves[m.to].iter().any(|back| back.to == a) {
                    return Err(RpnError::Topology(format!("move {a} -> {} has no reverse", m.to)));
                }
                if !m.neighborhood.contains(&a) || !m.neighborhood.contains(&m.to) {
                    return Err(RpnError::Topology(format!(
                        "neighbourhood of {a} -> {} misses an endpoint",
                        m.to
                    )));
                }
                if m.neighborhood.iter().any(|&p| p >= n) {
                    return Err(RpnError::Topology("neighbourhood index out of range".into()));
                }
            }
        }
        Ok(Self { moves })
    }

    /// `rows × cols` grid folded into a torus.
    ///
    /// Place `i = r·cols + c` (0-based) is adjacent to its von Neumann
    /// neighbours with wrap-around. Neighbourhoods are pairs of adjacent full
    /// columns, listed left column first, top to bottom, and both directions
    /// of an edge share one:
    ///
    /// * a horizontal edge uses the two columns it joins;
    /// * a vertical edge between rows `r` and `r + 1` uses its column and the
    ///   one to the left when `r` is even, the one to the right when odd.
    ///
    /// On the 4×16 grid this gives, for place 0, moves to 15 and 16 judged in
    /// `{15, 31, 47, 63, 0, 16, 32, 48}` and moves to 1 and 48 judged in
    /// `{0, 16, 32, 48, 1, 17, 33, 49}`. When `rows` or `cols` is 2 the
    /// duplicate wrap-around edges collapse into one; a collapsed vertical
    /// edge counts as starting at row 0.
    pub fn torus(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(RpnError::Topology(format!("torus needs at least 2×2, got {rows}×{cols}")));
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let column_pair = |left: usize| -> Vec<usize> {
            let right = (left + 1) % cols;
            let mut v: Vec<usize> = (0..rows).map(|r| idx(r, left)).collect();
            if right != left {
                for r in 0..rows {
                    if !v.contains(&idx(r, right)) {
                        v.push(idx(r, right));
                    }
                }
            }
            v
        };
        let mut moves = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let left_col = (c + cols - 1) % cols;
                // Upper row of a vertical edge decides its column pair.
                let vertical = |upper: usize| {
                    let upper = if rows == 2 { 0 } else { upper };
                    if upper % 2 == 0 {
                        left_col
                    } else {
                        c
                    }
                };
                let candidates = [
                    (idx(r, (c + 1) % cols), c),
                    (idx(r, left_col), left_col),
                    (idx((r + 1) % rows, c), vertical(r)),
                    (idx((r + rows - 1) % rows, c), vertical((r + rows - 1) % rows)),
                ];
                let mut out: Vec<Move> = Vec::with_capacity(4);
                for (to, pair_left) in candidates {
                    if to != idx(r, c) && !out.iter().any(|m| m.to == to) {
                        out.push(Move {
                            to,
                            neighborhood: column_pair(pair_left),
                        });
                    }
                }
                moves.push(out);
            }
        }
        Self::new(moves)
    }

    pub fn num_places(&self) -> usize {
        self.moves.len()
    }

    pub fn moves_from(&self, place: usize) -> &[Move] {
        &self.moves[place]
    }

    /// Sorted adjacent places.
    pub fn neighbors(&self, place: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.moves[place].iter().map(|m| m.to).collect();
        v.sort_unstable();
        v
    }

    pub fn neighborhood(&self, from: usize, to: usize) -> Option<&[usize]> {
        self.moves
            .get(from)?
            .iter()
            .find(|m| m.to == to)
            .map(|m| m.neighborhood.as_slice())
    }
}

/// One fired transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub from_place: usize,
    pub to_place: usize,
    pub pass_index: usize,
    pub capacity_before: f64,
    pub capacity_after: f64,
}

/// Outcome of [`RpnNet::run_to_convergence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convergence {
    /// Passes that fired at least one transition.
    pub passes_used: usize,
    pub transitions_fired: usize,
    pub converged: bool,
}

/// Memoised equal-power neighbourhood capacities for one channel.
pub struct CapacityCache<'a> {
    channel: &'a ChannelTensor,
    rho: f64,
    values: HashMap<Vec<usize>, f64>,
}

impl<'a> CapacityCache<'a> {
    pub fn new(channel: &'a ChannelTensor, rho: f64) -> Self {
        Self {
            channel,
            rho,
            values: HashMap::new(),
        }
    }

    pub fn channel(&self) -> &ChannelTensor {
        self.channel
    }

    /// Distinct subsets evaluated so far.
    pub fn evaluations(&self) -> u64 {
        self.values.len() as u64
    }

    /// Capacity of an antenna set; the set is sorted before evaluation so the
    /// value does not depend on listing order.
    pub fn capacity(&mut self, set: &[usize]) -> Result<f64> {
        let mut key = set.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.values.get(&key) {
            return Ok(v);
        }
        let v = capacity::equal_power_rate(self.channel, &key, self.rho)?;
        self.values.insert(key, v);
        Ok(v)
    }
}

/// A reversing Petri net with its marking and transition history.
#[derive(Debug, Clone)]
pub struct RpnNet {
    topology: Arc<Topology>,
    initial: Vec<bool>,
    marking: Vec<bool>,
    history: Vec<TransitionRecord>,
    passes_run: usize,
}

impl RpnNet {
    pub fn new(topology: Arc<Topology>, marking: Vec<bool>) -> Result<Self> {
        if marking.len() != topology.num_places() {
            return Err(RpnError::Marking(format!(
                "{} entries for {} places",
                marking.len(),
                topology.num_places()
            )));
        }
        Ok(Self {
            topology,
            initial: marking.clone(),
            marking,
            history: Vec::new(),
            passes_run: 0,
        })
    }

    /// Net with tokens on the listed places.
    pub fn with_tokens(topology: Arc<Topology>, tokens: &[usize]) -> Result<Self> {
        let mut marking = vec![false; topology.num_places()];
        for &t in tokens {
            if t >= marking.len() || marking[t] {
                return Err(RpnError::Marking(format!("token place {t} repeated or out of range")));
            }
            marking[t] = true;
        }
        Self::new(topology, marking)
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn marking(&self) -> &[bool] {
        &self.marking
    }

    pub fn initial_marking(&self) -> &[bool] {
        &self.initial
    }

    pub fn history(&self) -> &[TransitionRecord] {
        &self.history
    }

    pub fn token_count(&self) -> usize {
        self.marking.iter().filter(|&&m| m).count()
    }

    /// Tokened places in ascending order.
    pub fn tokens(&self) -> Vec<usize> {
        (0..self.marking.len()).filter(|&i| self.marking[i]).collect()
    }

    fn check_adjacent(&self, a: usize, b: usize) -> Result<&[usize]> {
        self.topology.neighborhood(a, b).ok_or(RpnError::NotAdjacent(a, b))
    }

    /// Exactly one of the two places holds a token.
    pub fn enabled(&self, a: usize, b: usize) -> Result<bool> {
        self.check_adjacent(a, b)?;
        Ok(self.marking[a] ^ self.marking[b])
    }

    fn check_channel(&self, channel: &ChannelTensor) -> Result<()> {
        if channel.n_t() != self.topology.num_places() {
            return Err(RpnError::PlaceCountMismatch {
                places: self.topology.num_places(),
                antennas: channel.n_t(),
            });
        }
        Ok(())
    }

    /// Capacities of the neighbourhood before and after moving the token
    /// `from → to`, where `from` holds a token and `to` does not.
    fn neighborhood_capacities(&self, cache: &mut CapacityCache<'_>, from: usize, to: usize) -> Result<(f64, f64)> {
        let hood = self.check_adjacent(from, to)?;
        let before: Vec<usize> = hood.iter().copied().filter(|&p| self.marking[p]).collect();
        let after: Vec<usize> = before.iter().map(|&p| if p == from { to } else { p }).collect();
        Ok((cache.capacity(&before)?, cache.capacity(&after)?))
    }

    /// Improvement of moving the token from `from` to `to`, if strictly positive.
    ///
    /// Returns `None` when the move is not enabled in that direction or when
    /// it would not strictly raise the neighbourhood capacity.
    pub fn gate(&self, cache: &mut CapacityCache<'_>, from: usize, to: usize) -> Result<Option<f64>> {
        self.check_adjacent(from, to)?;
        self.check_channel(cache.channel())?;
        if !(self.marking[from] && !self.marking[to]) {
            return Ok(None);
        }
        let (before, after) = self.neighborhood_capacities(cache, from, to)?;
        let delta = after - before;
        Ok((delta > 0.0).then_some(delta))
    }

    fn fire(&mut self, from: usize, to: usize, before: f64, after: f64) {
        debug_assert!(self.marking[from] && !self.marking[to]);
        self.marking[from] = false;
        self.marking[to] = true;
        self.history.push(TransitionRecord {
            from_place: from,
            to_place: to,
            pass_index: self.passes_run,
            capacity_before: before,
            capacity_after: after,
        });
    }

    /// One pass over every place in a seeded random order. Returns the number
    /// of transitions fired.
    pub fn step_pass(&mut self, cache: &mut CapacityCache<'_>, seed: u64) -> Result<usize> {
        self.check_channel(cache.channel())?;
        let mut order: Vec<usize> = (0..self.marking.len()).collect();
        order.shuffle(&mut seed::rng(seed));
        let topology = Arc::clone(&self.topology);
        let mut fired = 0;
        for place in order {
            if !self.marking[place] {
                continue;
            }
            let mut best: Option<(f64, usize, f64, f64)> = None;
            for m in topology.moves_from(place) {
                if self.marking[m.to] {
                    continue;
                }
                let (before, after) = self.neighborhood_capacities(cache, place, m.to)?;
                let delta = after - before;
                if delta <= 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((d, to, _, _)) => delta > d || (delta == d && m.to < to),
                };
                if better {
                    best = Some((delta, m.to, before, after));
                }
            }
            if let Some((_, to, before, after)) = best {
                self.fire(place, to, before, after);
                fired += 1;
            }
        }
        self.passes_run += 1;
        Ok(fired)
    }

    /// Repeats [`step_pass`](Self::step_pass) until a pass fires nothing or
    /// `max_passes` passes have run. Non-convergence is reported, not raised.
    pub fn run_to_convergence(&mut self, cache: &mut CapacityCache<'_>, seed: u64, max_passes: usize) -> Result<Convergence> {
        let mut passes_used = 0;
        let mut transitions_fired = 0;
        for pass in 0..max_passes {
            let fired = self.step_pass(cache, seed::derive(seed, &[pass as u64]))?;
            if fired == 0 {
                return Ok(Convergence {
                    passes_used,
                    transitions_fired,
                    converged: true,
                });
            }
            passes_used += 1;
            transitions_fired += fired;
        }
        Ok(Convergence {
            passes_used,
            transitions_fired,
            converged: false,
        })
    }

    /// Undoes the last `k` transitions and returns the resulting marking.
    pub fn reverse(&mut self, k: usize) -> Result<&[bool]> {
        if k > self.history.len() {
            return Err(RpnError::ReverseTooFar {
                requested: k,
                available: self.history.len(),
            });
        }
        for _ in 0..k {
            let rec = self.history.pop().expect("length checked");
            debug_assert!(self.marking[rec.to_place] && !self.marking[rec.from_place]);
            self.marking[rec.to_place] = false;
            self.marking[rec.from_place] = true;
        }
        Ok(&self.marking)
    }

    /// Replays the history on the initial marking.
    pub fn replay_history(&self) -> Result<Vec<bool>> {
        let mut m = self.initial.clone();
        for (i, rec) in self.history.iter().enumerate() {
            if !m[rec.from_place] || m[rec.to_place] {
                return Err(RpnError::History(format!("record {i} is not enabled on replay")));
            }
            m[rec.from_place] = false;
            m[rec.to_place] = true;
        }
        Ok(m)
    }

    /// Writes one JSON object per transition record.
    pub fn write_history_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for rec in &self.history {
            serde_json::to_writer(&mut w, rec).map_err(|e| RpnError::History(e.to_string()))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Parses a JSON-lines history export.
pub fn read_history_jsonl<R: BufRead>(r: R) -> Result<Vec<TransitionRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| RpnError::History(e.to_string()))?);
    }
    Ok(out)
}
