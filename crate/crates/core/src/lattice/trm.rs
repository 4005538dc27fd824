//! Time-reversal mirror on the lattice gas: record, replay, score.
//!
//! A mirror is an ordered list of free cells with an outward unit normal
//! each. Recording samples the signed normal momentum `Σ e_d·n` of the
//! particles in every mirror cell after each step, then removes the
//! outward-moving ones (the mirror absorbs what reaches it). Replay runs the
//! medium forward again and re-emits the samples backwards in time, sending
//! particles inward where outward flux was recorded.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{LatticeError, LatticeScene, LatticeState, PulsePattern, Result, DIRECTIONS, UNIT};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Full,
    OneTrit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    Bottom,
    Top,
    Left,
    Right,
}

/// Rectangle of mirror cells sharing one outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRange {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
    pub normal: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MirrorSpec {
    /// The ring of cells just inside the outer wall.
    #[default]
    FullBoundary,
    /// One side of that ring.
    Edge { edge: Edge },
    Ranges { ranges: Vec<CellRange> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mirror {
    cells: Vec<usize>,
    normals: Vec<(f64, f64)>,
}

fn unit(v: (f64, f64)) -> Result<(f64, f64)> {
    let n = v.0.hypot(v.1);
    if !(n.is_finite() && n > 0.0) {
        return Err(LatticeError::Param(format!("mirror normal {v:?} has no direction")));
    }
    Ok((v.0 / n, v.1 / n))
}

impl Mirror {
    pub fn new(state: &LatticeState, cells: Vec<usize>, normals: Vec<(f64, f64)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(LatticeError::EmptyMirror);
        }
        if cells.len() != normals.len() {
            return Err(LatticeError::Param("one normal per mirror cell required".into()));
        }
        let mut seen = HashSet::with_capacity(cells.len());
        for &c in &cells {
            if c >= state.grid().len() {
                return Err(LatticeError::Param(format!("mirror cell {c} out of range")));
            }
            let (x, y) = state.grid().coords(c);
            if state.is_obstacle(c) {
                return Err(LatticeError::ObstacleCell { x, y });
            }
            if !seen.insert(c) {
                return Err(LatticeError::Param(format!("mirror cell ({x}, {y}) listed twice")));
            }
        }
        let normals = normals.into_iter().map(unit).collect::<Result<_>>()?;
        Ok(Self { cells, normals })
    }

    /// The ring one cell inside the outer edge; corners get the diagonal normal.
    pub fn full_boundary(state: &LatticeState) -> Result<Self> {
        let (w, h) = (state.width(), state.height());
        if w < 4 || h < 4 {
            return Err(LatticeError::Param("lattice too small for a boundary mirror".into()));
        }
        let mut cells = Vec::new();
        let mut normals = Vec::new();
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let mut n = (0.0, 0.0);
                if x == 1 {
                    n.0 -= 1.0;
                }
                if x == w - 2 {
                    n.0 += 1.0;
                }
                if y == 1 {
                    n.1 -= 1.0;
                }
                if y == h - 2 {
                    n.1 += 1.0;
                }
                if n != (0.0, 0.0) {
                    cells.push(state.grid().index(x, y));
                    normals.push(n);
                }
            }
        }
        Self::new(state, cells, normals)
    }

    pub fn edge(state: &LatticeState, edge: Edge) -> Result<Self> {
        let (w, h) = (state.width(), state.height());
        if w < 4 || h < 4 {
            return Err(LatticeError::Param("lattice too small for an edge mirror".into()));
        }
        let g = state.grid();
        let (cells, normal): (Vec<usize>, _) = match edge {
            Edge::Bottom => ((1..w - 1).map(|x| g.index(x, 1)).collect(), (0.0, -1.0)),
            Edge::Top => ((1..w - 1).map(|x| g.index(x, h - 2)).collect(), (0.0, 1.0)),
            Edge::Left => ((1..h - 1).map(|y| g.index(1, y)).collect(), (-1.0, 0.0)),
            Edge::Right => ((1..h - 1).map(|y| g.index(w - 2, y)).collect(), (1.0, 0.0)),
        };
        let normals = vec![normal; cells.len()];
        Self::new(state, cells, normals)
    }

    pub fn from_spec(state: &LatticeState, spec: &MirrorSpec) -> Result<Self> {
        match spec {
            MirrorSpec::FullBoundary => Self::full_boundary(state),
            MirrorSpec::Edge { edge } => Self::edge(state, *edge),
            MirrorSpec::Ranges { ranges } => {
                let mut cells = Vec::new();
                let mut normals = Vec::new();
                for r in ranges {
                    for y in r.y0..=r.y1 {
                        for x in r.x0..=r.x1 {
                            cells.push(state.grid().check(x, y)?);
                            normals.push(r.normal);
                        }
                    }
                }
                Self::new(state, cells, normals)
            }
        }
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn normals(&self) -> &[(f64, f64)] {
        &self.normals
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Signed normal momentum of mirror cell `i`; positive means outward.
    pub fn flux(&self, state: &LatticeState, i: usize) -> f64 {
        let bits = state.cell(self.cells[i]);
        let proj = projections(self.normals[i]);
        (0..DIRECTIONS).filter(|d| bits & (1 << d) != 0).map(|d| proj[d]).sum()
    }

    fn outward_mask(&self, i: usize) -> u8 {
        let proj = projections(self.normals[i]);
        (0..DIRECTIONS).filter(|&d| proj[d] > 0.0).fold(0, |m, d| m | (1 << d))
    }

    /// Removes outward-moving particles from the mirror cells; returns how
    /// many were removed from each cell.
    pub fn absorb(&self, state: &mut LatticeState) -> Vec<u32> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let mask = self.outward_mask(i);
                let bits = state.cells[c];
                state.cells[c] = bits & !mask;
                (bits & mask).count_ones()
            })
            .collect()
    }
}

fn projections(n: (f64, f64)) -> [f64; DIRECTIONS] {
    UNIT.map(|e| e.0 * n.0 + e.1 * n.1)
}

fn trit(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        1.0
    } else if v < -threshold {
        -1.0
    } else {
        0.0
    }
}

/// Mirror time series, row-major as `samples[t * cells + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrmRecording {
    pub mirror_cells: Vec<usize>,
    pub samples: Vec<f64>,
    pub resolution: Resolution,
    pub duration: usize,
}

impl TrmRecording {
    pub fn zeros(mirror: &Mirror, duration: usize, resolution: Resolution) -> Self {
        Self {
            mirror_cells: mirror.cells.clone(),
            samples: vec![0.0; duration * mirror.len()],
            resolution,
            duration,
        }
    }

    pub fn sample(&self, t: usize, i: usize) -> f64 {
        self.samples[t * self.mirror_cells.len() + i]
    }

    fn row(&self, t: usize) -> &[f64] {
        let n = self.mirror_cells.len();
        &self.samples[t * n..(t + 1) * n]
    }

    /// Keeps only the sign of each sample; `|v| ≤ threshold` becomes 0.
    pub fn to_one_trit(&self, threshold: f64) -> Self {
        Self {
            mirror_cells: self.mirror_cells.clone(),
            samples: self.samples.iter().map(|&v| trit(v, threshold)).collect(),
            resolution: Resolution::OneTrit,
            duration: self.duration,
        }
    }

    /// Time step with the largest total |sample|.
    pub fn peak_time(&self) -> Option<usize> {
        (0..self.duration)
            .map(|t| (t, self.row(t).iter().map(|v| v.abs()).sum::<f64>()))
            .filter(|&(_, e)| e > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(t, _)| t)
    }
}

/// Samples each state in `states` (one per time step) at the mirror.
pub fn record_at_mirror(
    states: &[LatticeState],
    mirror: &Mirror,
    resolution: Resolution,
    threshold: f64,
) -> Result<TrmRecording> {
    if mirror.is_empty() {
        return Err(LatticeError::EmptyMirror);
    }
    let mut rec = TrmRecording::zeros(mirror, states.len(), Resolution::Full);
    for (t, s) in states.iter().enumerate() {
        for i in 0..mirror.len() {
            rec.samples[t * mirror.len() + i] = mirror.flux(s, i);
        }
    }
    Ok(match resolution {
        Resolution::Full => rec,
        Resolution::OneTrit => rec.to_one_trit(threshold),
    })
}

/// Steps `state` `k` times, sampling and then absorbing at the mirror after
/// every step. Leaves `state` at time `k`.
pub fn record_forward(
    state: &mut LatticeState,
    mirror: &Mirror,
    k: usize,
    resolution: Resolution,
    threshold: f64,
) -> TrmRecording {
    let mut rec = TrmRecording::zeros(mirror, k, Resolution::Full);
    for t in 0..k {
        state.step();
        for i in 0..mirror.len() {
            rec.samples[t * mirror.len() + i] = mirror.flux(state, i);
        }
        mirror.absorb(state);
    }
    match resolution {
        Resolution::Full => rec,
        Resolution::OneTrit => rec.to_one_trit(threshold),
    }
}

/// Re-emits `recording` backwards in time from `state_at_k`.
///
/// Step `j` first absorbs outward particles at the mirror, then re-emits
/// sample `k−1−j`. Re-emitted particles are added after the collision phase,
/// so they move before they first collide, and the replay starts one parity
/// later than `state_at_k`; together this makes the collision chirality seen
/// by returning particles match the inverse rule. A positive sample `v`
/// sets each inward direction `d` (weight `w_d = −e_d·n > 0`) with
/// probability `min(1, a·w_d / Σw²)`, so the expected inward flux is `a`.
/// Full resolution uses `a = |v|`; one-trit uses one particle's worth,
/// `a = max w_d`. Negative samples do the same outward.
///
/// Returns the `k + 1` states of the replay, starting with the initial one.
pub fn replay_reversed(
    state_at_k: &LatticeState,
    recording: &TrmRecording,
    mirror: &Mirror,
    seed: u64,
) -> Result<Vec<LatticeState>> {
    if recording.mirror_cells != mirror.cells {
        return Err(LatticeError::Param("recording was taken on a different mirror".into()));
    }
    if recording.samples.len() != recording.duration * mirror.len() {
        return Err(LatticeError::DurationMismatch {
            recorded: recording.samples.len() / mirror.len(),
            expected: recording.duration,
        });
    }
    let k = recording.duration;
    let proj: Vec<[f64; DIRECTIONS]> = mirror.normals.iter().map(|&n| projections(n)).collect();
    let mut rng = seed::derived_rng(seed, &[0x4E71A7]);
    let mut state = state_at_k.clone();
    state.time = state.time.wrapping_add(1);
    let mut out = Vec::with_capacity(k + 1);
    out.push(state.clone());
    for j in 0..k {
        mirror.absorb(&mut state);
        let row = recording.row(k - 1 - j);
        state.step_with(|cells| {
            for (i, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let sign = if v > 0.0 { -1.0 } else { 1.0 };
                let w: [f64; DIRECTIONS] = proj[i].map(|p| (sign * p).max(0.0));
                let norm2: f64 = w.iter().map(|x| x * x).sum();
                if norm2 == 0.0 {
                    continue;
                }
                let a = match recording.resolution {
                    Resolution::Full => v.abs(),
                    Resolution::OneTrit => w.iter().cloned().fold(0.0, f64::max),
                };
                let c = mirror.cells[i];
                for d in 0..DIRECTIONS {
                    if w[d] > 0.0 && rng.random::<f64>() < (a * w[d] / norm2).min(1.0) {
                        cells[c] |= 1 << d;
                    }
                }
            }
        });
        out.push(state.clone());
    }
    Ok(out)
}

/// Where and how long to look for the refocused pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FocusWindow {
    /// Hop radius of the disc averaged around the source and control cells.
    pub disc_radius: usize,
    /// Number of final replay states searched for the peak.
    pub window: usize,
    /// Control cells sit this many hops from the source.
    pub control_distance: usize,
    pub control_cells: usize,
    pub seed: u64,
}

impl Default for FocusWindow {
    fn default() -> Self {
        Self {
            disc_radius: 2,
            window: 3,
            control_distance: 10,
            control_cells: 16,
            seed: 0,
        }
    }
}

fn disc_density(state: &LatticeState, disc: &[usize]) -> f64 {
    disc.iter().map(|&i| f64::from(state.density(i))).sum::<f64>() / disc.len() as f64
}

/// Peak disc density around the source over the window, against the same
/// peak averaged over control discs: `(focus + ε) / (control + ε)` with
/// `ε = 1/|disc|`, one particle spread over the disc. No particles at all
/// gives 1.
pub fn focus_ratio(states: &[LatticeState], source: usize, window: &FocusWindow) -> Result<f64> {
    let len = states.len();
    if window.window == 0 || window.window > len {
        return Err(LatticeError::BadWindow {
            start: len.saturating_sub(window.window),
            end: len.saturating_sub(1),
            len,
        });
    }
    let first = &states[0];
    let grid = first.grid();
    if source >= grid.len() {
        return Err(LatticeError::Param(format!("source cell {source} out of range")));
    }
    if first.is_obstacle(source) {
        let (x, y) = grid.coords(source);
        return Err(LatticeError::ObstacleCell { x, y });
    }
    let free_disc = |c: usize| -> Vec<usize> {
        grid.disc(c, window.disc_radius).into_iter().filter(|&i| !first.is_obstacle(i)).collect()
    };
    let disc = free_disc(source);
    let ring: Vec<usize> = (0..grid.len())
        .filter(|&i| !first.is_obstacle(i) && grid.distance(source, i) == window.control_distance)
        .collect();
    if ring.is_empty() {
        return Err(LatticeError::Param(format!(
            "no free control cells {} hops from the source",
            window.control_distance
        )));
    }
    let mut rng = seed::derived_rng(window.seed, &[0xC0417]);
    let picked = index::sample(&mut rng, ring.len(), window.control_cells.min(ring.len()));
    let controls: Vec<Vec<usize>> = picked.iter().map(|p| free_disc(ring[p])).collect();

    let tail = &states[len - window.window..];
    let peak = |cells: &[usize]| tail.iter().map(|s| disc_density(s, cells)).fold(0.0, f64::max);
    let focus = peak(&disc);
    let control = controls.iter().map(|c| peak(c)).sum::<f64>() / controls.len() as f64;
    let eps = 1.0 / disc.len() as f64;
    Ok((focus + eps) / (control + eps))
}

/// [`focus_ratio`] divided by the ratio of a perfect reversal, clipped to `[0, 1]`.
pub fn refocusing_metric(states: &[LatticeState], source: usize, window: &FocusWindow, reference: f64) -> Result<f64> {
    if !(reference.is_finite() && reference > 0.0) {
        return Err(LatticeError::Param(format!("reference ratio {reference} must be positive")));
    }
    Ok((focus_ratio(states, source, window)? / reference).clamp(0.0, 1.0))
}

/// Ratio reached by exact reversal: `k` closed steps, then `k` inverse steps.
pub fn reference_ratio(initial: &LatticeState, k: usize, source: usize, window: &FocusWindow) -> Result<f64> {
    let mut s = initial.clone();
    for _ in 0..k {
        s.step();
    }
    let mut states = Vec::with_capacity(k + 1);
    states.push(s.clone());
    for _ in 0..k {
        s.step_reverse();
        states.push(s.clone());
    }
    focus_ratio(&states, source, window)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrmParams {
    /// Medium and source; its mirror field is ignored since the experiment
    /// runs both the full boundary and `partial_edge`.
    pub scene: LatticeScene,
    pub pulse: PulsePattern,
    pub duration: usize,
    pub partial_edge: Edge,
    pub trit_threshold: f64,
    pub focus: FocusWindow,
}

impl Default for TrmParams {
    fn default() -> Self {
        Self {
            scene: LatticeScene::default(),
            pulse: PulsePattern {
                radius: 2,
                amplitude: 0.5,
                seed: 0,
            },
            duration: 60,
            partial_edge: Edge::Bottom,
            trit_threshold: 0.0,
            focus: FocusWindow::default(),
        }
    }
}

/// Refocusing metrics of one seeded TRM run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrmOutcome {
    pub reference_ratio: f64,
    pub emitted: u64,
    /// Full boundary, full resolution.
    pub full: f64,
    pub one_edge: f64,
    /// Full boundary, sign-only samples of the same recording.
    pub one_trit: f64,
    /// Full boundary with an all-zero recording.
    pub background: f64,
}

pub fn trm_refocus_experiment(params: &TrmParams, seed: u64) -> Result<TrmOutcome> {
    let mut initial = params.scene.build(seed::derive(seed, &[0x5CE]))?;
    let (sx, sy) = params.scene.source;
    let source = initial.grid().index(sx, sy);
    let pulse = PulsePattern {
        seed: seed::derive(seed, &[0x9015E, params.pulse.seed]),
        ..params.pulse
    };
    initial.emit_source(sx, sy, &pulse)?;
    let k = params.duration;
    let focus = FocusWindow {
        seed: seed::derive(seed, &[0xF0C, params.focus.seed]),
        ..params.focus
    };
    let reference = reference_ratio(&initial, k, source, &focus)?;
    let replay_seed = seed::derive(seed, &[0x4E9]);

    let full_mirror = Mirror::full_boundary(&initial)?;
    let mut at_k = initial.clone();
    let rec = record_forward(&mut at_k, &full_mirror, k, Resolution::Full, 0.0);
    let metric = |states: Vec<LatticeState>| refocusing_metric(&states, source, &focus, reference);
    let full = metric(replay_reversed(&at_k, &rec, &full_mirror, replay_seed)?)?;
    let trits = rec.to_one_trit(params.trit_threshold);
    let one_trit = metric(replay_reversed(&at_k, &trits, &full_mirror, replay_seed)?)?;
    let silent = TrmRecording::zeros(&full_mirror, k, Resolution::Full);
    let background = metric(replay_reversed(&at_k, &silent, &full_mirror, replay_seed)?)?;

    let edge_mirror = Mirror::edge(&initial, params.partial_edge)?;
    let mut edge_at_k = initial.clone();
    let edge_rec = record_forward(&mut edge_at_k, &edge_mirror, k, Resolution::Full, 0.0);
    let one_edge = metric(replay_reversed(&edge_at_k, &edge_rec, &edge_mirror, replay_seed)?)?;

    Ok(TrmOutcome {
        reference_ratio: reference,
        emitted: initial.mass(),
        full,
        one_edge,
        one_trit,
        background,
    })
}

/// Quantizer step for an `m`-bit converter counting up to eight particles.
pub fn quantizer_step(adc_bits: u32) -> f64 {
    8.0 / 2f64.powi(adc_bits as i32)
}

/// Counts floored to the converter grid and clipped at full scale (eight
/// particles less one step). Every grid refines the coarser ones, so the
/// result never decreases as bits are added; from three bits on it is exact
/// up to seven particles.
pub fn quantize_count(n: u32, adc_bits: u32) -> f64 {
    let step = quantizer_step(adc_bits);
    let full_scale = (2f64.powi(adc_bits.min(62) as i32) - 1.0) * step;
    ((f64::from(n) / step).floor() * step).min(full_scale)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackscatterParams {
    pub width: usize,
    pub height: usize,
    pub scatterer_density: f64,
    pub adc_bits: u32,
    pub waiting_steps: usize,
    /// Consecutive mirror cells read out by one converter.
    pub element_cells: usize,
    pub pulse: PulsePattern,
}

impl Default for BackscatterParams {
    fn default() -> Self {
        Self {
            width: 48,
            height: 48,
            scatterer_density: 0.0,
            adc_bits: 8,
            waiting_steps: 200,
            element_cells: 4,
            pulse: PulsePattern {
                radius: 2,
                amplitude: 0.5,
                seed: 0,
            },
        }
    }
}

/// Fraction of emitted particles absorbed by a full-boundary mirror within
/// the waiting time. Arrivals are summed per element of `element_cells`
/// consecutive mirror cells and step, then passed through an `adc_bits`
/// quantizer.
pub fn backscatter_loss_experiment(params: &BackscatterParams, seed: u64) -> Result<f64> {
    if params.adc_bits == 0 || params.element_cells == 0 {
        return Err(LatticeError::Param("adc_bits and element_cells must be at least 1".into()));
    }
    let scene = LatticeScene {
        width: params.width,
        height: params.height,
        scatterer_density: params.scatterer_density,
        source: (params.width / 2, params.height / 2),
        ..LatticeScene::default()
    };
    let mut state = scene.build(seed::derive(seed, &[0x5CE]))?;
    let pulse = PulsePattern {
        seed: seed::derive(seed, &[0x9015E, params.pulse.seed]),
        ..params.pulse
    };
    state.emit_source(scene.source.0, scene.source.1, &pulse)?;
    let emitted = state.mass();
    if emitted == 0 || params.waiting_steps == 0 {
        return Ok(0.0);
    }
    let mirror = Mirror::full_boundary(&state)?;
    let mut retained = 0.0;
    for _ in 0..params.waiting_steps {
        state.step();
        let arrivals = mirror.absorb(&mut state);
        retained += arrivals
            .chunks(params.element_cells)
            .map(|c| quantize_count(c.iter().sum(), params.adc_bits))
            .sum::<f64>();
    }
    Ok(retained / emitted as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(w: usize, h: usize) -> LatticeState {
        let mut s = LatticeState::empty(w, h).unwrap();
        s.add_walls();
        s
    }

    #[test]
    fn full_boundary_ring_size_and_normals() {
        let s = boxed(10, 8);
        let m = Mirror::full_boundary(&s).unwrap();
        assert_eq!(m.len(), 2 * (8 + 6) - 4);
        for &n in m.normals() {
            assert!((n.0.hypot(n.1) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_on_obstacle_or_empty_is_rejected() {
        let s = boxed(8, 8);
        assert!(matches!(Mirror::new(&s, vec![], vec![]), Err(LatticeError::EmptyMirror)));
        assert!(matches!(Mirror::new(&s, vec![0], vec![(1.0, 0.0)]), Err(LatticeError::ObstacleCell { .. })));
    }

    #[test]
    fn empty_lattice_records_zeros() {
        let s = boxed(8, 8);
        let m = Mirror::full_boundary(&s).unwrap();
        let rec = record_at_mirror(&[s.clone(), s.clone()], &m, Resolution::Full, 0.0).unwrap();
        assert_eq!(rec.samples.len(), 2 * m.len());
        assert!(rec.samples.iter().all(|&v| v == 0.0));
        assert_eq!(rec.peak_time(), None);
    }

    #[test]
    fn flux_sign_follows_direction() {
        let mut s = boxed(8, 8);
        s.set_cell(3, 1, 1 << 4).unwrap();
        let m = Mirror::edge(&s, Edge::Bottom).unwrap();
        let i = m.cells().iter().position(|&c| c == s.grid().index(3, 1)).unwrap();
        assert!((m.flux(&s, i) - UNIT[1].1).abs() < 1e-15);
        s.set_cell(3, 1, 1 << 1).unwrap();
        assert!((m.flux(&s, i) + UNIT[1].1).abs() < 1e-15);
        s.set_cell(3, 1, 0b001001).unwrap();
        assert_eq!(m.flux(&s, i), 0.0);
    }

    #[test]
    fn one_trit_codomain() {
        let rec = TrmRecording {
            mirror_cells: vec![1, 2],
            samples: vec![0.3, -2.0, 0.0, 1e-300],
            resolution: Resolution::Full,
            duration: 2,
        };
        assert_eq!(rec.to_one_trit(0.0).samples, vec![1.0, -1.0, 0.0, 1.0]);
        assert_eq!(rec.to_one_trit(0.5).samples, vec![0.0, -1.0, 0.0, 0.0]);
    }

    #[test]
    fn replay_rejects_wrong_duration() {
        let s = boxed(8, 8);
        let m = Mirror::full_boundary(&s).unwrap();
        let mut rec = TrmRecording::zeros(&m, 3, Resolution::Full);
        rec.duration = 4;
        assert!(matches!(replay_reversed(&s, &rec, &m, 0), Err(LatticeError::DurationMismatch { .. })));
    }

    #[test]
    fn quantizer_is_exact_from_three_bits() {
        for n in 0..=6 {
            for m in 3..10 {
                assert_eq!(quantize_count(n, m), f64::from(n));
            }
            assert!(quantize_count(n, 1) <= quantize_count(n, 2));
            assert!(quantize_count(n, 2) <= quantize_count(n, 3));
        }
        assert_eq!(quantize_count(5, 1), 4.0);
        assert_eq!(quantize_count(3, 1), 0.0);
        assert_eq!(quantize_count(6, 2), 6.0);
    }

    #[test]
    fn backscatter_zero_wait_is_zero() {
        let p = BackscatterParams {
            waiting_steps: 0,
            width: 16,
            height: 16,
            ..BackscatterParams::default()
        };
        assert_eq!(backscatter_loss_experiment(&p, 1).unwrap(), 0.0);
    }

    #[test]
    fn window_must_fit() {
        let s = boxed(16, 16);
        let w = FocusWindow {
            window: 5,
            control_distance: 4,
            ..FocusWindow::default()
        };
        let src = s.grid().index(8, 8);
        assert!(matches!(focus_ratio(&[s.clone()], src, &w), Err(LatticeError::BadWindow { .. })));
        assert!(matches!(focus_ratio(&[s.clone()], 0, &FocusWindow { window: 1, ..w }), Err(LatticeError::ObstacleCell { .. })));
        assert_eq!(focus_ratio(&[s], src, &FocusWindow { window: 1, ..w }).unwrap(), 1.0);
    }
}
