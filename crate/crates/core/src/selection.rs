//! Transmit-antenna selection: reversing-Petri-net search and its baselines.
//!
//! All algorithms rank subsets by the equal-power mean capacity
//! ([`capacity::equal_power_rate`]). Water-filled zero-forcing rates are
//! computed on the final subset only, and are `None` when zero forcing is
//! infeasible for it.

use std::sync::Arc;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{self, CapacityError};
use crate::channel::ChannelTensor;
use crate::rpn::{CapacityCache, RpnError, RpnNet, Topology};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum SelectionError {
    #[error("cannot select {n_ts} of {n_t} antennas")]
    BadCount { n_ts: usize, n_t: usize },
    #[error("exhaustive search over {count} subsets exceeds the limit of {limit}")]
    TooManySubsets { count: u128, limit: u128 },
    #[error("need at least one RPN instance")]
    NoInstances,
    #[error(transparent)]
    Rpn(#[from] RpnError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
}

pub type Result<T> = std::result::Result<T, SelectionError>;

/// Upper bound on subsets enumerated by [`select_exhaustive`].
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

pub const DEFAULT_MAX_PASSES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rpn,
    RpnBest,
    RpnAverage,
    Greedy,
    Random,
    Exhaustive,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Rpn => "rpn",
            Algorithm::RpnBest => "rpn_best",
            Algorithm::RpnAverage => "rpn_average",
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
            Algorithm::Exhaustive => "exhaustive",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// Selected antennas, ascending.
    pub selected: Vec<usize>,
    pub rate_equal_power: f64,
    pub rate_waterfilled: Option<f64>,
    pub passes_used: usize,
    pub transitions_fired: usize,
    pub converged: bool,
    /// Objective evaluations spent (subsets scored).
    pub evaluations: u64,
    pub algorithm: Algorithm,
}

/// Rates of a finished selection, evaluated on `h`.
pub fn score(h: &ChannelTensor, selected: &[usize], rho: f64) -> Result<(f64, Option<f64>)> {
    let eq = capacity::equal_power_rate(h, selected, rho)?;
    let wf = match capacity::waterfilled_rate(h, selected, rho) {
        Ok(v) => Some(v),
        Err(CapacityError::TooFewAntennas { .. } | CapacityError::RankDeficient { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok((eq, wf))
}

fn check_count(h: &ChannelTensor, n_ts: usize) -> Result<()> {
    if n_ts == 0 || n_ts > h.n_t() {
        return Err(SelectionError::BadCount { n_ts, n_t: h.n_t() });
    }
    Ok(())
}

fn outcome(h: &ChannelTensor, mut selected: Vec<usize>, rho: f64, algorithm: Algorithm) -> Result<SelectionOutcome> {
    selected.sort_unstable();
    let (rate_equal_power, rate_waterfilled) = score(h, &selected, rho)?;
    Ok(SelectionOutcome {
        selected,
        rate_equal_power,
        rate_waterfilled,
        passes_used: 0,
        transitions_fired: 0,
        converged: true,
        evaluations: 0,
        algorithm,
    })
}

/// Runs one RPN from `n_ts` tokens placed uniformly at random and returns the
/// converged net alongside its outcome.
pub fn run_rpn(
    h: &ChannelTensor,
    rho: f64,
    n_ts: usize,
    topology: &Arc<Topology>,
    seed: u64,
    max_passes: usize,
) -> Result<(RpnNet, SelectionOutcome)> {
    check_count(h, n_ts)?;
    if topology.num_places() != h.n_t() {
        return Err(RpnError::PlaceCountMismatch {
            places: topology.num_places(),
            antennas: h.n_t(),
        }
        .into());
    }
    let mut rng = seed::derived_rng(seed, &[0x70C]);
    let tokens = index::sample(&mut rng, h.n_t(), n_ts).into_vec();
    let mut net = RpnNet::with_tokens(Arc::clone(topology), &tokens)?;
    let mut cache = CapacityCache::new(h, rho);
    let conv = net.run_to_convergence(&mut cache, seed::derive(seed, &[0x9A55]), max_passes)?;
    let mut out = outcome(h, net.tokens(), rho, Algorithm::Rpn)?;
    out.passes_used = conv.passes_used;
    out.transitions_fired = conv.transitions_fired;
    out.converged = conv.converged;
    out.evaluations = cache.evaluations();
    Ok((net, out))
}

pub fn select_rpn(h: &ChannelTensor, rho: f64, n_ts: usize, topology: &Arc<Topology>, seed: u64) -> Result<SelectionOutcome> {
    Ok(run_rpn(h, rho, n_ts, topology, seed, DEFAULT_MAX_PASSES)?.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelOutcome {
    /// Highest equal-power rate; earliest instance wins ties.
    pub best: SelectionOutcome,
    pub average_rate: f64,
    /// Mean water-filled rate, when every instance admits zero forcing.
    pub average_rate_waterfilled: Option<f64>,
    pub runs: Vec<SelectionOutcome>,
}

/// Independent RPN instances with seeds derived from `seed`.
pub fn select_rpn_parallel(
    h: &ChannelTensor,
    rho: f64,
    n_ts: usize,
    topology: &Arc<Topology>,
    n_instances: usize,
    seed: u64,
) -> Result<ParallelOutcome> {
    let seeds: Vec<u64> = (0..n_instances as u64).map(|i| seed::derive(seed, &[0x9A2, i])).collect();
    select_rpn_with_seeds(h, rho, n_ts, topology, &seeds)
}

/// RPN instances with explicit seeds, one per instance.
pub fn select_rpn_with_seeds(
    h: &ChannelTensor,
    rho: f64,
    n_ts: usize,
    topology: &Arc<Topology>,
    seeds: &[u64],
) -> Result<ParallelOutcome> {
    if seeds.is_empty() {
        return Err(SelectionError::NoInstances);
    }
    let runs = seeds
        .par_iter()
        .map(|&s| select_rpn(h, rho, n_ts, topology, s))
        .collect::<Result<Vec<_>>>()?;
    let mut best_idx = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.rate_equal_power > runs[best_idx].rate_equal_power {
            best_idx = i;
        }
    }
    let n = runs.len() as f64;
    let average_rate = runs.iter().map(|r| r.rate_equal_power).sum::<f64>() / n;
    let average_rate_waterfilled = runs
        .iter()
        .map(|r| r.rate_waterfilled)
        .sum::<Option<f64>>()
        .map(|s| s / n);
    let mut best = runs[best_idx].clone();
    best.algorithm = Algorithm::RpnBest;
    Ok(ParallelOutcome {
        best,
        average_rate,
        average_rate_waterfilled,
        runs,
    })
}

/// How greedy sets the `N_TS` in the `N_R / N_TS` factor while growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyScaling {
    /// Size of the candidate set at each step.
    #[default]
    CurrentSize,
    /// The final target size throughout.
    FinalSize,
}

/// Antenna added at each greedy step and the objective after adding it.
pub fn greedy_path(h: &ChannelTensor, rho: f64, n_ts: usize, scaling: GreedyScaling) -> Result<Vec<(usize, f64)>> {
    check_count(h, n_ts)?;
    let mut chosen: Vec<usize> = Vec::with_capacity(n_ts);
    let mut path = Vec::with_capacity(n_ts);
    let mut available = vec![true; h.n_t()];
    for step in 0..n_ts {
        let scaling_n = match scaling {
            GreedyScaling::CurrentSize => step + 1,
            GreedyScaling::FinalSize => n_ts,
        };
        let candidates: Vec<usize> = (0..h.n_t()).filter(|&t| available[t]).collect();
        let scores = candidates
            .par_iter()
            .map(|&t| {
                let mut set = chosen.clone();
                set.push(t);
                set.sort_unstable();
                capacity::equal_power_rate_scaled(h, &set, rho, scaling_n)
            })
            .collect::<std::result::Result<Vec<f64>, _>>()?;
        let mut best = 0;
        for (i, &v) in scores.iter().enumerate() {
            if v > scores[best] {
                best = i;
            }
        }
        let pick = candidates[best];
        available[pick] = false;
        chosen.push(pick);
        path.push((pick, scores[best]));
    }
    Ok(path)
}

/// Centralised greedy: add the antenna that raises the objective most.
pub fn select_greedy(h: &ChannelTensor, rho: f64, n_ts: usize) -> Result<SelectionOutcome> {
    select_greedy_with(h, rho, n_ts, GreedyScaling::CurrentSize)
}

pub fn select_greedy_with(h: &ChannelTensor, rho: f64, n_ts: usize, scaling: GreedyScaling) -> Result<SelectionOutcome> {
    let path = greedy_path(h, rho, n_ts, scaling)?;
    let n_t = h.n_t() as u64;
    let evaluations = (0..n_ts as u64).map(|k| n_t - k).sum();
    let mut out = outcome(h, path.into_iter().map(|(t, _)| t).collect(), rho, Algorithm::Greedy)?;
    out.evaluations = evaluations;
    Ok(out)
}

/// Uniformly random subset of `n_ts` antennas.
pub fn select_random(h: &ChannelTensor, rho: f64, n_ts: usize, seed: u64) -> Result<SelectionOutcome> {
    check_count(h, n_ts)?;
    let mut rng = seed::derived_rng(seed, &[0xDA7]);
    let picked = index::sample(&mut rng, h.n_t(), n_ts).into_vec();
    outcome(h, picked, rho, Algorithm::Random)
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Next `k`-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// True optimum by enumerating every subset; first subset in lexicographic
/// order wins ties.
pub fn select_exhaustive(h: &ChannelTensor, rho: f64, n_ts: usize) -> Result<SelectionOutcome> {
    check_count(h, n_ts)?;
    let count = binomial(h.n_t(), n_ts);
    if count > EXHAUSTIVE_LIMIT {
        return Err(SelectionError::TooManySubsets {
            count,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut comb: Vec<usize> = (0..n_ts).collect();
    let mut best = (f64::NEG_INFINITY, comb.clone());
    let mut evaluations = 0u64;
    loop {
        let v = capacity::equal_power_rate(h, &comb, rho)?;
        evaluations += 1;
        if v > best.0 {
            best = (v, comb.clone());
        }
        if !next_combination(&mut comb, h.n_t()) {
            break;
        }
    }
    let mut out = outcome(h, best.1, rho, Algorithm::Exhaustive)?;
    out.evaluations = evaluations;
    Ok(out)
}
