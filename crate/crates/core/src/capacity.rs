//! Downlink sum-capacity of a selected antenna subset and zero-forcing
//! water-filling.
//!
//! The objective is
//!
//! ```text
//! C = log2 det(I + ρ (N_R / N_TS) · H_c P H_c^H)
//! ```
//!
//! with `H_c` the `N_TS × N_R` rows of the selected antennas and `P` a
//! diagonal per-user power split. By Sylvester's identity the determinant is
//! evaluated on whichever Gram matrix (`N_TS × N_TS` or `N_R × N_R`) is
//! smaller, through a Cholesky factorization of the symmetrized argument.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelTensor;
use crate::linalg::{self, CMatrix, NotPositiveDefinite};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CapacityError {
    #[error("channel matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("empty antenna selection")]
    EmptySelection,
    #[error("antenna index {index} repeated or out of range (N_T = {n_t})")]
    BadIndex { index: usize, n_t: usize },
    #[error("zero forcing infeasible: {n_ts} selected antennas cannot serve {n_r} users")]
    TooFewAntennas { n_ts: usize, n_r: usize },
    #[error("zero forcing infeasible: channel is rank deficient on subcarrier {subcarrier}")]
    RankDeficient { subcarrier: usize },
    #[error("power budget must be positive and finite, got {0}")]
    BadBudget(f64),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Factorization(#[from] NotPositiveDefinite),
}

pub type Result<T> = std::result::Result<T, CapacityError>;

/// Converts an SNR in dB to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Symbols of the objective: linear SNR, user count and selected-antenna count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    pub rho: f64,
    pub n_r: usize,
    pub n_ts: usize,
}

impl CapacityParams {
    pub fn new(rho: f64, n_r: usize, n_ts: usize) -> Result<Self> {
        let p = Self { rho, n_r, n_ts };
        p.validate()?;
        Ok(p)
    }

    pub fn from_db(snr_db: f64, n_r: usize, n_ts: usize) -> Result<Self> {
        Self::new(db_to_linear(snr_db), n_r, n_ts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(CapacityError::Params(format!("rho must be positive, got {}", self.rho)));
        }
        if self.n_r == 0 || self.n_ts == 0 {
            return Err(CapacityError::Params("n_r and n_ts must be at least 1".into()));
        }
        Ok(())
    }

    /// Water-filling budget `ρ N_R / N_TS`.
    pub fn total_power(&self) -> f64 {
        self.rho * self.n_r as f64 / self.n_ts as f64
    }
}

/// Diagonal of `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub weights: Vec<f64>,
}

impl PowerAllocation {
    /// `1/N_R` for every user.
    pub fn equal(n_r: usize) -> Self {
        Self {
            weights: vec![1.0 / n_r as f64; n_r],
        }
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(CapacityError::Params("power weights must be finite and non-negative".into()));
        }
        Ok(Self { weights })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `log2 det(I + scale · H P H^H)` over the smaller Gram side.
///
/// `h` is `n × n_r` row-major.
fn log2_det_weighted(h: &[Complex64], n: usize, n_r: usize, weights: &[f64], scale: f64, gram: &mut Vec<Complex64>) -> Result<f64> {
    if n <= n_r {
        // I_n + scale · Σ_r p_r h_ir conj(h_jr)
        gram.clear();
        gram.resize(n * n, Complex64::new(0.0, 0.0));
        for i in 0..n {
            for j in 0..=i {
                let mut s = Complex64::new(0.0, 0.0);
                for r in 0..n_r {
                    s += h[i * n_r + r] * h[j * n_r + r].conj() * weights[r];
                }
                gram[i * n + j] = s * scale;
                gram[j * n + i] = (s * scale).conj();
            }
            gram[i * n + i] += 1.0;
        }
        Ok(linalg::hermitian_log2_det(gram, n)?)
    } else {
        // I_{n_r} + scale · P^{1/2} H^H H P^{1/2}
        gram.clear();
        gram.resize(n_r * n_r, Complex64::new(0.0, 0.0));
        for r in 0..n_r {
            for q in 0..=r {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    s += h[i * n_r + r].conj() * h[i * n_r + q];
                }
                let v = s * (scale * (weights[r] * weights[q]).sqrt());
                gram[r * n_r + q] = v;
                gram[q * n_r + r] = v.conj();
            }
            gram[r * n_r + r] += 1.0;
        }
        Ok(linalg::hermitian_log2_det(gram, n_r)?)
    }
}

/// Sum capacity in bits/s/Hz for an `N_TS × N_R` matrix `h_c`.
pub fn sum_capacity(h_c: &CMatrix, p: &PowerAllocation, params: &CapacityParams) -> Result<f64> {
    params.validate()?;
    if h_c.rows() != params.n_ts || h_c.cols() != params.n_r {
        return Err(CapacityError::Dimension(format!(
            "H_c is {}×{}, params expect {}×{}",
            h_c.rows(),
            h_c.cols(),
            params.n_ts,
            params.n_r
        )));
    }
    if p.weights.len() != params.n_r {
        return Err(CapacityError::Dimension(format!(
            "{} power weights for {} users",
            p.weights.len(),
            params.n_r
        )));
    }
    if !h_c.is_finite() {
        return Err(CapacityError::NonFinite);
    }
    let scale = params.rho * params.n_r as f64 / params.n_ts as f64;
    let mut gram = Vec::new();
    let c = log2_det_weighted(h_c.as_slice(), h_c.rows(), h_c.cols(), &p.weights, scale, &mut gram)?;
    Ok(c.max(0.0))
}

/// The receive-side analogue: same log-det without the `N_R / N_TS` factor.
pub fn receive_capacity(h_c: &CMatrix, p: &PowerAllocation, rho: f64) -> Result<f64> {
    if !h_c.is_finite() {
        return Err(CapacityError::NonFinite);
    }
    if p.weights.len() != h_c.cols() {
        return Err(CapacityError::Dimension("power weights vs users".into()));
    }
    let mut gram = Vec::new();
    let c = log2_det_weighted(h_c.as_slice(), h_c.rows(), h_c.cols(), &p.weights, rho, &mut gram)?;
    Ok(c.max(0.0))
}

fn check_selection(n_t: usize, selected: &[usize]) -> Result<()> {
    if selected.is_empty() {
        return Err(CapacityError::EmptySelection);
    }
    let mut seen = vec![false; n_t];
    for &i in selected {
        if i >= n_t || seen[i] {
            return Err(CapacityError::BadIndex { index: i, n_t });
        }
        seen[i] = true;
    }
    Ok(())
}

fn gather_rows(h: &ChannelTensor, s: usize, selected: &[usize], out: &mut Vec<Complex64>) {
    out.clear();
    for &t in selected {
        for r in 0..h.n_r() {
            out.push(h.get(t, r, s));
        }
    }
}

/// Arithmetic mean of [`sum_capacity`] over every subcarrier of `h`.
pub fn mean_capacity_over_subcarriers(
    h: &ChannelTensor,
    selected: &[usize],
    p: &PowerAllocation,
    params: &CapacityParams,
) -> Result<f64> {
    params.validate()?;
    check_selection(h.n_t(), selected)?;
    if selected.len() != params.n_ts || h.n_r() != params.n_r || p.weights.len() != params.n_r {
        return Err(CapacityError::Dimension(format!(
            "selection of {} antennas / {} users vs params n_ts={} n_r={}",
            selected.len(),
            h.n_r(),
            params.n_ts,
            params.n_r
        )));
    }
    let scale = params.rho * params.n_r as f64 / params.n_ts as f64;
    let mut rows = Vec::new();
    let mut gram = Vec::new();
    let mut total = 0.0;
    for s in 0..h.n_subcarriers() {
        gather_rows(h, s, selected, &mut rows);
        if rows.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CapacityError::NonFinite);
        }
        total += log2_det_weighted(&rows, selected.len(), h.n_r(), &p.weights, scale, &mut gram)?.max(0.0);
    }
    Ok(total / h.n_subcarriers() as f64)
}

/// Equal-power (`P = I / N_R`) mean capacity with `N_TS = selected.len()`.
///
/// This is the objective every selection algorithm ranks subsets by.
pub fn equal_power_rate(h: &ChannelTensor, selected: &[usize], rho: f64) -> Result<f64> {
    let params = CapacityParams::new(rho, h.n_r(), selected.len().max(1))?;
    mean_capacity_over_subcarriers(h, selected, &PowerAllocation::equal(h.n_r()), &params)
}

/// Equal-power mean capacity where the `N_R / N_TS` factor uses
/// `n_ts_scaling` instead of the selection size.
pub fn equal_power_rate_scaled(h: &ChannelTensor, selected: &[usize], rho: f64, n_ts_scaling: usize) -> Result<f64> {
    CapacityParams::new(rho, h.n_r(), n_ts_scaling.max(1))?;
    check_selection(h.n_t(), selected)?;
    let weights = vec![1.0 / h.n_r() as f64; h.n_r()];
    let scale = rho * h.n_r() as f64 / n_ts_scaling as f64;
    let mut rows = Vec::new();
    let mut gram = Vec::new();
    let mut total = 0.0;
    for s in 0..h.n_subcarriers() {
        gather_rows(h, s, selected, &mut rows);
        total += log2_det_weighted(&rows, selected.len(), h.n_r(), &weights, scale, &mut gram)?.max(0.0);
    }
    Ok(total / h.n_subcarriers() as f64)
}

/// Result of classic water-filling over parallel channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterFill {
    pub powers: Vec<f64>,
    /// Common value of `p_r + 1/g_r` over active users.
    pub level: f64,
}

/// Maximizes `Σ log2(1 + g_r p_r)` subject to `Σ p_r = budget`, `p_r ≥ 0`.
///
/// Users with non-positive gain never receive power. The water level is found
/// by repeatedly dropping the weakest user while its allocation would be
/// negative.
pub fn waterfill(gains: &[f64], budget: f64) -> Result<WaterFill> {
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(CapacityError::BadBudget(budget));
    }
    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if order.is_empty() {
        return Err(CapacityError::Params("no user has positive gain".into()));
    }
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let mut active = order.len();
    let level = loop {
        let inv_sum: f64 = order[..active].iter().map(|&i| 1.0 / gains[i]).sum();
        let level = (budget + inv_sum) / active as f64;
        let weakest = order[active - 1];
        if level - 1.0 / gains[weakest] >= 0.0 || active == 1 {
            break level;
        }
        active -= 1;
    };
    let mut powers = vec![0.0; gains.len()];
    for &i in &order[..active] {
        powers[i] = (level - 1.0 / gains[i]).max(0.0);
    }
    Ok(WaterFill { powers, level })
}

/// Per-user effective zero-forcing gains `1 / [(H_c^H H_c)^{-1}]_rr`.
pub fn zero_forcing_gains(h_c: &CMatrix) -> Result<Vec<f64>> {
    let (n_ts, n_r) = (h_c.rows(), h_c.cols());
    if n_ts < n_r {
        return Err(CapacityError::TooFewAntennas { n_ts, n_r });
    }
    if !h_c.is_finite() {
        return Err(CapacityError::NonFinite);
    }
    zf_gains_from_rows(h_c.as_slice(), n_ts, n_r, &mut Vec::new()).ok_or(CapacityError::RankDeficient { subcarrier: 0 })
}

const RANK_TOL: f64 = 1e-10;

fn zf_gains_from_rows(h: &[Complex64], n: usize, n_r: usize, gram: &mut Vec<Complex64>) -> Option<Vec<f64>> {
    gram.clear();
    gram.resize(n_r * n_r, Complex64::new(0.0, 0.0));
    for r in 0..n_r {
        for q in 0..=r {
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..n {
                s += h[i * n_r + r].conj() * h[i * n_r + q];
            }
            gram[r * n_r + q] = s;
            gram[q * n_r + r] = s.conj();
        }
    }
    let inv_diag = linalg::hermitian_inverse_diagonal(gram, n_r, RANK_TOL).ok()?;
    Some(inv_diag.into_iter().map(|d| 1.0 / d).collect())
}

/// Water-filled zero-forcing power split for one subcarrier.
pub fn waterfill_zero_forcing(h_c: &CMatrix, total_power: f64) -> Result<PowerAllocation> {
    let gains = zero_forcing_gains(h_c)?;
    Ok(PowerAllocation {
        weights: waterfill(&gains, total_power)?.powers,
    })
}

/// Zero-forcing rate `Σ_r log2(1 + g_r p_r)`.
pub fn zero_forcing_rate(gains: &[f64], p: &PowerAllocation) -> f64 {
    gains.iter().zip(&p.weights).map(|(g, w)| (1.0 + g * w).log2()).sum()
}

/// Mean over subcarriers of the water-filled zero-forcing rate.
pub fn rate_after_waterfilling(
    h: &ChannelTensor,
    selected: &[usize],
    params: &CapacityParams,
    total_power: f64,
) -> Result<f64> {
    params.validate()?;
    check_selection(h.n_t(), selected)?;
    let (n, n_r) = (selected.len(), h.n_r());
    if n < n_r {
        return Err(CapacityError::TooFewAntennas { n_ts: n, n_r });
    }
    let mut rows = Vec::new();
    let mut gram = Vec::new();
    let mut total = 0.0;
    for s in 0..h.n_subcarriers() {
        gather_rows(h, s, selected, &mut rows);
        let gains = zf_gains_from_rows(&rows, n, n_r, &mut gram).ok_or(CapacityError::RankDeficient { subcarrier: s })?;
        let wf = waterfill(&gains, total_power)?;
        total += gains.iter().zip(&wf.powers).map(|(g, p)| (1.0 + g * p).log2()).sum::<f64>();
    }
    Ok(total / h.n_subcarriers() as f64)
}

/// [`rate_after_waterfilling`] with the default budget `ρ N_R / N_TS`.
pub fn waterfilled_rate(h: &ChannelTensor, selected: &[usize], rho: f64) -> Result<f64> {
    let params = CapacityParams::new(rho, h.n_r(), selected.len().max(1))?;
    rate_after_waterfilling(h, selected, &params, params.total_power())
}
