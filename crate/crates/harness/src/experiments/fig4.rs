use serde::{Deserialize, Serialize};

use revsim_core::channel::{perturb_csi, subsample_subcarriers, SceneConfig};
use revsim_core::seed;
use revsim_core::selection::{score, select_greedy, select_rpn_parallel, Algorithm};

use super::fig3::join_selection;
use super::{scene_channel_for, scene_job_seed, Experiment, SelectionSettings, TAG_RPN};
use crate::{HarnessError, Result};

const TAG_NOISE: u64 = 0xC5;
const TAG_SUBSAMPLE: u64 = 0x5B;

/// Selection on noisy or subsampled CSI, scored on the true channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Config {
    pub scene: SceneConfig,
    pub selection: SelectionSettings,
    pub num_users: usize,
    pub realizations: usize,
    pub csi_variances: Vec<f64>,
    pub subcarrier_fractions: Vec<f64>,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            selection: SelectionSettings::default(),
            num_users: 12,
            realizations: 10,
            csi_variances: vec![0.0, 0.01, 0.05, 0.1],
            subcarrier_fractions: vec![1.0, 0.5, 0.1],
        }
    }
}

impl Fig4Config {
    /// Subcarriers kept for `fraction`, at least one.
    pub fn subcarriers_used(&self, fraction: f64) -> usize {
        ((fraction * self.scene.num_subcarriers as f64).round() as usize).clamp(1, self.scene.num_subcarriers)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Fig4Job {
    pub realization: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub config_hash: String,
    pub seed: u64,
    pub num_users: usize,
    pub realization: usize,
    pub csi_variance: f64,
    pub subcarrier_fraction: f64,
    pub subcarriers_used: usize,
    pub algorithm: Algorithm,
    /// Rates on the true channel.
    pub rate_equal_power: f64,
    pub rate_waterfilled: Option<f64>,
    pub converged: bool,
    pub selected: String,
}

pub struct Fig4;

impl Experiment for Fig4 {
    const NAME: &'static str = "fig4_robustness";
    type Config = Fig4Config;
    type Job = Fig4Job;
    type Row = Fig4Row;

    fn validate(config: &Fig4Config) -> Result<()> {
        config.selection.validate(config.scene.num_antennas)?;
        if config.num_users == 0 || config.realizations == 0 {
            return Err(HarnessError::Config("num_users and realizations must be positive".into()));
        }
        if config.csi_variances.is_empty() || config.csi_variances.iter().any(|v| !(*v >= 0.0)) {
            return Err(HarnessError::Config("csi_variances must be non-empty and non-negative".into()));
        }
        if config.subcarrier_fractions.is_empty() || config.subcarrier_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(HarnessError::Config("subcarrier_fractions must be non-empty and in (0, 1]".into()));
        }
        Ok(())
    }

    fn jobs(config: &Fig4Config, seed: u64) -> Vec<Fig4Job> {
        (0..config.realizations)
            .map(|realization| Fig4Job {
                realization,
                seed: scene_job_seed(seed, config.num_users, realization),
            })
            .collect()
    }

    fn job_seed(job: &Fig4Job) -> u64 {
        job.seed
    }

    fn run_job(config: &Fig4Config, job: &Fig4Job, hash: &str) -> Result<Vec<Fig4Row>> {
        let s = &config.selection;
        let rho = s.rho();
        let truth = scene_channel_for(&config.scene, config.num_users, job.seed)?;
        let topology = s.topology(truth.n_t())?;
        // Same noise draw and subcarrier subset in every cell, so cells differ
        // only by variance and fraction.
        let noise_seed = seed::derive(job.seed, &[TAG_NOISE]);
        let subsample_seed = seed::derive(job.seed, &[TAG_SUBSAMPLE]);
        let rpn_seed = seed::derive(job.seed, &[TAG_RPN]);

        let mut rows = Vec::new();
        for &variance in &config.csi_variances {
            let noisy = perturb_csi(&truth, variance, noise_seed)?;
            for &fraction in &config.subcarrier_fractions {
                let used = config.subcarriers_used(fraction);
                let estimate = subsample_subcarriers(&noisy, used, subsample_seed)?;
                let row = |algorithm, rate: (f64, Option<f64>), converged, selected: String| Fig4Row {
                    config_hash: hash.to_owned(),
                    seed: job.seed,
                    num_users: config.num_users,
                    realization: job.realization,
                    csi_variance: variance,
                    subcarrier_fraction: fraction,
                    subcarriers_used: used,
                    algorithm,
                    rate_equal_power: rate.0,
                    rate_waterfilled: rate.1,
                    converged,
                    selected,
                };

                let greedy = select_greedy(&estimate, rho, s.n_ts)?;
                rows.push(row(
                    Algorithm::Greedy,
                    score(&truth, &greedy.selected, rho)?,
                    true,
                    join_selection(&greedy.selected),
                ));

                let rpn = select_rpn_parallel(&estimate, rho, s.n_ts, &topology, s.n_instances, rpn_seed)?;
                let true_rates = rpn
                    .runs
                    .iter()
                    .map(|r| score(&truth, &r.selected, rho))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                // The best instance is picked on the estimate, then scored on the truth.
                rows.push(row(
                    Algorithm::RpnBest,
                    score(&truth, &rpn.best.selected, rho)?,
                    rpn.best.converged,
                    join_selection(&rpn.best.selected),
                ));
                let n = true_rates.len() as f64;
                let mean_eq = true_rates.iter().map(|r| r.0).sum::<f64>() / n;
                let mean_wf = true_rates.iter().map(|r| r.1).sum::<Option<f64>>().map(|v| v / n);
                rows.push(row(
                    Algorithm::RpnAverage,
                    (mean_eq, mean_wf),
                    rpn.runs.iter().all(|r| r.converged),
                    String::new(),
                ));
            }
        }
        Ok(rows)
    }
}
