use serde::{Deserialize, Serialize};

use revsim_core::channel::SceneConfig;
use revsim_core::seed;
use revsim_core::selection::{select_greedy, select_random, select_rpn_parallel, Algorithm, SelectionOutcome};

use super::{scene_channel_for, scene_job_seed, Experiment, SelectionSettings, TAG_RANDOM, TAG_RPN};
use crate::{HarnessError, Result};

/// Sum rate against user count for RPN, greedy and random selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Config {
    pub scene: SceneConfig,
    pub selection: SelectionSettings,
    pub user_counts: Vec<usize>,
    pub realizations: usize,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            selection: SelectionSettings::default(),
            user_counts: vec![4, 8, 12, 16],
            realizations: 10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Fig3Job {
    pub num_users: usize,
    pub realization: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub config_hash: String,
    pub seed: u64,
    pub num_users: usize,
    pub realization: usize,
    pub algorithm: Algorithm,
    pub rate_equal_power: f64,
    pub rate_waterfilled: Option<f64>,
    pub passes_used: usize,
    pub transitions_fired: usize,
    pub converged: bool,
    pub evaluations: u64,
    /// Selected antennas separated by `;`. Empty for `rpn_average`.
    pub selected: String,
}

pub struct Fig3;

pub(crate) fn join_selection(selected: &[usize]) -> String {
    selected.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// Parses the `selected` column back into antenna indices.
pub fn parse_selection(text: &str) -> Result<Vec<usize>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|t| t.parse().map_err(|_| HarnessError::Config(format!("bad antenna index {t:?}"))))
        .collect()
}

impl Fig3Row {
    fn from_outcome(hash: &str, job: &Fig3Job, o: &SelectionOutcome) -> Self {
        Self {
            config_hash: hash.to_owned(),
            seed: job.seed,
            num_users: job.num_users,
            realization: job.realization,
            algorithm: o.algorithm,
            rate_equal_power: o.rate_equal_power,
            rate_waterfilled: o.rate_waterfilled,
            passes_used: o.passes_used,
            transitions_fired: o.transitions_fired,
            converged: o.converged,
            evaluations: o.evaluations,
            selected: join_selection(&o.selected),
        }
    }
}

impl Experiment for Fig3 {
    const NAME: &'static str = "fig3_sweep";
    type Config = Fig3Config;
    type Job = Fig3Job;
    type Row = Fig3Row;

    fn validate(config: &Fig3Config) -> Result<()> {
        config.selection.validate(config.scene.num_antennas)?;
        if config.user_counts.is_empty() || config.user_counts.contains(&0) || config.realizations == 0 {
            return Err(HarnessError::Config("user_counts and realizations must be non-empty and positive".into()));
        }
        Ok(())
    }

    fn jobs(config: &Fig3Config, seed: u64) -> Vec<Fig3Job> {
        let mut jobs = Vec::new();
        for &num_users in &config.user_counts {
            for realization in 0..config.realizations {
                jobs.push(Fig3Job {
                    num_users,
                    realization,
                    seed: scene_job_seed(seed, num_users, realization),
                });
            }
        }
        jobs
    }

    fn job_seed(job: &Fig3Job) -> u64 {
        job.seed
    }

    fn run_job(config: &Fig3Config, job: &Fig3Job, hash: &str) -> Result<Vec<Fig3Row>> {
        let s = &config.selection;
        let rho = s.rho();
        let h = scene_channel_for(&config.scene, job.num_users, job.seed)?;
        let topology = s.topology(h.n_t())?;

        let greedy = select_greedy(&h, rho, s.n_ts)?;
        let random = select_random(&h, rho, s.n_ts, seed::derive(job.seed, &[TAG_RANDOM]))?;
        let rpn = select_rpn_parallel(&h, rho, s.n_ts, &topology, s.n_instances, seed::derive(job.seed, &[TAG_RPN]))?;

        let runs = &rpn.runs;
        let average = Fig3Row {
            algorithm: Algorithm::RpnAverage,
            rate_equal_power: rpn.average_rate,
            rate_waterfilled: rpn.average_rate_waterfilled,
            passes_used: runs.iter().map(|r| r.passes_used).max().unwrap_or(0),
            transitions_fired: runs.iter().map(|r| r.transitions_fired).sum(),
            converged: runs.iter().all(|r| r.converged),
            evaluations: runs.iter().map(|r| r.evaluations).sum(),
            selected: String::new(),
            ..Fig3Row::from_outcome(hash, job, &rpn.best)
        };
        Ok(vec![
            Fig3Row::from_outcome(hash, job, &greedy),
            Fig3Row::from_outcome(hash, job, &random),
            Fig3Row::from_outcome(hash, job, &rpn.best),
            average,
        ])
    }
}
