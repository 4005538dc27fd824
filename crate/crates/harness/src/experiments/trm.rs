use serde::{Deserialize, Serialize};

use revsim_core::lattice::{trm_refocus_experiment, TrmParams};
use revsim_core::seed;

use super::Experiment;
use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrmConfig {
    pub params: TrmParams,
    pub realizations: usize,
}

impl Default for TrmConfig {
    fn default() -> Self {
        Self {
            params: TrmParams::default(),
            realizations: 10,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrmJob {
    pub realization: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrmRow {
    pub config_hash: String,
    pub seed: u64,
    pub realization: usize,
    pub emitted: u64,
    pub reference_ratio: f64,
    pub full: f64,
    pub one_edge: f64,
    pub one_trit: f64,
    pub background: f64,
    /// `full >= one_edge` for this realization.
    pub aperture_monotone: bool,
}

pub struct TrmRefocus;

impl Experiment for TrmRefocus {
    const NAME: &'static str = "trm_refocus";
    type Config = TrmConfig;
    type Job = TrmJob;
    type Row = TrmRow;

    fn validate(config: &TrmConfig) -> Result<()> {
        if config.realizations == 0 || config.params.duration == 0 {
            return Err(HarnessError::Config("realizations and duration must be positive".into()));
        }
        Ok(())
    }

    fn jobs(config: &TrmConfig, seed: u64) -> Vec<TrmJob> {
        (0..config.realizations)
            .map(|realization| TrmJob {
                realization,
                seed: seed::derive(seed, &[realization as u64]),
            })
            .collect()
    }

    fn job_seed(job: &TrmJob) -> u64 {
        job.seed
    }

    fn run_job(config: &TrmConfig, job: &TrmJob, hash: &str) -> Result<Vec<TrmRow>> {
        let o = trm_refocus_experiment(&config.params, job.seed)?;
        Ok(vec![TrmRow {
            config_hash: hash.to_owned(),
            seed: job.seed,
            realization: job.realization,
            emitted: o.emitted,
            reference_ratio: o.reference_ratio,
            full: o.full,
            one_edge: o.one_edge,
            one_trit: o.one_trit,
            background: o.background,
            aperture_monotone: o.full >= o.one_edge,
        }])
    }
}
