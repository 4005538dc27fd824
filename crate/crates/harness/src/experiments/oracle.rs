use std::sync::Arc;

use serde::{Deserialize, Serialize};

use revsim_core::capacity::db_to_linear;
use revsim_core::channel::ChannelTensor;
use revsim_core::rpn::Topology;
use revsim_core::seed;
use revsim_core::selection::{
    binomial, select_exhaustive, select_greedy, select_random, select_rpn_parallel, Algorithm, SelectionOutcome,
    EXHAUSTIVE_LIMIT,
};

use super::{Experiment, TAG_RANDOM, TAG_RPN};
use crate::{HarnessError, Result};

const TAG_CHANNEL: u64 = 0xC4;

/// Small Rayleigh instances where exhaustive search gives the true optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Torus shapes `(rows, cols)`, cycled over instances.
    pub topologies: Vec<(usize, usize)>,
    pub num_users: usize,
    pub n_ts: usize,
    pub instances: usize,
    pub subcarriers: usize,
    pub snr_db: f64,
    pub n_instances: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            topologies: vec![(2, 4), (2, 5), (3, 4)],
            num_users: 2,
            n_ts: 3,
            instances: 100,
            subcarriers: 4,
            snr_db: -5.0,
            n_instances: 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleJob {
    pub instance: usize,
    pub rows: usize,
    pub cols: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub config_hash: String,
    pub seed: u64,
    pub instance: usize,
    pub n_t: usize,
    pub algorithm: Algorithm,
    pub rate: f64,
    pub optimum: f64,
    /// `optimum - rate`; never negative.
    pub gap: f64,
    pub converged: bool,
    pub evaluations: u64,
}

pub struct Oracle;

impl Experiment for Oracle {
    const NAME: &'static str = "rpn_vs_oracle";
    type Config = OracleConfig;
    type Job = OracleJob;
    type Row = OracleRow;

    fn validate(config: &OracleConfig) -> Result<()> {
        if config.topologies.is_empty() || config.instances == 0 || config.n_instances == 0 {
            return Err(HarnessError::Config("topologies, instances and n_instances must be non-empty".into()));
        }
        if config.num_users == 0 || config.subcarriers == 0 {
            return Err(HarnessError::Config("num_users and subcarriers must be positive".into()));
        }
        for &(r, c) in &config.topologies {
            let n_t = r * c;
            if r < 2 || c < 2 || config.n_ts == 0 || config.n_ts > n_t {
                return Err(HarnessError::Config(format!("cannot select {} antennas on a {r}×{c} torus", config.n_ts)));
            }
            let count = binomial(n_t, config.n_ts);
            if count > EXHAUSTIVE_LIMIT {
                return Err(HarnessError::Config(format!("{count} subsets on {r}×{c} exceed the exhaustive limit")));
            }
        }
        Ok(())
    }

    fn jobs(config: &OracleConfig, seed: u64) -> Vec<OracleJob> {
        (0..config.instances)
            .map(|instance| {
                let (rows, cols) = config.topologies[instance % config.topologies.len()];
                OracleJob {
                    instance,
                    rows,
                    cols,
                    seed: seed::derive(seed, &[instance as u64]),
                }
            })
            .collect()
    }

    fn job_seed(job: &OracleJob) -> u64 {
        job.seed
    }

    fn run_job(config: &OracleConfig, job: &OracleJob, hash: &str) -> Result<Vec<OracleRow>> {
        let n_t = job.rows * job.cols;
        let rho = db_to_linear(config.snr_db);
        let h = ChannelTensor::rayleigh(n_t, config.num_users, config.subcarriers, seed::derive(job.seed, &[TAG_CHANNEL]));
        let topology = Arc::new(Topology::torus(job.rows, job.cols)?);

        let exhaustive = select_exhaustive(&h, rho, config.n_ts)?;
        let greedy = select_greedy(&h, rho, config.n_ts)?;
        let random = select_random(&h, rho, config.n_ts, seed::derive(job.seed, &[TAG_RANDOM]))?;
        let rpn = select_rpn_parallel(&h, rho, config.n_ts, &topology, config.n_instances, seed::derive(job.seed, &[TAG_RPN]))?;

        let optimum = exhaustive.rate_equal_power;
        let row = |algorithm, rate: f64, converged, evaluations| OracleRow {
            config_hash: hash.to_owned(),
            seed: job.seed,
            instance: job.instance,
            n_t,
            algorithm,
            rate,
            optimum,
            gap: optimum - rate,
            converged,
            evaluations,
        };
        let from = |o: &SelectionOutcome| row(o.algorithm, o.rate_equal_power, o.converged, o.evaluations);
        Ok(vec![
            from(&exhaustive),
            from(&greedy),
            from(&random),
            from(&rpn.best),
            row(
                Algorithm::RpnAverage,
                rpn.average_rate,
                rpn.runs.iter().all(|r| r.converged),
                rpn.runs.iter().map(|r| r.evaluations).sum(),
            ),
        ])
    }
}
