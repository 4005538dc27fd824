//! The five experiment families and their shared plumbing.

mod erasure;
mod fig3;
mod fig4;
mod oracle;
mod trm;

use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use revsim_core::capacity::db_to_linear;
use revsim_core::channel::{generate_scene, synthesize_channel, ChannelTensor, SceneConfig};
use revsim_core::rpn::Topology;
use revsim_core::seed;

use crate::{HarnessError, Result};

pub use erasure::{BackscatterSweep, ErasureConfig, ErasureRow, ErasureSweep};
pub use fig3::{parse_selection, Fig3, Fig3Config, Fig3Row};
pub use fig4::{Fig4, Fig4Config, Fig4Row};
pub use oracle::{Oracle, OracleConfig, OracleRow};
pub use trm::{TrmConfig, TrmRefocus, TrmRow};

/// An experiment: config → seeded jobs → rows.
pub trait Experiment {
    const NAME: &'static str;
    type Config: Serialize + DeserializeOwned + Default + Clone + Sync;
    type Job: Send + Sync;
    type Row: Serialize + DeserializeOwned + Send;

    fn validate(config: &Self::Config) -> Result<()>;

    /// Jobs in output order. Each job's seed must be unique within a run.
    fn jobs(config: &Self::Config, seed: u64) -> Vec<Self::Job>;

    fn job_seed(job: &Self::Job) -> u64;

    fn run_job(config: &Self::Config, job: &Self::Job, config_hash: &str) -> Result<Vec<Self::Row>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig3,
    Fig4,
    Oracle,
    Trm,
    Erasure,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig3 => Fig3::NAME,
            ExperimentKind::Fig4 => Fig4::NAME,
            ExperimentKind::Oracle => Oracle::NAME,
            ExperimentKind::Trm => TrmRefocus::NAME,
            ExperimentKind::Erasure => ErasureSweep::NAME,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Fig3, Self::Fig4, Self::Oracle, Self::Trm, Self::Erasure]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

/// SHA-256 of the config's JSON serialisation, hex encoded.
pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// Runs every job in parallel and returns the rows in job order.
pub fn run<E: Experiment>(config: &E::Config, seed: u64) -> Result<Vec<E::Row>> {
    E::validate(config)?;
    let hash = config_hash(config)?;
    let jobs = E::jobs(config, seed);
    let per_job = jobs
        .par_iter()
        .map(|job| E::run_job(config, job, &hash))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

/// Algorithm settings shared by the selection experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSettings {
    pub snr_db: f64,
    /// Antennas to select. The paper leaves this open; 16 is our default.
    pub n_ts: usize,
    pub torus_rows: usize,
    pub torus_cols: usize,
    pub n_instances: usize,
}

impl Default for SelectionSettings {
    fn default() -> Self {
        Self {
            snr_db: -5.0,
            n_ts: 16,
            torus_rows: 4,
            torus_cols: 16,
            n_instances: 5,
        }
    }
}

impl SelectionSettings {
    pub fn rho(&self) -> f64 {
        db_to_linear(self.snr_db)
    }

    fn topology(&self, n_t: usize) -> Result<Arc<Topology>> {
        if self.torus_rows * self.torus_cols != n_t {
            return Err(HarnessError::Config(format!(
                "{}×{} torus does not match {n_t} antennas",
                self.torus_rows, self.torus_cols
            )));
        }
        Ok(Arc::new(Topology::torus(self.torus_rows, self.torus_cols)?))
    }

    fn validate(&self, n_t: usize) -> Result<()> {
        self.topology(n_t)?;
        if self.n_ts == 0 || self.n_ts > n_t || self.n_instances == 0 {
            return Err(HarnessError::Config(format!(
                "n_ts = {} and n_instances = {} must be in 1..={n_t} and positive",
                self.n_ts, self.n_instances
            )));
        }
        Ok(())
    }
}

const TAG_SCENE: u64 = 0x5C;
const TAG_RPN: u64 = 0x9A;
const TAG_RANDOM: u64 = 0xDA;

/// Seed of realization `realization` at user count `users`. Fig. 3 and Fig. 4
/// share it so Fig. 4's clean-CSI cell reproduces Fig. 3's scene.
pub(crate) fn scene_job_seed(master: u64, users: usize, realization: usize) -> u64 {
    seed::derive(master, &[users as u64, realization as u64])
}

/// True channel of the scene a Fig. 3 or Fig. 4 job with seed `job_seed`
/// draws for `users` users.
pub fn scene_channel_for(scene: &SceneConfig, users: usize, job_seed: u64) -> Result<ChannelTensor> {
    let cfg = SceneConfig {
        num_users: users,
        ..scene.clone()
    };
    let s = generate_scene(&cfg, seed::derive(job_seed, &[TAG_SCENE]))?;
    Ok(synthesize_channel(&s)?)
}
