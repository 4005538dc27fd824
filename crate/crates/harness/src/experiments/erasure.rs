use serde::{Deserialize, Serialize};

use revsim_core::erasure::sweep_erasures;
use revsim_core::lattice::{backscatter_loss_experiment, BackscatterParams};
use revsim_core::seed;

use super::Experiment;
use crate::{HarnessError, Result};

const TAG_COUNT: u64 = 0xE0;
const TAG_BACKSCATTER: u64 = 0xE1;

/// Waiting-time and converter-resolution sweeps on the lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackscatterSweep {
    /// Template; density, waiting steps and bits are overridden per point.
    pub params: BackscatterParams,
    pub scatterer_densities: Vec<f64>,
    pub waiting_steps: Vec<usize>,
    pub adc_bits: Vec<u32>,
    pub realizations: usize,
}

impl Default for BackscatterSweep {
    fn default() -> Self {
        Self {
            params: BackscatterParams::default(),
            scatterer_densities: vec![0.0, 0.05, 0.15],
            waiting_steps: vec![25, 50, 100, 200, 400],
            adc_bits: vec![1, 2, 3, 4, 8],
            realizations: 5,
        }
    }
}

/// Erasure counts over a `(k, m)` grid plus the lattice backscatter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErasureConfig {
    pub k_values: Vec<u64>,
    pub m_values: Vec<u32>,
    pub backscatter: Option<BackscatterSweep>,
}

impl Default for ErasureConfig {
    fn default() -> Self {
        Self {
            k_values: (4..=12).map(|e| 1u64 << e).collect(),
            m_values: (1..=16).collect(),
            backscatter: Some(BackscatterSweep::default()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ErasureJob {
    Count { seed: u64 },
    Backscatter { density_index: usize, realization: usize, seed: u64 },
}

/// One table for both sources. Count rows leave `scatterer_density`,
/// `realization` and `retained_score` empty; backscatter rows leave
/// `variant`, `erased_bits` and `gate_count` empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErasureRow {
    pub config_hash: String,
    pub seed: u64,
    /// `count` or `backscatter`.
    pub source: String,
    pub variant: Option<String>,
    pub k: u64,
    pub m: u32,
    pub scatterer_density: Option<f64>,
    pub realization: Option<usize>,
    pub erased_bits: Option<u64>,
    pub gate_count: Option<u64>,
    pub retained_score: Option<f64>,
}

pub struct ErasureSweep;

impl Experiment for ErasureSweep {
    const NAME: &'static str = "erasure_sweep";
    type Config = ErasureConfig;
    type Job = ErasureJob;
    type Row = ErasureRow;

    fn validate(config: &ErasureConfig) -> Result<()> {
        if config.k_values.is_empty() || config.m_values.is_empty() {
            return Err(HarnessError::Config("k_values and m_values must be non-empty".into()));
        }
        if let Some(b) = &config.backscatter {
            if b.scatterer_densities.is_empty() || b.waiting_steps.is_empty() || b.adc_bits.is_empty() || b.realizations == 0 {
                return Err(HarnessError::Config("backscatter sweep axes must be non-empty".into()));
            }
            if b.adc_bits.contains(&0) || b.scatterer_densities.iter().any(|d| !(0.0..1.0).contains(d)) {
                return Err(HarnessError::Config("adc_bits must be positive and densities in [0, 1)".into()));
            }
        }
        Ok(())
    }

    fn jobs(config: &ErasureConfig, seed: u64) -> Vec<ErasureJob> {
        let mut jobs = vec![ErasureJob::Count {
            seed: seed::derive(seed, &[TAG_COUNT]),
        }];
        if let Some(b) = &config.backscatter {
            for density_index in 0..b.scatterer_densities.len() {
                for realization in 0..b.realizations {
                    jobs.push(ErasureJob::Backscatter {
                        density_index,
                        realization,
                        seed: seed::derive(seed, &[TAG_BACKSCATTER, density_index as u64, realization as u64]),
                    });
                }
            }
        }
        jobs
    }

    fn job_seed(job: &ErasureJob) -> u64 {
        match *job {
            ErasureJob::Count { seed } | ErasureJob::Backscatter { seed, .. } => seed,
        }
    }

    fn run_job(config: &ErasureConfig, job: &ErasureJob, hash: &str) -> Result<Vec<ErasureRow>> {
        match *job {
            ErasureJob::Count { seed } => Ok(sweep_erasures(&config.k_values, &config.m_values)?
                .into_iter()
                .map(|r| ErasureRow {
                    config_hash: hash.to_owned(),
                    seed,
                    source: "count".into(),
                    variant: Some(r.variant.label().into()),
                    k: r.waiting_samples,
                    m: r.adc_bits,
                    scatterer_density: None,
                    realization: None,
                    erased_bits: Some(r.ledger.erased_bits),
                    gate_count: Some(r.ledger.gate_count),
                    retained_score: None,
                })
                .collect()),
            ErasureJob::Backscatter {
                density_index,
                realization,
                seed,
            } => {
                let b = config.backscatter.as_ref().expect("backscatter job without a sweep");
                let density = b.scatterer_densities[density_index];
                let mut rows = Vec::with_capacity(b.waiting_steps.len() * b.adc_bits.len());
                for &k in &b.waiting_steps {
                    for &m in &b.adc_bits {
                        let params = BackscatterParams {
                            scatterer_density: density,
                            waiting_steps: k,
                            adc_bits: m,
                            ..b.params.clone()
                        };
                        rows.push(ErasureRow {
                            config_hash: hash.to_owned(),
                            seed,
                            source: "backscatter".into(),
                            variant: None,
                            k: k as u64,
                            m,
                            scatterer_density: Some(density),
                            realization: Some(realization),
                            erased_bits: None,
                            gate_count: None,
                            retained_score: Some(backscatter_loss_experiment(&params, seed)?),
                        });
                    }
                }
                Ok(rows)
            }
        }
    }
}
