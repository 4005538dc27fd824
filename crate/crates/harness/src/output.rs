//! `results.csv` and `meta.json`: writing, and regenerating rows from them.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use csv::StringRecord;
use serde::{Deserialize, Serialize};

use crate::experiments::{self, config_hash, Experiment, ExperimentKind};
use crate::{HarnessError, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub revsim_core: String,
    pub revsim_harness: String,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            revsim_core: revsim_core::VERSION.into(),
            revsim_harness: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub experiment: String,
    pub config: serde_json::Value,
    /// Hex SHA-256 of the config's compact JSON.
    pub config_hash: String,
    pub seed: u64,
    pub versions: Versions,
    pub columns: Vec<String>,
    pub rows: usize,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_owned(),
        source,
    }
}

fn create_new(path: &Path) -> Result<File> {
    OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map_err(|e| match e.kind() {
            ErrorKind::AlreadyExists => HarnessError::Exists(path.to_owned()),
            _ => HarnessError::Io {
                path: path.to_owned(),
                source: e,
            },
        })
}

/// Serialises rows to CSV bytes, header included.
pub fn rows_to_csv<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| HarnessError::Io {
        path: PathBuf::from("<memory>"),
        source: e.into_error(),
    })
}

fn parse_csv(bytes: &[u8]) -> Result<(StringRecord, Vec<StringRecord>)> {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers()?.clone();
    let records = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((header, records))
}

/// Runs `E` and writes both output files into `out`, creating it if needed.
/// Fails before any work if either file is already there.
pub fn run_to_dir<E: Experiment>(config: &E::Config, seed: u64, out: &Path) -> Result<Meta> {
    let results = out.join(RESULTS_FILE);
    let meta_path = out.join(META_FILE);
    for p in [&results, &meta_path] {
        if p.exists() {
            return Err(HarnessError::Exists(p.clone()));
        }
    }
    let rows = experiments::run::<E>(config, seed)?;
    let bytes = rows_to_csv(&rows)?;
    let columns = if rows.is_empty() {
        Vec::new()
    } else {
        parse_csv(&bytes)?.0.iter().map(str::to_owned).collect()
    };
    let meta = Meta {
        experiment: E::NAME.into(),
        config: serde_json::to_value(config)?,
        config_hash: config_hash(config)?,
        seed,
        versions: Versions::current(),
        columns,
        rows: rows.len(),
    };

    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut f = create_new(&results)?;
    f.write_all(&bytes).map_err(io_err(&results))?;
    let mut f = create_new(&meta_path)?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n").map_err(io_err(&meta_path))?;
    Ok(meta)
}

pub fn read_meta(out: &Path) -> Result<Meta> {
    let path = out.join(META_FILE);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Regenerates row `row` (0-based, header excluded), or every row when
/// `None`, from the seed stored in it and the config echoed in `meta.json`.
/// Returns the number of rows checked.
pub fn verify(out: &Path, row: Option<usize>) -> Result<usize> {
    let meta = read_meta(out)?;
    let kind = ExperimentKind::from_name(&meta.experiment)
        .ok_or_else(|| HarnessError::Config(format!("unknown experiment {:?}", meta.experiment)))?;
    match kind {
        ExperimentKind::Fig3 => verify_as::<experiments::Fig3>(out, &meta, row),
        ExperimentKind::Fig4 => verify_as::<experiments::Fig4>(out, &meta, row),
        ExperimentKind::Oracle => verify_as::<experiments::Oracle>(out, &meta, row),
        ExperimentKind::Trm => verify_as::<experiments::TrmRefocus>(out, &meta, row),
        ExperimentKind::Erasure => verify_as::<experiments::ErasureSweep>(out, &meta, row),
    }
}

fn verify_as<E: Experiment>(out: &Path, meta: &Meta, row: Option<usize>) -> Result<usize> {
    let config: E::Config = serde_json::from_value(meta.config.clone())?;
    let hash = config_hash(&config)?;
    if hash != meta.config_hash {
        return Err(HarnessError::HashMismatch {
            expected: hash,
            found: meta.config_hash.clone(),
        });
    }
    let path = out.join(RESULTS_FILE);
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let (header, records) = parse_csv(&bytes)?;
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Config(format!("{RESULTS_FILE} has no {name} column")))
    };
    let seed_col = column("seed")?;
    let hash_col = column("config_hash")?;

    let targets: Vec<usize> = match row {
        Some(i) if i < records.len() => vec![i],
        Some(i) => {
            return Err(HarnessError::Config(format!("row {i} out of range, file has {} rows", records.len())));
        }
        None => (0..records.len()).collect(),
    };

    // File rows grouped by seed, in file order.
    let mut by_seed: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        by_seed.entry(&r[seed_col]).or_default().push(i);
    }
    let jobs = E::jobs(&config, meta.seed);
    let mut regenerated: BTreeMap<String, Vec<StringRecord>> = BTreeMap::new();

    for &i in &targets {
        let rec = &records[i];
        if &rec[hash_col] != hash.as_str() {
            return Err(HarnessError::Mismatch {
                row: i,
                detail: format!("config hash {} differs from meta.json", &rec[hash_col]),
            });
        }
        let seed_text = rec[seed_col].to_owned();
        if !regenerated.contains_key(&seed_text) {
            let job = jobs
                .iter()
                .find(|j| E::job_seed(j).to_string() == seed_text)
                .ok_or_else(|| HarnessError::Mismatch {
                    row: i,
                    detail: format!("no job has seed {seed_text}"),
                })?;
            let rows = E::run_job(&config, job, &hash)?;
            regenerated.insert(seed_text.clone(), parse_csv(&rows_to_csv(&rows)?)?.1);
        }
        let fresh = &regenerated[&seed_text];
        let position = by_seed[seed_text.as_str()].iter().position(|&j| j == i).expect("row indexed by its seed");
        match fresh.get(position) {
            Some(f) if f == rec => {}
            Some(f) => {
                return Err(HarnessError::Mismatch {
                    row: i,
                    detail: format!("stored {:?}, regenerated {:?}", rec.iter().collect::<Vec<_>>(), f.iter().collect::<Vec<_>>()),
                })
            }
            None => {
                return Err(HarnessError::Mismatch {
                    row: i,
                    detail: format!("job {seed_text} regenerates only {} rows", fresh.len()),
                })
            }
        }
    }
    Ok(targets.len())
}
