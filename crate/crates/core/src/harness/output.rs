use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::experiment::{AuditLine, ErrorRow, RateRow, RunRecord};
use crate::noise::{replica_seed, NoisePath};

const ERROR_HEADER: [&str; 5] = ["nu", "alpha", "seed", "t", "l2_error"];
const RATE_HEADER: [&str; 6] = ["experiment", "alpha", "slope", "intercept", "r2", "n_points"];
const AUDIT_HEADER: [&str; 11] = [
    "nu",
    "seed",
    "t",
    "lhs",
    "v1_term",
    "v2_boundary",
    "v2_integral",
    "v3_term",
    "ito",
    "v3_residual",
    "defect",
];
const STATS_HEADER: [&str; 5] = ["quantity", "nu", "mean", "stderr", "count"];

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let io = |e: std::io::Error| Error::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::io(path, e.into());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

pub fn write_rates_csv(path: &Path, rates: &[RateRow]) -> Result<()> {
    write_csv(path, &RATE_HEADER, rates)
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    kind: &'a str,
    config: &'a str,
    wall_time_s: f64,
    q_trace: f64,
    q_weighted_trace: f64,
    seeds: &'a [u64],
    stats: &'a [crate::harness::NuStat],
    rates: &'a [RateRow],
    oracle: &'a [crate::harness::OracleCheck],
    notes: &'a [String],
}

/// Structured summary of a run. Tables live in the CSV files.
pub fn summary_json(record: &RunRecord) -> String {
    let s = Summary {
        version: &record.version,
        kind: record.kind.name(),
        config: &record.config,
        wall_time_s: record.wall_time_s,
        q_trace: record.q_trace,
        q_weighted_trace: record.q_weighted_trace,
        seeds: &record.seeds,
        stats: &record.stats,
        rates: &record.rates,
        oracle: &record.oracle,
        notes: &record.notes,
    };
    serde_json::to_string_pretty(&s).expect("summary serializes")
}

/// Writes `errors.csv`, `rates.csv`, `stats.csv`, `audit.csv` and
/// `summary.json` into `dir`, creating it if needed. Returns the paths written.
pub fn write_outputs(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let errors = dir.join("errors.csv");
    let rates = dir.join("rates.csv");
    let stats = dir.join("stats.csv");
    let audit = dir.join("audit.csv");
    let summary = dir.join("summary.json");
    write_csv(&errors, &ERROR_HEADER, &record.errors)?;
    write_rates_csv(&rates, &record.rates)?;
    write_csv(&stats, &STATS_HEADER, &record.stats)?;
    write_csv::<AuditLine>(&audit, &AUDIT_HEADER, &record.audit)?;
    let mut text = summary_json(record);
    text.push('\n');
    fs::write(&summary, text).map_err(|e| Error::io(&summary, e))?;
    Ok(vec![errors, rates, stats, audit, summary])
}

pub fn read_errors_csv(path: &Path) -> Result<Vec<ErrorRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(|e| Error::io(path, e.into()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ERROR_HEADER {
        return Err(Error::config(format!(
            "{}: expected columns {}",
            path.display(),
            ERROR_HEADER.join(",")
        )));
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::config(format!("{} line {}: {e}", path.display(), i + 2))))
        .collect()
}

/// Writes each replica's master noise path as `noise_<replica>.bin`.
pub fn write_noise_dumps(config: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let q = config.covariance()?;
    let mut paths = Vec::new();
    for r in 0..config.replicas {
        let seed = replica_seed(config.seed, r as u64);
        let path = NoisePath::sample(&q, config.horizon, config.steps, seed)?;
        let file_path = dir.join(format!("noise_{r}.bin"));
        let file = File::create(&file_path).map_err(|e| Error::io(&file_path, e))?;
        let mut w = BufWriter::new(file);
        path.write_dump(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&file_path, e))?;
        paths.push(file_path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{parse_config, run_experiment};

    #[test]
    fn empty_record_gives_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        let record = RunRecord::empty(&ExperimentConfig::default());
        write_outputs(&record, dir.path()).unwrap();
        let errors = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
        assert_eq!(errors, "nu,alpha,seed,t,l2_error\n");
        let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
        assert_eq!(rates, "experiment,alpha,slope,intercept,r2,n_points\n");
    }

    #[test]
    fn errors_round_trip_at_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config("[basis]\nmodes = 3\n[model]\nnu = [0.1, 0.01, 0.001]\n[time]\nsteps = 64\nsamples = 4\n")
            .unwrap();
        let record = run_experiment(&c).unwrap();
        write_outputs(&record, dir.path()).unwrap();
        let back = read_errors_csv(&dir.path().join("errors.csv")).unwrap();
        assert_eq!(back, record.errors);
    }

    #[test]
    fn io_error_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_outputs(&RunRecord::empty(&ExperimentConfig::default()), &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
