//! Config files, experiment orchestration and result files.

mod config;
mod experiment;
mod oracle;
mod output;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, FieldSpec, NoiseSpec, TemporalSpec};
pub use experiment::{rates_from_errors, run_experiment, AuditLine, ErrorRow, NuStat, RateRow, RunRecord, VERSION};
pub use oracle::{damped_mode, run_oracle_suite, OracleCheck};
pub use output::{read_errors_csv, summary_json, write_noise_dumps, write_outputs, write_rates_csv};
