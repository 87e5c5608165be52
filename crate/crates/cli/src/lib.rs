//! Batch front end for `tmcert-core`: JSON run configurations, concurrent
//! job execution, JSON/text reports and CSV exports.

pub mod config;
pub mod report;
pub mod runner;
pub mod suite;

pub use config::{ConfigError, Job, JobKind, Numerics, RunConfig};
pub use report::{JobReport, JobStatus, Report};
pub use runner::{run_config, run_job};
pub use suite::{paper_table, SuiteName, SuiteReport};
