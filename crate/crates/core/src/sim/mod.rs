//! Monte Carlo size and power experiments.

pub mod dgp;
pub mod experiment;
pub mod report;

pub use dgp::{delta_a, generate_sample, DgpSpec, ErrorDist, COLUMNS, TESTED_COEF};
pub use experiment::{density_accuracy, replication_seed, run_experiment, run_replication, DensityAccuracy, RepOutcome, SimConfig};
pub use report::{emit_report, read_report, SimReport, SimRow};
