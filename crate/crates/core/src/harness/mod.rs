//! Experiment drivers for the large-intensity claims, their configuration,
//! and reproducible result persistence (result table plus run manifest).
//!
//! Every driver is a pure function of its configuration: random draws are
//! keyed by the master seed and per-replicate streams, parallel work is
//! collected in index order, and rows are emitted in grid order, so re-runs
//! produce byte-identical tables.

mod config;
mod experiments;
mod output;

pub use config::{ExperimentConfig, ExperimentId};
pub use experiments::{
    experiment_e1_poisson_clt, experiment_e2_degeneracy, experiment_e3_rho_limits, experiment_e4_moment_limits,
    moments_summary, rho_convergence, rho_queries, run_experiment, simulate,
};
pub use output::{sha256_hex, write_outputs, Cell, ExperimentOutput, Format, ResultTable, RunManifest, SeedRecord};
