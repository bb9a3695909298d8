//! Configuration-driven experiment runner shared by the command-line
//! tool and the examples.

pub mod config;
pub mod output;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, GridSpec, GridSpacing, Scenario, SweepCoordinate};
pub use output::CsvDocument;
pub use runner::{
    run_crb_sweep, run_mc_variance, run_modal_convergence, run_qfi_report, QfiReport, RunArtifacts,
};
