//! Experiment harness for `temsnn`: teacher-student grids and sweeps over
//! one- and two-layer spiking networks, CSV result tables and SVG figures.

pub mod config;
pub mod error;
pub mod plot;
pub mod results;
pub mod runner;
pub mod seeds;

pub use config::ExperimentConfig;
pub use error::{ExperimentError, Result};
pub use results::{ResultRecord, ResultTable, Status};
pub use runner::{
    run_single_layer_grid, run_single_layer_noise_grid, run_two_layer_sweep, RunOptions,
};
