//! Experiment harness: configuration, noise generation, closed-loop runs
//! and CSV output.

pub mod config;
pub mod generator;
pub mod output;
pub mod runner;

pub use config::{BankSpec, NoiseSection, OutputSection, PlantSection, SimConfig, SimSection};
pub use generator::{damped_sinusoid_bank, noise_source, read_waveform};
pub use runner::{
    bode_table, emit_bode, run_comparison, run_mu_sweep, run_single, BodeRow, Comparison,
    Experiment, RunOutcome, RunReport, RunTrace, StableInterval, SweepReport, SweepRow,
};
