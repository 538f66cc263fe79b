//! Experiment configuration, comparison schemes, sweeps and their on-disk
//! artifacts.

pub mod baselines;
pub mod config;
pub mod experiments;
pub mod inspect;
pub mod output;

pub use baselines::{generate_channel, scheme_rca, SchemeOutcome, SCHEME_ACTIVE, SCHEME_FIXED, SCHEME_FLEXIBLE, SCHEME_RCA};
pub use config::{dbm_to_watts, ArrayBeamformer, FlexiblePositionConfig, SweepConfig, SystemConfig};
pub use experiments::{run_experiment, seed_list, summarize, ConvergenceRow, ExperimentResult, PatternRow, RateRow, Sweep, SweepOutput};
pub use output::{render_csv, render_mean_csv, rerun, run_to_dir, write_csv, Manifest, MANIFEST_FILE};
pub use inspect::{certify, impedance_report, Certificate, GeometryFile, ImpedanceReport, RotationSpec};
