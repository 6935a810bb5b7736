//! Experiment orchestration: TOML configuration, seeded sweeps that score
//! every method against the exhaustive-search upper bound on the same
//! scenarios, and CSV output.
//!
//! Seeding: every random draw uses `derive_seed(master, stream, index)`.
//! The sensor layout depends on `M_bar` only; the synthetic transmitter on
//! the path count only; trial scenarios and sensing noise on the path count
//! and trial index only. Methods and sweep points are therefore compared on
//! identical channels.

mod config;
mod experiment;

pub use config::{resolve_output, CsConfig, DlConfig, ExperimentConfig, Method, SourceConfig, OUT_DIR_ENV};
pub use experiment::{
    active_set_for, collect_point_dataset, collect_point_raw, evaluate_point, prepare_point, run_experiment,
    sweep_points, to_csv, train_config_for, train_predictor, write_csv, PreparedPoint, ResultRow, RowStatus,
    SweepPoint, CSV_HEADER,
};
