//! Experiment runner: configuration, dispatch and JSON records.

pub mod config;
pub mod error;
pub mod record;
pub mod run;
pub mod stats;
pub mod tables;

pub use config::{parse_list, ExperimentConfig, ExperimentKind, HamSource, TableScale};
pub use error::CliError;
pub use record::{ExperimentRecord, Status, TOOL_VERSION};
pub use run::{load_hamiltonian, run};
pub use stats::{stats_report, StatsReport};
pub use tables::{
    reproduce_tables, run_row, table_rows, RowSpec, TableOptions, TableReport, TableRow,
};
