//! Configuration, dispatch and persistence for the `cslab` tool.
//!
//! A run starts from an [`ExperimentConfig`] assembled from defaults, an
//! optional `key = value` file and command-line overrides (in that order),
//! produces one or more [`ResultRecord`]s and writes them with
//! [`emit_report`]: JSON lines for records, CSV for any attached table.

mod config;
mod record;
mod run;

pub use config::{AnsatzKind, Command, ExperimentConfig, MapKind, Model, KEYS, SCHEMA_VERSION};
pub use record::{
    emit_report, read_records, Check, ResultRecord, Table, CODE_VERSION, RESULTS_FILE,
};
pub use run::{
    draw_parameters, h2_audit, run_experiment, DrawOutcome, DRAW_BETA, DRAW_MASS, DRAW_POINT,
    DRAW_ZETA_MAX,
};
