//! Closed-loop simulated exploration missions, their configuration and outputs.

mod config;
mod output;
mod run;

use thiserror::Error;

pub use config::{MapConfig, MissionConfig, OutputConfig, ScenarioConfig};
pub use output::{metrics_csv, metrics_table, read_log, timings_csv, write_outputs};
pub use run::{
    replay, run_mission, run_mission_with_map, same_counters, MissionLog, MissionMetrics,
    PhaseRecord, STATUS_COMPLETE_OR_BLOCKED, STATUS_LOW_GROWTH, STATUS_MAX_DISCOVERIES,
};

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Map(#[from] crate::map::MapError),
    #[error(transparent)]
    Exploration(#[from] crate::exploration::ExplorationError),
    #[error("malformed mission log: {0}")]
    Log(String),
    #[error("replay mismatch: {0}")]
    Replay(String),
}
