use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Some comparison row failed.
    RowsFailed,
    /// The wall-clock budget ran out; counts are lower bounds.
    BudgetExceeded,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::RowsFailed => 3,
            Status::BudgetExceeded => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub status: Status,
    /// Wall-clock seconds by phase; not part of the reproducible payload.
    pub timings: BTreeMap<String, f64>,
    pub payload: serde_json::Value,
    pub failures: Vec<serde_json::Value>,
    #[serde(skip)]
    pub summary: String,
}

impl ExperimentRecord {
    /// The part of the record that reruns reproduce exactly.
    pub fn payload_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&serde_json::json!({
            "payload": self.payload,
            "failures": self.failures,
        }))
        .expect("json values serialize")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}
