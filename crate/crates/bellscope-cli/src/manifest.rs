//! Run manifests: enough to rerun a command and get the same bytes back.
//!
//! Everything that varies between identical runs sits under `timing`, so two manifests of
//! the same invocation differ only there.

use crate::error::CliError;
use crate::settings::Settings;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

#[derive(Debug, Serialize)]
pub struct Versions {
    pub bellscope: &'static str,
    pub bellscope_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub started_unix_s: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector after the program name.
    pub argv: Vec<String>,
    pub parameters: serde_json::Value,
    pub tolerances: Settings,
    pub versions: Versions,
    pub outputs: Vec<OutputRecord>,
    pub exit_code: u8,
    pub timing: Timing,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

pub fn versions() -> Versions {
    Versions {
        bellscope: bellscope::VERSION,
        bellscope_cli: env!("CARGO_PKG_VERSION"),
    }
}

pub fn timing(started: SystemTime, elapsed: Duration) -> Timing {
    Timing {
        started_unix_s: started.duration_since(UNIX_EPOCH).unwrap_or_default().as_secs_f64(),
        wall_time_s: elapsed.as_secs_f64(),
    }
}
