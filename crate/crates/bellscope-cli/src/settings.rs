//! Global defaults: built-in values, overridden by a config file, overridden by flags.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const DEFAULT_TOL: f64 = bellscope::corrgeom::ZERO_TOL;
pub const DEFAULT_SEED: u64 = 0;

/// Keys accepted in a config file. TOML unless the file ends in `.json`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    tol: Option<f64>,
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub tol: f64,
    pub seed: u64,
}

impl Settings {
    pub fn resolve(config: Option<&Path>, tol: Option<f64>, seed: Option<u64>) -> Result<Self, CliError> {
        let file = match config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };
        let settings = Settings {
            tol: tol.or(file.tol).unwrap_or(DEFAULT_TOL),
            seed: seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        };
        if !(settings.tol > 0.0 && settings.tol.is_finite()) {
            return Err(CliError::Usage(format!(
                "tolerance must be positive and finite, got {}",
                settings.tol
            )));
        }
        Ok(settings)
    }
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
