use std::io::Read;

use serde::de::DeserializeOwned;
use spinsense::sensing::noon_state;
use spinsense::{SpinJ, SpinState};

use crate::error::CliError;

/// Contents of `path`, or of standard input for `-`.
pub fn read_source(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &str) -> Result<T, CliError> {
    let text = read_source(path)?;
    serde_json::from_str(&text).map_err(|e| {
        let name = if path == "-" { "stdin" } else { path };
        CliError::Input(format!("{name}: {e}"))
    })
}

/// `noon` or `coherent` (both need `twice_j`), otherwise a state file.
pub fn load_state(source: &str, twice_j: Option<u32>) -> Result<SpinState, CliError> {
    let named = |name: &str| {
        twice_j
            .map(SpinJ::from_twice)
            .ok_or_else(|| CliError::Input(format!("--state {name} needs --twice-j")))
    };
    match source {
        "noon" => Ok(noon_state(named("noon")?)?),
        "coherent" => {
            let j = named("coherent")?;
            Ok(SpinState::basis(j, j.twice_j() as i32)?)
        }
        path => read_json(path),
    }
}
