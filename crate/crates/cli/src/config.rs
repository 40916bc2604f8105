//! Experiment and training configuration files (TOML key-value documents
//! whose keys mirror the config structs).

use std::path::Path;

use cmvrp_core::instances::ExperimentConfig;
use cmvrp_core::training::TrainConfig;
use serde::de::DeserializeOwned;

use crate::error::{read, CliError, Result};

fn parse_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read(path)?).map_err(|e| CliError::format(path, e.message()))
}

/// `arg` is either a path to a TOML file or a preset name (VRP10, VRP20,
/// VRP50, VRP80). Files win over presets of the same name.
pub fn load_experiment(arg: &str) -> Result<ExperimentConfig> {
    let path = Path::new(arg);
    let config = if path.is_file() {
        parse_toml(path)?
    } else if let Some(preset) = ExperimentConfig::by_name(arg) {
        preset
    } else {
        return Err(CliError::Usage(format!(
            "`{arg}` is neither a config file nor a preset (VRP10, VRP20, VRP50, VRP80)"
        )));
    };
    config.validate()?;
    Ok(config)
}

/// Training config from a TOML file; missing keys take their defaults.
pub fn load_train_config(path: Option<&Path>) -> Result<TrainConfig> {
    match path {
        Some(p) => parse_toml(p),
        None => Ok(TrainConfig::default()),
    }
}

pub fn experiment_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("plain data serializes")
}
