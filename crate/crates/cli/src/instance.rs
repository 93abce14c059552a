use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use skorokhod::{DiscreteMeasure, McConfig};

use crate::error::CliError;

/// An embedding problem: starting law, target law and run options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub lambda: DiscreteMeasure,
    pub mu: DiscreteMeasure,
    #[serde(default)]
    pub options: InstanceOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceOptions {
    pub tolerance: f64,
    pub mc_paths: u64,
    pub seed: u64,
    pub dt_root_rost: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions {
            tolerance: 1e-10,
            mc_paths: 1_000_000,
            seed: 42,
            dt_root_rost: 1e-4,
        }
    }
}

/// Command-line values that take precedence over instance options.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub mc_paths: Option<u64>,
    pub seed: Option<u64>,
}

/// Options after applying overrides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub tol: f64,
    pub mc: McConfig,
}

impl Settings {
    pub fn resolve(options: &InstanceOptions, overrides: &Overrides) -> Result<Settings, CliError> {
        let tol = overrides.tol.unwrap_or(options.tolerance);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Input(format!("tolerance must be positive, got {tol}")));
        }
        if !(options.dt_root_rost > 0.0 && options.dt_root_rost.is_finite()) {
            return Err(CliError::Input(format!(
                "dt_root_rost must be positive, got {}",
                options.dt_root_rost
            )));
        }
        Ok(Settings {
            tol,
            mc: McConfig {
                n_paths: overrides.mc_paths.unwrap_or(options.mc_paths),
                seed: overrides.seed.unwrap_or(options.seed),
                dt: options.dt_root_rost,
                ..McConfig::default()
            },
        })
    }
}

impl InstanceFile {
    pub fn new(lambda: DiscreteMeasure, mu: DiscreteMeasure) -> Self {
        InstanceFile {
            lambda,
            mu,
            options: InstanceOptions::default(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let inst: InstanceFile = read_json(path)?;
        inst.lambda.require_probability()?;
        inst.mu.require_probability()?;
        Ok(inst)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Pretty JSON with a trailing newline. Floats use the shortest
/// representation that parses back to the same value.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(path.to_path_buf())
}
