//! Run configuration: flags override config-file values, which override
//! defaults. The effective configuration is echoed into every manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

/// Optional settings loadable from a TOML config file. Every field has a
/// matching command-line flag that wins when both are given.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub j_min: Option<f64>,
    pub j_max: Option<f64>,
    pub init: Option<String>,
    pub prune_each_iter: Option<bool>,
    pub keep: Option<String>,
    pub target: Option<usize>,
    pub budget: Option<usize>,
    pub endpoint: Option<String>,
    pub credential_env: Option<String>,
    pub workers: Option<usize>,
    pub log_level: Option<String>,
}

pub fn load_file_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", p.display()))?;
            Ok(toml::from_str(&text)
                .map_err(|e| anyhow::anyhow!("invalid config {}: {e}", p.display()))?)
        }
    }
}

/// `flag.or(file).unwrap_or(default)` spelled once.
pub fn resolve<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn resolve_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
