//! Experiment manifests.
//!
//! A manifest is a TOML table whose keys mirror the long flag names with
//! dashes replaced by underscores:
//!
//! ```toml
//! corpus = "data/toy/corpus.jsonl"
//! conll = "data/toy/trees.conll"
//! sem_filter = "top-5"
//! lambda = 1e-6
//! epochs = 20
//! beam = 100
//! seed = 7
//! ```
//!
//! Flags given on the command line override manifest values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub conll: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub pos_filter: Option<String>,
    pub mwe_filter: Option<bool>,
    pub sem_filter: Option<String>,
    pub max_per_source: Option<usize>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
    pub epochs: Option<usize>,
    pub beam: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub hierarchy: Option<bool>,
    pub frame_credit: Option<bool>,
    pub port: Option<u16>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("lamda = 1.0").is_err());
        let c: FileConfig = toml::from_str("lambda = 0.5\nsem_filter = \"top-3\"").unwrap();
        assert_eq!(c.lambda, Some(0.5));
        assert_eq!(c.sem_filter.as_deref(), Some("top-3"));
    }
}
