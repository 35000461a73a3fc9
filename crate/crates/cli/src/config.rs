use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

/// Fully resolved options of one run, logged to standard error.
#[derive(Debug, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    /// Subcommand-specific parameters.
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
}

#[derive(Debug, Serialize)]
pub struct SolverConfig {
    pub method: String,
    pub max_iters: Option<usize>,
    pub tol: f64,
    pub lambdas: Vec<f64>,
    pub warm_start: bool,
}

impl RunConfig {
    pub fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            ..Self::default()
        }
    }

    pub fn log(&self) {
        eprintln!(
            "run-config {}",
            serde_json::to_string(self).expect("run configs always serialize")
        );
    }
}
