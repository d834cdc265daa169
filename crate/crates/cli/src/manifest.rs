//! JSON run manifests.
//!
//! A manifest records the full argument vector plus every resolved
//! parameter, so a run can be repeated exactly. No timestamps or host data
//! are written, keeping manifests byte-identical across identical runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mahf::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Arguments after the program name, verbatim.
    pub argv: Vec<String>,
    pub inputs: Vec<InputRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heat: Option<HeatRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub role: &'static str,
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub faces: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct OperatorRecord {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knn_k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<String>,
    pub normals: &'static str,
    /// Power-iteration estimate including the safety factor.
    pub lambda_max: f64,
    pub lambda_max_converged: bool,
    pub clamped_cotangents: usize,
    pub mean_vertex_mass: f64,
}

#[derive(Debug, Serialize)]
pub struct HeatRecord {
    pub chebyshev_order: usize,
    pub support_threshold: f64,
    pub time_scale: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub luma: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<&'static str>,
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub path: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_effective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertex: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_support: Option<f64>,
    pub min: f64,
    pub max: f64,
}

impl OutputRecord {
    pub fn new(path: PathBuf, values: &[f64]) -> Self {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Self { path, k: None, t: None, t_effective: None, vertex: None, mean_support: None, min, max }
    }
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            tool: "mahf",
            version: env!("CARGO_PKG_VERSION"),
            command,
            argv: std::env::args().skip(1).collect(),
            inputs: Vec::new(),
            operator: None,
            heat: None,
            beta: None,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidParameter(format!("manifest serialization: {e}")))?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })
    }
}
