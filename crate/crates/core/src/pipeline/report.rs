use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::registration::MatchResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchSummary {
    pub region_p: usize,
    pub region_q: usize,
    pub chamfer: f64,
    pub icp_iterations: usize,
    pub icp_rms: f64,
    pub candidate: usize,
    pub facing: bool,
    /// Row-major.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&MatchResult> for MatchSummary {
    fn from(m: &MatchResult) -> Self {
        let v = m.transform.to_row_major();
        MatchSummary {
            region_p: m.region_p,
            region_q: m.region_q,
            chamfer: m.chamfer,
            icp_iterations: m.icp_iterations_used,
            icp_rms: m.icp_rms,
            candidate: m.candidate,
            facing: m.facing,
            rotation: v[..9].try_into().unwrap(),
            translation: v[9..].try_into().unwrap(),
        }
    }
}

/// Per-fragment stage counts. Curve and region counts match the debug
/// exports point for point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragmentCounts {
    pub input_points: usize,
    pub points: usize,
    pub epsilon: f64,
    pub graph_radius: f64,
    pub edges: usize,
    pub raw_curve_points: usize,
    pub curve_points: usize,
    pub curves: usize,
    pub regions: usize,
    pub retained_regions: Vec<usize>,
    pub retained_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub best: MatchSummary,
    /// Best result per region pair, ascending by Chamfer distance.
    pub matches: Vec<MatchSummary>,
    pub pairs_evaluated: usize,
    pub fragment_a: FragmentCounts,
    pub fragment_b: FragmentCounts,
    /// Milliseconds per stage.
    pub timings_ms: BTreeMap<String, f64>,
    pub runtime_ms: f64,
    pub config: PipelineConfig,
    pub warnings: Vec<String>,
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

impl PipelineReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

/// Ground-truth comparison of one assembly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub rot_err_deg: f64,
    pub trans_err: f64,
    /// Divisor applied to `trans_err`, if any.
    pub trans_normalizer: Option<f64>,
    pub chamfer_best: f64,
    pub regions_p: usize,
    pub regions_q: usize,
    pub runtime_ms: f64,
    pub parameters: PipelineConfig,
}

impl MetricsReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}
