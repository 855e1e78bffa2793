use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use super::config::PipelineConfig;
use super::preprocess::preprocess;
use super::report::{FragmentCounts, MatchSummary, MetricsReport, PipelineReport};
use crate::curves::{
    corner_penalty, corner_penalty_knn, refine_curves, threshold_curve_points, BreakingCurveSet, PenaltyNeighborhood,
};
use crate::error::{Result, StageExt};
use crate::evaluation::{rotation_rmse, translation_rmse};
use crate::geometry::{PointCloud, RigidTransform};
use crate::graph::{build_graph_with, NeighborhoodGraph};
use crate::io::{read_point_cloud, write_labeled_cloud, write_point_cloud, write_transform, LabeledCloudExport, WriteOptions};
use crate::parallel;
use crate::registration::{align_fragments, match_regions_with, write_matches_csv, MatchOptions, Matching, Region};
use crate::segmentation::{assign_curve_points, filter_small_regions, grow_regions, RegionSegmentation};
use crate::spatial::KdTree;

/// Everything computed for one fragment up to region filtering.
#[derive(Debug, Clone)]
pub struct FragmentSegmentation {
    pub input_points: usize,
    /// The preprocessed cloud; all indices below refer to it.
    pub cloud: PointCloud,
    pub graph: NeighborhoodGraph,
    pub penalty: Vec<f64>,
    pub raw_curve_points: usize,
    pub curves: BreakingCurveSet,
    /// Regions before curve points are voted in.
    pub grown: RegionSegmentation,
    pub segmentation: RegionSegmentation,
    /// Region ids above the size threshold, largest first.
    pub retained: Vec<usize>,
    pub timings_ms: Vec<(&'static str, f64)>,
}

fn timed<T>(timings: &mut Vec<(&'static str, f64)>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().stage(stage)?;
    timings.push((stage, start.elapsed().as_secs_f64() * 1e3));
    Ok(out)
}

/// Preprocessing through region filtering for a single fragment.
pub fn segment_fragment(cloud: &PointCloud, config: &PipelineConfig) -> Result<FragmentSegmentation> {
    config.validate()?;
    let mut t = Vec::new();
    let pre = timed(&mut t, "preprocess", || preprocess(cloud, config.voxel_size))?;
    let index = KdTree::new(&pre.points);
    let graph = timed(&mut t, "graph", || build_graph_with(&index, config.k, config.epsilon_scale))?;
    let penalty = timed(&mut t, "corner_penalty", || match config.penalty_neighborhood {
        PenaltyNeighborhood::Graph => Ok(corner_penalty(&pre, &graph)),
        PenaltyNeighborhood::Knn(k) => corner_penalty_knn(&pre, &index, k),
    })?;
    let raw = threshold_curve_points(&penalty, config.tau);
    let raw_curve_points = raw.iter().filter(|&&m| m).count();
    let curves = timed(&mut t, "refine_curves", || refine_curves(&raw, &graph, &config.refine_params()))?;
    let grown = timed(&mut t, "grow_regions", || grow_regions(&graph, &curves))?;
    let segmentation = timed(&mut t, "assign_curve_points", || {
        assign_curve_points(&grown, &pre, &index, config.k_vote)
    })?;
    let retained = timed(&mut t, "filter_regions", || {
        filter_small_regions(&segmentation, config.min_region_fraction)
    })?;
    Ok(FragmentSegmentation {
        input_points: cloud.len(),
        cloud: pre,
        graph,
        penalty: penalty.values,
        raw_curve_points,
        curves,
        grown,
        segmentation,
        retained,
        timings_ms: t,
    })
}

impl FragmentSegmentation {
    pub fn counts(&self) -> FragmentCounts {
        FragmentCounts {
            input_points: self.input_points,
            points: self.cloud.len(),
            epsilon: self.graph.base_epsilon,
            graph_radius: self.graph.epsilon,
            edges: self.graph.edge_count(),
            raw_curve_points: self.raw_curve_points,
            curve_points: self.curves.count(),
            curves: self.curves.curves.len(),
            regions: self.segmentation.region_count(),
            retained_regions: self.retained.clone(),
            retained_sizes: self.retained.iter().map(|&r| self.segmentation.regions[r].len()).collect(),
        }
    }

    pub fn regions(&self) -> Vec<Region> {
        Region::collect(&self.cloud, &self.segmentation, &self.retained)
    }

    /// Writes `{prefix}curves.ply` (curve points red, grown regions colored)
    /// and `{prefix}regions.ply` (final regions).
    pub fn write_debug(&self, dir: &Path, prefix: &str) -> Result<()> {
        let options = WriteOptions::binary_f64();
        let curves = LabeledCloudExport {
            cloud: &self.cloud,
            labels: self.grown.labels().to_vec(),
        };
        write_labeled_cloud(&curves, &dir.join(format!("{prefix}curves.ply")), options)?;
        let regions = LabeledCloudExport {
            cloud: &self.cloud,
            labels: self.segmentation.labels().to_vec(),
        };
        write_labeled_cloud(&regions, &dir.join(format!("{prefix}regions.ply")), options)?;
        self.graph.write_edge_list(&dir.join(format!("{prefix}edges.txt")))
    }
}

#[derive(Debug, Clone)]
pub struct Assembly {
    /// Maps fragment B into fragment A's frame.
    pub transform: RigidTransform,
    pub report: PipelineReport,
    pub fragment_a: FragmentSegmentation,
    pub fragment_b: FragmentSegmentation,
    pub matching: Matching,
    pub aligned_b: PointCloud,
}

/// Segments both fragments concurrently, then matches every retained region
/// pair. Fragment A is the reference.
pub fn assemble(a: &PointCloud, b: &PointCloud, config: &PipelineConfig) -> Result<Assembly> {
    let start = Instant::now();
    config.validate()?;
    let (fa, fb) = parallel::join(|| segment_fragment(a, config), || segment_fragment(b, config));
    let (fa, fb) = (fa?, fb?);

    let reg_start = Instant::now();
    let options = MatchOptions {
        icp: config.icp_params(fa.graph.base_epsilon),
        icp_points: config.icp_points,
        require_facing: config.require_facing,
        refine_pairs: config.refine_pairs,
    };
    let matching = match_regions_with(&fa.regions(), &fb.regions(), &options).stage("match_regions")?;
    let match_ms = reg_start.elapsed().as_secs_f64() * 1e3;
    let aligned_b = align_fragments(b, &matching.best);

    let mut timings_ms = BTreeMap::new();
    for (prefix, f) in [("a", &fa), ("b", &fb)] {
        for &(stage, ms) in &f.timings_ms {
            timings_ms.insert(format!("{prefix}.{stage}"), ms);
        }
    }
    timings_ms.insert("match_regions".to_string(), match_ms);

    let mut warnings = Vec::new();
    for (name, f) in [("A", &fa), ("B", &fb)] {
        if f.curves.count() == 0 {
            warnings.push(format!("fragment {name}: no breaking curves survived refinement"));
        }
        if f.retained.len() == 1 {
            warnings.push(format!("fragment {name}: only one region retained"));
        }
    }
    if let [first, second, ..] = matching.all.as_slice() {
        if second.chamfer <= first.chamfer * 1.05 {
            warnings.push(format!(
                "ambiguous match: pairs ({}, {}) and ({}, {}) score within 5%",
                first.region_p, first.region_q, second.region_p, second.region_q
            ));
        }
    }

    let report = PipelineReport {
        best: MatchSummary::from(&matching.best),
        matches: matching.all.iter().map(MatchSummary::from).collect(),
        pairs_evaluated: matching.pairs_evaluated,
        fragment_a: fa.counts(),
        fragment_b: fb.counts(),
        timings_ms,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
        config: config.clone(),
        warnings,
    };
    Ok(Assembly {
        transform: matching.best.transform,
        report,
        fragment_a: fa,
        fragment_b: fb,
        matching,
        aligned_b,
    })
}

/// Reads both fragments and assembles them.
pub fn run_pipeline(path_a: &Path, path_b: &Path, config: &PipelineConfig) -> Result<Assembly> {
    let a = read_point_cloud(path_a).stage("read")?;
    let b = read_point_cloud(path_b).stage("read")?;
    assemble(&a, &b, config)
}

impl Assembly {
    /// Writes `transform.json`, `aligned_b.ply`, `report.json` and
    /// `matches.csv` into `dir`, plus per-fragment debug exports on request.
    pub fn write_outputs(&self, dir: &Path, debug: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
        write_transform(&self.transform, &dir.join("transform.json"))?;
        write_point_cloud(&self.aligned_b, &dir.join("aligned_b.ply"), WriteOptions::binary_f64())?;
        self.report.write(&dir.join("report.json"))?;
        write_matches_csv(&self.matching.all, &dir.join("matches.csv"))?;
        if debug {
            self.fragment_a.write_debug(dir, "a_")?;
            self.fragment_b.write_debug(dir, "b_")?;
        }
        Ok(())
    }

    pub fn metrics(&self, gt: &RigidTransform, normalizer: Option<f64>) -> MetricsReport {
        MetricsReport {
            rot_err_deg: rotation_rmse(&self.transform, gt),
            trans_err: translation_rmse(&self.transform, gt, normalizer),
            trans_normalizer: normalizer,
            chamfer_best: self.matching.best.chamfer,
            regions_p: self.fragment_a.retained.len(),
            regions_q: self.fragment_b.retained.len(),
            runtime_ms: self.report.runtime_ms,
            parameters: self.report.config.clone(),
        }
    }
}
