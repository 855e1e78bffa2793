use std::io::Write;
use std::path::Path;

use super::chamfer::chamfer_distance_indexed;
use super::icp::{icp_with_index, IcpParams};
use super::init::alignments_for;
use crate::error::{Error, Result};
use crate::eigen;
use crate::geometry::{centroid, covariance, Point3, PointCloud, RigidTransform, Vec3};
use crate::parallel;
use crate::segmentation::RegionSegmentation;
use crate::spatial::KdTree;

/// Below this offset (relative to the region's largest spread) the
/// fragment centroid is treated as lying in the region's plane.
const SIDE_TOLERANCE: f64 = 0.05;

/// A retained region: its id in the fragment's segmentation and its points.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: usize,
    pub points: Vec<Point3>,
    /// Normal of the region's best-fit plane, oriented towards the body of
    /// its fragment; `None` when that side cannot be told.
    pub inward: Option<Vec3>,
}

impl Region {
    pub fn new(id: usize, points: Vec<Point3>) -> Self {
        Region { id, points, inward: None }
    }

    /// Region whose inward side is the one facing `body_centroid`.
    pub fn with_body(id: usize, points: Vec<Point3>, body_centroid: &Point3) -> Self {
        let c = centroid(&points);
        let (values, vectors) = eigen::eigen(&covariance(&points));
        let normal: Vec3 = vectors.column(0).into_owned();
        let offset = normal.dot(&(body_centroid - c));
        let inward = (offset.abs() > SIDE_TOLERANCE * values[2].max(0.0).sqrt()).then(|| normal * offset.signum());
        Region { id, points, inward }
    }

    /// Regions `ids` of `seg`, in the given order, sided by the centroid of
    /// the whole cloud.
    pub fn collect(cloud: &PointCloud, seg: &RegionSegmentation, ids: &[usize]) -> Vec<Region> {
        let body = cloud.centroid();
        ids.iter()
            .map(|&id| Region::with_body(id, seg.regions[id].iter().map(|&i| cloud[i]).collect(), &body))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOptions {
    pub icp: IcpParams,
    /// ICP runs on at most this many evenly strided points of each Q region
    /// (0 = all). Chamfer scoring always uses every point.
    pub icp_points: usize,
    /// Rank alignments whose regions face the same way (bodies on the same
    /// side of the contact) behind all others.
    pub require_facing: bool,
    /// When ICP ran on thinned regions, this many of the best-ranked pairs
    /// are refined again with every point before the final ranking.
    pub refine_pairs: usize,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions {
            icp: IcpParams::default(),
            icp_points: 0,
            require_facing: true,
            refine_pairs: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub region_p: usize,
    pub region_q: usize,
    /// Maps the Q region (and the whole Q fragment) into P's frame.
    pub transform: RigidTransform,
    pub chamfer: f64,
    pub icp_iterations_used: usize,
    /// Index of the initial alignment that produced this result.
    pub candidate: usize,
    pub icp_rms: f64,
    /// False when both regions know their inward side and, after alignment,
    /// those sides point the same way.
    pub facing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub best: MatchResult,
    /// One entry per region pair, facing alignments first, then ascending by
    /// Chamfer distance.
    pub all: Vec<MatchResult>,
    pub pairs_evaluated: usize,
}

fn rank(a: &MatchResult, b: &MatchResult) -> std::cmp::Ordering {
    b.facing
        .cmp(&a.facing)
        .then(a.chamfer.total_cmp(&b.chamfer))
        .then(a.region_p.cmp(&b.region_p))
        .then(a.region_q.cmp(&b.region_q))
        .then(a.candidate.cmp(&b.candidate))
}

/// Every `stride`-th point so that at most `limit` remain.
fn thin(points: &[Point3], limit: usize) -> Vec<Point3> {
    if limit == 0 || points.len() <= limit {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(limit);
    points.iter().step_by(stride).copied().collect()
}

/// Points used to pre-score the spun candidates of round regions.
const SCREEN_POINTS: usize = 256;

/// Spun candidates that survive pre-scoring and go on to ICP.
const SCREEN_KEEP: usize = 4;

/// Keeps the four sign candidates and the `SCREEN_KEEP` best extra
/// candidates by one-sided mean squared distance of a small sample, so round
/// regions can be searched finely without running ICP from every spin.
fn screen(cands: Vec<RigidTransform>, target: &KdTree, sample: &[Point3]) -> Vec<(usize, RigidTransform)> {
    let mut indexed: Vec<(usize, RigidTransform)> = cands.into_iter().enumerate().collect();
    if indexed.len() <= 4 + SCREEN_KEEP {
        return indexed;
    }
    let extra = indexed.split_off(4);
    let mut scored: Vec<(f64, usize, RigidTransform)> = extra
        .into_iter()
        .map(|(c, t)| {
            let sum: f64 = sample.iter().map(|x| target.nearest_d2(&t.apply_point(x)).0).sum();
            (sum / sample.len() as f64, c, t)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    indexed.extend(scored.into_iter().take(SCREEN_KEEP).map(|(_, c, t)| (c, t)));
    indexed
}

fn facing(p: &Region, q: &Region, t: &RigidTransform) -> bool {
    match (p.inward, q.inward) {
        (Some(np), Some(nq)) => np.dot(&(t.rotation * nq)) < 0.0,
        _ => true,
    }
}

/// Exhaustive search: registers every Q region onto every P region from each
/// initial alignment and keeps the lowest Chamfer distance.
pub fn match_regions(p: &[Region], q: &[Region], params: &IcpParams) -> Result<Matching> {
    let options = MatchOptions {
        icp: *params,
        ..MatchOptions::default()
    };
    match_regions_with(p, q, &options)
}

/// As [`match_regions`]. With `require_facing`, alignments that put both
/// fragment bodies on the same side of the contact rank after all others,
/// within each pair and overall.
pub fn match_regions_with(p: &[Region], q: &[Region], options: &MatchOptions) -> Result<Matching> {
    let params = &options.icp;
    if p.is_empty() || q.is_empty() {
        return Err(Error::NoCandidateRegions {
            min_fraction: f64::NAN,
            points: 0,
        });
    }
    params.validate()?;
    if p.iter().chain(q).any(|r| r.points.is_empty()) {
        return Err(Error::EmptyCloud);
    }
    let p_trees: Vec<KdTree> = parallel::map_slice(p, |r| KdTree::new(&r.points));
    let q_trees: Vec<KdTree> = parallel::map_slice(q, |r| KdTree::new(&r.points));
    let q_thin: Vec<Vec<Point3>> = q.iter().map(|r| thin(&r.points, options.icp_points)).collect();

    let pairs: Vec<(usize, usize)> = (0..p.len()).flat_map(|ip| (0..q.len()).map(move |iq| (ip, iq))).collect();
    let per_pair = parallel::map_slice(&pairs, |&(ip, iq)| {
        let cands = alignments_for(&p[ip].points, &q[iq].points);
        screen(cands, &p_trees[ip], &thin(&q[iq].points, SCREEN_POINTS))
    });
    let tasks: Vec<(usize, usize, usize, RigidTransform)> = pairs
        .iter()
        .zip(per_pair)
        .flat_map(|(&(ip, iq), cands)| cands.into_iter().map(move |(c, init)| (ip, iq, c, init)))
        .collect();

    let register = |ip: usize, iq: usize, candidate: usize, init: &RigidTransform, source: &[Point3]| {
        let icp = icp_with_index(source, &p_trees[ip], init, params);
        MatchResult {
            region_p: p[ip].id,
            region_q: q[iq].id,
            transform: icp.transform,
            chamfer: chamfer_distance_indexed(&p_trees[ip], &q_trees[iq], &icp.transform),
            icp_iterations_used: icp.iterations,
            candidate,
            icp_rms: icp.rms,
            facing: !options.require_facing || facing(&p[ip], &q[iq], &icp.transform),
        }
    };
    let results = parallel::map_slice(&tasks, |&(ip, iq, candidate, ref init)| {
        register(ip, iq, candidate, init, &q_thin[iq])
    });

    // best candidate per pair; tasks are grouped by pair in order
    let mut all: Vec<MatchResult> = Vec::with_capacity(p.len() * q.len());
    for r in results {
        match all.last_mut() {
            Some(last) if last.region_p == r.region_p && last.region_q == r.region_q => {
                if rank(&r, last).is_lt() {
                    *last = r;
                }
            }
            _ => all.push(r),
        }
    }
    all.sort_by(rank);

    let thinned = q.iter().zip(&q_thin).any(|(r, t)| t.len() < r.points.len());
    if thinned && options.refine_pairs > 0 {
        let top = options.refine_pairs.min(all.len());
        let position = |id: usize, regions: &[Region]| regions.iter().position(|r| r.id == id).expect("id from input");
        let refined = parallel::map_slice(&all[..top], |m| {
            let (ip, iq) = (position(m.region_p, p), position(m.region_q, q));
            let mut r = register(ip, iq, m.candidate, &m.transform, &q[iq].points);
            r.icp_iterations_used += m.icp_iterations_used;
            r
        });
        all.splice(..top, refined);
        all.sort_by(rank);
    }
    Ok(Matching {
        best: all[0].clone(),
        pairs_evaluated: all.len(),
        all,
    })
}

/// The whole Q fragment moved by the winning transform.
pub fn align_fragments(q_cloud: &PointCloud, best: &MatchResult) -> PointCloud {
    best.transform.apply(q_cloud)
}

/// CSV dump of match results: ids, score, iterations, then the rotation
/// (row-major) and translation.
pub fn write_matches_csv(results: &[MatchResult], path: &Path) -> Result<()> {
    let mut out = String::from("region_p,region_q,chamfer,iterations,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n");
    for m in results {
        let nums: Vec<String> = m.transform.to_row_major().iter().map(|v| v.to_string()).collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.region_p,
            m.region_q,
            m.chamfer,
            m.icp_iterations_used,
            nums.join(",")
        ));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
