use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, Mat3, Point3, PointCloud, RigidTransform};
use crate::spatial::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Correspondences farther apart than this are dropped (model units).
    pub correspondence_cutoff: f64,
    /// Stop once the RMS residual changes by less than this.
    pub convergence_eps: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            correspondence_cutoff: f64::INFINITY,
            convergence_eps: 1e-7,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("icp.max_iterations", "must be positive"));
        }
        if !(self.correspondence_cutoff > 0.0) {
            return Err(Error::invalid("icp.correspondence_cutoff", "must be positive"));
        }
        if !(self.convergence_eps > 0.0) {
            return Err(Error::invalid("icp.convergence_eps", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpOutcome {
    /// Maps source into the target frame.
    pub transform: RigidTransform,
    /// RMS correspondence distance under `transform`.
    pub rms: f64,
    /// Number of pose updates applied.
    pub iterations: usize,
    pub converged: bool,
    /// Set when fewer than three correspondences survived the cutoff.
    pub degenerate: bool,
    /// Residual before each update and after the last one.
    pub history: Vec<f64>,
}

/// Least-squares rigid motion taking `src[i]` onto `dst[i]` (Kabsch/SVD),
/// with reflection correction.
pub fn best_rigid_transform(src: &[Point3], dst: &[Point3]) -> RigidTransform {
    let cs = centroid(src);
    let cd = centroid(dst);
    let mut h = Mat3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let mut r = v * u.transpose();
    if r.determinant() < 0.0 {
        let mut v = v;
        v.column_mut(2).neg_mut();
        r = v * u.transpose();
    }
    RigidTransform {
        rotation: r,
        translation: cd.coords - r * cs.coords,
    }
}

/// Point-to-point ICP of `source` onto `target`, starting from `init`.
pub fn icp_point_to_point(
    source: &PointCloud,
    target: &PointCloud,
    init: &RigidTransform,
    params: &IcpParams,
) -> Result<IcpOutcome> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyCloud);
    }
    params.validate()?;
    Ok(icp_with_index(&source.points, &KdTree::new(&target.points), init, params))
}

/// ICP against a prebuilt target index.
pub fn icp_with_index(source: &[Point3], target: &KdTree, init: &RigidTransform, params: &IcpParams) -> IcpOutcome {
    let cutoff2 = params.correspondence_cutoff * params.correspondence_cutoff;
    let mut current = *init;
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut degenerate = false;
    let mut src = Vec::with_capacity(source.len());
    let mut dst = Vec::with_capacity(source.len());

    loop {
        src.clear();
        dst.clear();
        let mut sum2 = 0.0;
        for p in source {
            let moved = current.apply_point(p);
            if let Some((d2, j)) = target.nearest_within_d2(&moved, cutoff2) {
                src.push(moved);
                dst.push(target.points()[j]);
                sum2 += d2;
            }
        }
        if src.len() < 3 {
            degenerate = true;
            break;
        }
        let rms = (sum2 / src.len() as f64).sqrt();
        let prev = history.last().copied();
        history.push(rms);
        if prev.is_some_and(|p: f64| (p - rms).abs() < params.convergence_eps) {
            converged = true;
            break;
        }
        if iterations == params.max_iterations {
            break;
        }
        let delta = best_rigid_transform(&src, &dst);
        current = delta.compose(&current);
        iterations += 1;
    }

    IcpOutcome {
        transform: current,
        rms: history.last().copied().unwrap_or(f64::INFINITY),
        iterations,
        converged,
        degenerate,
        history,
    }
}
