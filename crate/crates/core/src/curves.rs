//! Corner penalty, thresholding and morphological refinement of breaking
//! curves.
//!
//! For each point the centred covariance of its neighbours is
//! eigen-decomposed (`λ0 ≤ λ1 ≤ λ2`) and scored as `(λ2 − λ0) / λ2`: close to
//! 1 on flat surface, lower across creases and corners. Points scoring under a
//! threshold seed the curves, which are then cleaned up by dropping small
//! components, eroding dangling endpoints and dilating by graph neighbours.

use serde::{Deserialize, Serialize};

use crate::eigen;
use crate::error::Result;
use crate::geometry::{covariance, Point3, PointCloud, Tolerances};
use crate::graph::{connected_components, NeighborhoodGraph};
use crate::parallel;
use crate::spatial::KdTree;

/// Minimum neighbours for a meaningful covariance.
pub const MIN_NEIGHBORS: usize = 3;

/// Which neighbours feed each point's covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyNeighborhood {
    /// Adjacent vertices in the ε-graph.
    #[default]
    Graph,
    /// The `k` nearest points.
    Knn(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerPenaltyField {
    pub values: Vec<f64>,
    /// `(λ0, λ1, λ2)` ascending, negatives clamped to zero.
    pub eigenvalues: Vec<[f64; 3]>,
    /// Points with fewer than [`MIN_NEIGHBORS`] neighbours, scored as flat.
    pub sparse_points: usize,
}

/// Penalty of a point given its neighbours' positions (point excluded).
pub fn penalty_from_neighbors(neighbors: &[Point3]) -> (f64, [f64; 3]) {
    if neighbors.len() < MIN_NEIGHBORS {
        return (1.0, [0.0; 3]);
    }
    let mut lambda = eigen::eigenvalues(&covariance(neighbors));
    for l in &mut lambda {
        *l = l.max(0.0);
    }
    let value = if lambda[2] <= Tolerances::DEFAULT.degenerate_eigenvalue {
        1.0
    } else {
        ((lambda[2] - lambda[0]) / lambda[2]).clamp(0.0, 1.0)
    };
    (value, lambda)
}

fn field_from(results: Vec<((f64, [f64; 3]), bool)>) -> CornerPenaltyField {
    let sparse_points = results.iter().filter(|(_, sparse)| *sparse).count();
    let (values, eigenvalues) = results.into_iter().map(|(r, _)| r).unzip();
    CornerPenaltyField {
        values,
        eigenvalues,
        sparse_points,
    }
}

/// Corner penalty over graph neighbourhoods.
pub fn corner_penalty(cloud: &PointCloud, g: &NeighborhoodGraph) -> CornerPenaltyField {
    field_from(parallel::map_range(cloud.len(), |i| {
        let nbrs: Vec<Point3> = g.neighbors(i).iter().map(|&j| cloud[j]).collect();
        (penalty_from_neighbors(&nbrs), nbrs.len() < MIN_NEIGHBORS)
    }))
}

/// Corner penalty over fixed-size kNN neighbourhoods.
pub fn corner_penalty_knn(cloud: &PointCloud, index: &KdTree, k: usize) -> Result<CornerPenaltyField> {
    // validates k once up front
    index.knn_of(0, k)?;
    Ok(field_from(parallel::map_range(cloud.len(), |i| {
        let nbrs: Vec<Point3> = index
            .knn_of(i, k)
            .expect("k validated")
            .iter()
            .map(|n| cloud[n.index])
            .collect();
        (penalty_from_neighbors(&nbrs), nbrs.len() < MIN_NEIGHBORS)
    })))
}

/// `ω(p) < tau`.
pub fn threshold_curve_points(field: &CornerPenaltyField, tau: f64) -> Vec<bool> {
    field.values.iter().map(|&w| w < tau).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RefineParams {
    pub min_component: usize,
    pub prune_depth: usize,
    pub dilate_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakingCurveSet {
    pub member: Vec<bool>,
    /// Connected components of the members, ordered by smallest index.
    pub curves: Vec<Vec<usize>>,
}

impl BreakingCurveSet {
    /// Builds the set from a membership mask.
    pub fn from_mask(member: Vec<bool>, g: &NeighborhoodGraph) -> Result<Self> {
        let curves = connected_components(g, Some(&member))?;
        Ok(Self { member, curves })
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_member(&self, i: usize) -> bool {
        self.member[i]
    }
}

fn member_degree(mask: &[bool], g: &NeighborhoodGraph, i: usize) -> usize {
    g.neighbors(i).iter().filter(|&&j| mask[j]).count()
}

/// One endpoint-erosion pass: drops members with at most one member
/// neighbour. Closed loops are untouched.
pub fn prune_once(mask: &[bool], g: &NeighborhoodGraph) -> Vec<bool> {
    parallel::map_range(mask.len(), |i| mask[i] && member_degree(mask, g, i) >= 2)
}

/// One dilation pass: adds every graph neighbour of a member.
pub fn dilate_once(mask: &[bool], g: &NeighborhoodGraph) -> Vec<bool> {
    parallel::map_range(mask.len(), |i| mask[i] || g.neighbors(i).iter().any(|&j| mask[j]))
}

/// Opening-style cleanup of the thresholded mask.
pub fn refine_curves(raw: &[bool], g: &NeighborhoodGraph, params: &RefineParams) -> Result<BreakingCurveSet> {
    let mut mask = vec![false; raw.len()];
    for comp in connected_components(g, Some(raw))? {
        if comp.len() >= params.min_component {
            for i in comp {
                mask[i] = true;
            }
        }
    }
    for _ in 0..params.prune_depth {
        mask = prune_once(&mask, g);
    }
    for _ in 0..params.dilate_steps {
        mask = dilate_once(&mask, g);
    }
    BreakingCurveSet::from_mask(mask, g)
}
